#ifndef RELASSAY_UTIL_H_
#define RELASSAY_UTIL_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relassay {

// Error taxonomy surfaced through the C API as status codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NetworkError : Error {
  using Error::Error;
};
struct JudgeError : Error {
  using Error::Error;
};
struct InvalidInput : Error {
  using Error::Error;
};

std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string> split_lines(std::string_view text);

// Strict numeric parsing, locale independent ('.' decimal point always).
bool parse_long(std::string_view s, long *out);
bool parse_double(std::string_view s, double *out);
std::string format_double(double v);

std::string lowercase(std::string_view s);

// SHA-256 as lowercase hex; used for prompt hashes and cache keys.
std::string sha256_hex(std::string_view data);

// splitmix64 step; the basis of all seeded randomness in the toolkit so
// results are identical across platforms and standard library versions.
std::uint64_t splitmix64(std::uint64_t *state);

// 64-bit FNV-1a, mixed once; keys per-subject mock noise draws.
std::uint64_t hash64(std::string_view s);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(&state_); }
  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  // uniform in [0, 1)
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  template <typename T>
  void shuffle(std::vector<T> *v) {
    if (v->empty()) return;
    for (std::size_t i = v->size() - 1; i > 0; i--) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap((*v)[i], (*v)[j]);
    }
  }

 private:
  std::uint64_t state_;
};

std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view content);
// ISO-8601 UTC timestamp, seconds resolution.
std::string timestamp_utc();

}  // namespace relassay

#endif  // RELASSAY_UTIL_H_
