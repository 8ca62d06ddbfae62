#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace brainhgt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors. Each class maps to a stable nonzero process exit code (see README).
// ---------------------------------------------------------------------------

enum class Errc {
  internal = 1,
  bad_config = 2,
  io_error = 3,
  constant_row = 4,
  empty_graph = 5,
  disconnected_input = 6,
  dense_weight_zero = 7,
  bad_shape = 8,
  rank_deficient = 9,
  shape_mismatch = 10,
  not_scalar = 11,
  empty_set = 12,
  empty_group = 13,
  single_class_split = 14,
  diverged = 15,
  checksum_mismatch = 16,
  missing_artifact = 17,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 plus hand-rolled transforms; the <random>
// distributions are implementation-defined, these are stable across standard
// libraries.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // uniform on [0,1) with 53-bit resolution
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, spare value cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586477 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // unbiased integer in [0, n)
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 mix: derive an independent child seed from (base, stream)
inline uint64_t mix_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Logging via BRAINHGT_LOG = debug|info|warn|error|off (default warn).
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info, warn, error, off };

LogLevel log_level();
void log_msg(LogLevel lvl, const std::string& msg);
inline void log_debug(const std::string& m) { log_msg(LogLevel::debug, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::info, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::warn, m); }
inline void log_error(const std::string& m) { log_msg(LogLevel::error, m); }

// FNV-1a, used for config hashes and checkpoint checksums.
uint64_t fnv1a(const void* data, size_t len, uint64_t h = 14695981039346656037ull);

// Chunked parallel map over [0, n); fn must be safe for disjoint indices.
// threads <= 1 runs inline.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace brainhgt
