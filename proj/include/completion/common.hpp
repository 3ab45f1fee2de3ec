// common.hpp — error types, deterministic RNG, and number formatting shared
// by every module.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace completion {

// Error hierarchy. The CLI maps these onto exit codes: ConfigError -> 1,
// LoadError/ValidationError -> 2, TrainError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct LoadError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct TrainError : Error {
  using Error::Error;
};
// Training diverged (non-finite loss); unlike other TrainErrors this is a
// configuration problem, not a data degeneracy, and aborts a whole run.
struct DivergenceError : TrainError {
  using TrainError::TrainError;
};

// Deterministic random source. Distributions are hand-rolled on top of
// mt19937_64 so that streams are identical across compilers and platforms,
// which the serialized-output tests rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // splitmix64 step; full 2^64 period over the counter state.
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = n * ((~0ull) / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Fisher-Yates with this generator; std::shuffle is not used because its
  // sequence is unspecified by the standard.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit mix for deriving independent sub-seeds (per action, per
// fold) from a run seed. FNV-1a over the tag, then splitmix over both.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag,
                       std::uint64_t index = 0);

// Shortest round-trip decimal form of a double ("inf"/"-inf"/"nan" for
// non-finite values); parse is its exact inverse.
std::string format_double(double v);
double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);

}  // namespace completion
