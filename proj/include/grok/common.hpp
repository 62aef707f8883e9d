#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grok {

enum class Err {
  DivisionByZero,
  OperandOutOfRange,
  NoInverse,
  NonAssociativeOp,
  NotInGroup,
  NotPrimitiveRoot,
  GcdViolation,
  NonIntegerDecoding,
  ShapeMismatch,
  IndexOutOfRange,
  NotScalar,
  ConfigError,
  UnknownPrefix,
  VocabMismatch,
  ConfigMismatch,
  FileError,
  TooFewPairs,
  NotCommutative,
  EmptyAfterFilter,
  DegenerateData,
  ConfigParse,
  EmptyGroup,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void check(bool ok, Err code, const std::string& what) {
  if (!ok) fail(code, what);
}

// All randomness in the project flows through this generator so datasets,
// parameter init and shuffles come out byte-identical on every platform.
// std::mt19937 distributions are implementation-defined, hence the hand-rolled
// bounded draw, Box-Muller and Fisher-Yates below.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    // splitmix64 expansion of the seed into xoshiro256** state
    uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      w = z ^ (z >> 31);
    }
  }

  uint64_t next() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, bound), rejection sampled so there is no modulo bias
  uint64_t uniform(uint64_t bound) {
    if (bound == 0) fail(Err::IndexOutOfRange, "uniform bound must be positive");
    uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  // uniform in [0, 1)
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal(double mean, double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = 1.0 - real();  // (0, 1], keeps log finite
    double u2 = real();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + stddev * r * std::cos(a);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream separation: derive_seed(seed, "shuffle") and
// derive_seed(seed, "init") give unrelated generators from one run seed.
uint64_t derive_seed(uint64_t seed, std::string_view tag);

// FNV-1a over arbitrary bytes, used for hashing token sequences into set keys.
uint64_t hash_bytes(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);

inline uint64_t hash_ints(const std::vector<int>& v, uint64_t seed = 0xcbf29ce484222325ull) {
  return hash_bytes(v.data(), v.size() * sizeof(int), seed);
}

}  // namespace grok
