// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace o3aed {

inline constexpr const char* kVersion = "0.1.0";

/// A point in input space, either in original domain coordinates or in the
/// unit cube, depending on context.
using Point = std::vector<double>;

/// Evaluation targets are consumed batch-wise so surrogate predictions can
/// be vectorized; `batch_of` adapts a pointwise function.
using BatchTarget = std::function<std::vector<double>(const std::vector<Point>&)>;

template <class F>
BatchTarget batch_of(F fn) {
  return [fn = std::move(fn)](const std::vector<Point>& pts) {
    std::vector<double> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(fn(p));
    return out;
  };
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfDomain : Error {
  using Error::Error;
};
struct BudgetExhausted : Error {
  using Error::Error;
};
struct EvalFailed : Error {
  using Error::Error;
};
struct UnknownBuiltin : Error {
  using Error::Error;
};
struct CountExceedsPopulation : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct SingularCorrelation : Error {
  using Error::Error;
};
struct InvalidPlan : Error {
  using Error::Error;
};
struct DegenerateVariance : Error {
  using Error::Error;
};
struct DegenerateNominal : Error {
  using Error::Error;
};
struct IncompleteEffects : Error {
  using Error::Error;
};
struct ZeroReference : Error {
  using Error::Error;
};
struct KeyMismatch : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Warnings
// ---------------------------------------------------------------------------

/// Process-wide warning sink. Tests may swap it out to capture messages.
inline std::function<void(const std::string&)>& warn_handler() {
  static std::function<void(const std::string&)> handler =
      [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
  return handler;
}

inline void warn(const std::string& msg) { warn_handler()(msg); }

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Seeded RNG with fixed bit-to-double conversions so that identical seeds
/// give identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (explicit, for cross-platform streams).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// First `k` elements of a seeded Fisher-Yates shuffle of 0..pop-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t pop, std::size_t k) {
    if (k > pop) throw CountExceedsPopulation("sample: k exceeds population");
    std::vector<std::size_t> idx(pop);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + below(pop - i)]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline double sq(double x) { return x * x; }

inline double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += sq(a[k] - b[k]);
  return s;
}

inline double dist(const Point& a, const Point& b) { return std::sqrt(dist2(a, b)); }

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// FNV-1a 64-bit hash, used to fingerprint artifact files in manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace o3aed
