// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "o3aed/core.hpp"

namespace o3aed::efast {

// ---------------------------------------------------------------------------
// Sampling plan
// ---------------------------------------------------------------------------

/// Extended FAST sampling plan. Each factor gets its own search curve of Ns
/// points; on curve i the factor of interest oscillates at omega_hi =
/// floor((Ns-1)/(2M)) and the complementary factors cycle through the low
/// frequencies 1..max_comp with max_comp = max(1, floor(omega_hi/(2M))).
/// The separation omega_hi > M * max_comp makes the partial-variance bands
/// disjoint, so 0 <= S_i <= ST_i <= 1 holds by construction.
struct FastPlan {
  std::size_t n = 0;
  int M = 4;
  std::size_t Ns = 65;
  std::size_t omega_hi = 8;
  std::size_t max_comp = 1;
  std::vector<std::vector<double>> phases;  // [curve][factor], in [0, 2pi)
  std::uint64_t seed = 0;

  std::size_t total_evaluations() const { return n * Ns; }

  /// Frequency of `factor` on `curve`.
  std::size_t frequency(std::size_t curve, std::size_t factor) const {
    if (factor == curve) return omega_hi;
    const std::size_t pos = factor < curve ? factor : factor - 1;
    return 1 + pos % max_comp;
  }
};

inline FastPlan fast_plan(std::size_t n, int M, std::size_t Ns, std::uint64_t seed) {
  if (n < 1) throw InvalidPlan("fast_plan: n must be >= 1");
  if (M < 1) throw InvalidPlan("fast_plan: M must be >= 1");
  if (Ns % 2 == 0) throw InvalidPlan("fast_plan: Ns must be odd");
  FastPlan p;
  p.n = n;
  p.M = M;
  p.Ns = Ns;
  p.seed = seed;
  p.omega_hi = (Ns - 1) / (2 * static_cast<std::size_t>(M));
  p.max_comp = std::max<std::size_t>(1, p.omega_hi / (2 * static_cast<std::size_t>(M)));
  if (p.omega_hi <= static_cast<std::size_t>(M) * p.max_comp)
    throw InvalidPlan("fast_plan: Ns too small for frequency separation at this M");
  Rng rng(seed);
  p.phases.assign(n, std::vector<double>(n));
  for (auto& row : p.phases)
    for (auto& phi : row) phi = rng.uniform(0.0, 2.0 * M_PI);
  return p;
}

/// Plan with the default interference factor M = 4 and the minimal per-factor
/// sample count 65 used by the budget arithmetic elsewhere.
inline FastPlan fast_plan(std::size_t n, std::uint64_t seed) { return fast_plan(n, 4, 65, seed); }

// ---------------------------------------------------------------------------
// Index estimation
// ---------------------------------------------------------------------------

struct FastIndices {
  std::vector<double> S;   // first-order indices
  std::vector<double> ST;  // total indices
  double V = 0.0;          // total variance estimate (mean over curves)
};

namespace detail {

/// Points of curve `i`: x_k(s_j) = a_k + (b_k - a_k) (1/2 + asin(sin(w_k s_j
/// + phi_k)) / pi) over the grid s_j = -pi + pi (2j+1)/Ns.
inline std::vector<Point> curve_points(const FastPlan& plan, const BoxDomain& domain,
                                       std::size_t curve) {
  std::vector<Point> pts(plan.Ns, Point(plan.n));
  for (std::size_t j = 0; j < plan.Ns; ++j) {
    const double s = -M_PI + M_PI * (2.0 * j + 1.0) / static_cast<double>(plan.Ns);
    for (std::size_t k = 0; k < plan.n; ++k) {
      const double w = static_cast<double>(plan.frequency(curve, k));
      const double u = 0.5 + std::asin(std::sin(w * s + plan.phases[curve][k])) / M_PI;
      pts[j][k] = domain.lower()[k] + domain.range(k) * u;
    }
  }
  return pts;
}

/// 2 (A_k^2 + B_k^2) with A_k = (1/Ns) sum_j y_j cos(k s_j), B_k likewise
/// with sin.
inline double spectral_power(const std::vector<double>& y, std::size_t k) {
  const std::size_t Ns = y.size();
  double A = 0.0, B = 0.0;
  for (std::size_t j = 0; j < Ns; ++j) {
    const double s = -M_PI + M_PI * (2.0 * j + 1.0) / static_cast<double>(Ns);
    A += y[j] * std::cos(k * s);
    B += y[j] * std::sin(k * s);
  }
  A /= static_cast<double>(Ns);
  B /= static_cast<double>(Ns);
  return 2.0 * (A * A + B * B);
}

/// Powers for k = 1..kmax in one sweep, using the angle-addition recurrence
/// per grid point instead of kmax trig calls.
inline std::vector<double> spectral_powers(const std::vector<double>& y, std::size_t kmax) {
  const std::size_t Ns = y.size();
  std::vector<double> A(kmax + 1, 0.0), B(kmax + 1, 0.0);
  for (std::size_t j = 0; j < Ns; ++j) {
    const double s = -M_PI + M_PI * (2.0 * j + 1.0) / static_cast<double>(Ns);
    const double c1 = std::cos(s), s1 = std::sin(s);
    double ck = 1.0, sk = 0.0;  // cos(0 s), sin(0 s)
    for (std::size_t k = 1; k <= kmax; ++k) {
      const double cn = ck * c1 - sk * s1;
      const double sn = sk * c1 + ck * s1;
      ck = cn;
      sk = sn;
      A[k] += y[j] * ck;
      B[k] += y[j] * sk;
    }
  }
  std::vector<double> t(kmax + 1, 0.0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double a = A[k] / static_cast<double>(Ns);
    const double b = B[k] / static_cast<double>(Ns);
    t[k] = 2.0 * (a * a + b * b);
  }
  return t;
}

}  // namespace detail

/// Estimate S_i and ST_i by evaluating `target` along each factor's curve.
/// For moderate Ns the total variance is accumulated over the full spectrum,
/// which keeps V_i + V_~i <= V term-by-term; for large Ns it is computed as
/// the sample variance, which equals the spectral sum by orthogonality of
/// the grid.
inline FastIndices fast_indices(const BatchTarget& target, const BoxDomain& domain,
                                const FastPlan& plan) {
  if (domain.dim() != plan.n) throw InvalidPlan("fast_indices: plan/domain dimension mismatch");
  FastIndices out;
  out.S.resize(plan.n);
  out.ST.resize(plan.n);
  const std::size_t half = (plan.Ns - 1) / 2;
  const std::size_t lo_band = static_cast<std::size_t>(plan.M) * plan.max_comp;
  double v_sum = 0.0;
  const bool full_spectrum = plan.Ns <= 2049;
  for (std::size_t i = 0; i < plan.n; ++i) {
    const std::vector<double> y = target(detail::curve_points(plan, domain, i));
    double mean_sq = 0.0, m1 = 0.0;
    for (double v : y) {
      mean_sq += v * v;
      m1 += v;
    }
    mean_sq /= static_cast<double>(plan.Ns);
    m1 /= static_cast<double>(plan.Ns);

    double Vi = 0.0, Vnoti = 0.0, V = 0.0;
    if (full_spectrum) {
      const auto t = detail::spectral_powers(y, half);
      for (int p = 1; p <= plan.M; ++p) Vi += t[static_cast<std::size_t>(p) * plan.omega_hi];
      for (std::size_t k = 1; k <= lo_band; ++k) Vnoti += t[k];
      // Summing the same nonnegative terms keeps Vi + Vnoti <= V in floating
      // point as well.
      V = Vi + Vnoti;
      for (std::size_t k = 1; k <= half; ++k) {
        const bool in_hi =
            k % plan.omega_hi == 0 && k / plan.omega_hi <= static_cast<std::size_t>(plan.M);
        if (k <= lo_band || in_hi) continue;
        V += t[k];
      }
    } else {
      const auto t = detail::spectral_powers(y, lo_band);
      for (std::size_t k = 1; k <= lo_band; ++k) Vnoti += t[k];
      for (int p = 1; p <= plan.M; ++p)
        Vi += detail::spectral_power(y, static_cast<std::size_t>(p) * plan.omega_hi);
      // Equals the full spectral sum by orthogonality of the s-grid.
      V = mean_sq - m1 * m1;
    }
    if (!(V >= 1e-12 * std::max(1.0, mean_sq)))
      throw DegenerateVariance("fast_indices: negligible variance along curve " +
                               std::to_string(i + 1) + " (constant target?)");
    out.S[i] = Vi / V;
    out.ST[i] = 1.0 - Vnoti / V;
    v_sum += V;
  }
  out.V = v_sum / static_cast<double>(plan.n);
  return out;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// `i,S,ST` with 1-based variable index.
inline void save_indices_csv(const FastIndices& fi, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "i,S,ST\n";
  for (std::size_t i = 0; i < fi.S.size(); ++i)
    out << (i + 1) << ',' << format_double(fi.S[i]) << ',' << format_double(fi.ST[i]) << "\n";
}

}  // namespace o3aed::efast
