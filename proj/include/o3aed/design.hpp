// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "o3aed/mvmsl.hpp"

namespace o3aed::design {

enum class DesignKind { lhs, maximin_lhs, oo, optimizer_trace };

/// A set of design points in the unit cube.
struct DesignMatrix {
  std::vector<Point> points;
  DesignKind kind = DesignKind::lhs;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Latin hypercube
// ---------------------------------------------------------------------------

/// m points with the Latin property: in every coordinate the points occupy
/// the m strata [j/m, (j+1)/m) exactly once. With jitter the in-stratum
/// position is uniform random; without it, the stratum midpoint.
inline DesignMatrix latin_hypercube(std::size_t m, std::size_t n, std::uint64_t seed,
                                    bool jitter = true) {
  if (m < 1 || n < 1) throw std::invalid_argument("latin_hypercube: m, n must be >= 1");
  Rng rng(seed);
  DesignMatrix d;
  d.kind = DesignKind::lhs;
  d.seed = seed;
  d.points.assign(m, Point(n));
  std::vector<std::size_t> perm(m);
  for (std::size_t k = 0; k < n; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    for (std::size_t i = 0; i < m; ++i) {
      const double in_stratum = jitter ? rng.uniform() : 0.5;
      d.points[i][k] = (static_cast<double>(perm[i]) + in_stratum) / static_cast<double>(m);
    }
  }
  return d;
}

inline double min_pairwise_distance(const std::vector<Point>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, dist2(pts[i], pts[j]));
  return std::sqrt(best);
}

/// Default swap budget: 10,000 improvement attempts up to m = 1000, scaled
/// down for larger designs to keep the cost near-linear overall.
inline std::size_t default_maximin_iters(std::size_t m) {
  return m <= 1000 ? 10000 : std::max<std::size_t>(1000, 10'000'000 / m);
}

/// Maximin-improved LHD: random within-column swaps of two points' stratum
/// assignments, accepted when the minimum distance among the affected pairs
/// does not decrease. The Latin property is preserved by construction and
/// the global minimum pairwise distance never drops below its start value.
inline DesignMatrix maximin_lhs(std::size_t m, std::size_t n, std::uint64_t seed,
                                std::size_t iters = SIZE_MAX, bool jitter = true) {
  if (m < 2) throw std::invalid_argument("maximin_lhs: m must be >= 2");
  if (iters == SIZE_MAX) iters = default_maximin_iters(m);
  DesignMatrix d = latin_hypercube(m, n, seed, jitter);
  d.kind = DesignKind::maximin_lhs;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);

  auto affected_min = [&](std::size_t r1, std::size_t r2) {
    double best = dist2(d.points[r1], d.points[r2]);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == r1 || j == r2) continue;
      best = std::min({best, dist2(d.points[r1], d.points[j]), dist2(d.points[r2], d.points[j])});
    }
    return best;
  };

  for (std::size_t it = 0; it < iters; ++it) {
    const std::size_t c = rng.below(n);
    const std::size_t r1 = rng.below(m);
    std::size_t r2 = rng.below(m - 1);
    if (r2 >= r1) ++r2;
    const double before = affected_min(r1, r2);
    std::swap(d.points[r1][c], d.points[r2][c]);
    const double after = affected_min(r1, r2);
    if (after < before) std::swap(d.points[r1][c], d.points[r2][c]);  // revert
  }
  return d;
}

// ---------------------------------------------------------------------------
// Objective-oriented design
// ---------------------------------------------------------------------------

/// Perturbation-subset design around a nominal point: which univariate,
/// bivariate and trivariate perturbation samples to evaluate, all in unit-
/// cube coordinates.
struct OODesignSpec {
  Point center;        // normalized nominal point
  double rho = 0.2;    // step fraction of each coordinate range
  std::size_t n_uni = 0, n_bi = 0, n_tri = 0;
  std::uint64_t seed = 0;
};

/// The design points for `spec`: n_uni univariate samples plus n_bi / n_tri
/// samples drawn without replacement from the enumerated bivariate and
/// trivariate populations (seeded Fisher-Yates over the canonical tuple
/// order). Points leaving the unit cube are clipped, with a warning.
inline DesignMatrix oo_design(const OODesignSpec& spec) {
  const std::size_t n = spec.center.size();
  if (n < 1) throw std::invalid_argument("oo_design: empty center");
  for (double c : spec.center)
    if (!(c >= 0.0 && c <= 1.0)) throw OutOfDomain("oo_design: center outside unit cube");
  if (!(spec.rho > 0.0 && spec.rho < 1.0))
    throw std::invalid_argument("oo_design: rho must be in (0,1)");
  const std::size_t pop1 = mvmsl::tuple_population(n, 1);
  const std::size_t pop2 = mvmsl::tuple_population(n, 2);
  const std::size_t pop3 = mvmsl::tuple_population(n, 3);
  if (spec.n_uni > pop1 || spec.n_bi > pop2 || spec.n_tri > pop3)
    throw CountExceedsPopulation("oo_design: requested count exceeds sample population");

  const BoxDomain unit = BoxDomain::cube(n, 0.0, 1.0);
  Rng rng(spec.seed);
  DesignMatrix d;
  d.kind = DesignKind::oo;
  d.seed = spec.seed;
  d.points.reserve(spec.n_uni + spec.n_bi + spec.n_tri);

  std::size_t n_clipped = 0;
  auto add_level = [&](int level, std::size_t count, std::size_t pop) {
    if (count == 0) return;
    const auto tuples = mvmsl::enumerate_tuples(n, level);
    std::vector<std::size_t> pick;
    if (count == pop) {
      pick.resize(pop);
      std::iota(pick.begin(), pick.end(), std::size_t{0});
    } else {
      pick = rng.sample_without_replacement(pop, count);
      std::sort(pick.begin(), pick.end());
    }
    for (std::size_t id : pick) {
      bool clipped = false;
      d.points.push_back(mvmsl::apply_tuple(unit, spec.center, spec.rho, tuples[id], &clipped));
      if (clipped) ++n_clipped;
    }
  };
  add_level(1, spec.n_uni, pop1);
  add_level(2, spec.n_bi, pop2);
  add_level(3, spec.n_tri, pop3);
  if (n_clipped > 0)
    warn("oo_design: " + std::to_string(n_clipped) + " of " + std::to_string(d.points.size()) +
         " design points clipped to the unit cube");
  return d;
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

inline void save_csv(const DesignMatrix& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::size_t n = d.points.empty() ? 0 : d.points.front().size();
  for (std::size_t k = 1; k <= n; ++k) out << (k > 1 ? "," : "") << 'x' << k;
  out << "\n";
  for (const auto& p : d.points) {
    for (std::size_t k = 0; k < n; ++k) out << (k ? "," : "") << format_double(p[k]);
    out << "\n";
  }
}

}  // namespace o3aed::design
