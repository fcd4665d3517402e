// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "o3aed/core.hpp"

namespace o3aed::mvmsl {

// ---------------------------------------------------------------------------
// Perturbation tuples
// ---------------------------------------------------------------------------

/// One-, two- or three-coordinate perturbation pattern: which coordinates to
/// move and in which direction. Indices are 0-based, sorted ascending; the
/// step size rho is carried by the effects container, not the key.
struct PerturbationTuple {
  int level;                 // 1, 2 or 3
  std::array<int, 3> idx;    // first `level` entries used, rest -1
  std::array<int, 3> sign;   // +1 / -1, same convention

  static PerturbationTuple uni(int i, int s) { return {1, {i, -1, -1}, {s, 0, 0}}; }
  static PerturbationTuple bi(int i, int j, int si, int sj) { return {2, {i, j, -1}, {si, sj, 0}}; }
  static PerturbationTuple tri(int i, int j, int k, int si, int sj, int sk) {
    return {3, {i, j, k}, {si, sj, sk}};
  }

  // Lexicographic order: level, then indices, then signs with + before -.
  friend bool operator<(const PerturbationTuple& a, const PerturbationTuple& b) {
    if (a.level != b.level) return a.level < b.level;
    if (a.idx != b.idx) return a.idx < b.idx;
    for (int t = 0; t < a.level; ++t)
      if (a.sign[t] != b.sign[t]) return a.sign[t] > b.sign[t];  // +1 sorts first
    return false;
  }
  friend bool operator==(const PerturbationTuple& a, const PerturbationTuple& b) {
    return a.level == b.level && a.idx == b.idx && a.sign == b.sign;
  }
};

/// Number of perturbation samples at each level: 2n, 2n(n-1) and
/// 4n(n-1)(n-2)/3 for levels 1, 2, 3.
inline std::size_t tuple_population(std::size_t n, int level) {
  switch (level) {
    case 1: return 2 * n;
    case 2: return n < 2 ? 0 : 2 * n * (n - 1);
    case 3: return n < 3 ? 0 : 4 * n * (n - 1) * (n - 2) / 3;
    default: throw std::invalid_argument("tuple_population: level must be 1..3");
  }
}

/// All tuples of one level in canonical order: coordinate combinations
/// lexicographically (i < j < k), then the 2^level sign patterns counted in
/// binary with + = 0 and the first index as the most significant bit.
inline std::vector<PerturbationTuple> enumerate_tuples(std::size_t n, int level) {
  std::vector<PerturbationTuple> out;
  out.reserve(tuple_population(n, level));
  const auto signs_of = [](int bits, int m, std::array<int, 3>& s) {
    for (int t = 0; t < m; ++t) s[t] = (bits >> (m - 1 - t)) & 1 ? -1 : +1;
  };
  if (level == 1) {
    for (int i = 0; i < static_cast<int>(n); ++i)
      for (int b = 0; b < 2; ++b) {
        PerturbationTuple t{1, {i, -1, -1}, {0, 0, 0}};
        signs_of(b, 1, t.sign);
        out.push_back(t);
      }
  } else if (level == 2) {
    for (int i = 0; i < static_cast<int>(n); ++i)
      for (int j = i + 1; j < static_cast<int>(n); ++j)
        for (int b = 0; b < 4; ++b) {
          PerturbationTuple t{2, {i, j, -1}, {0, 0, 0}};
          signs_of(b, 2, t.sign);
          out.push_back(t);
        }
  } else if (level == 3) {
    for (int i = 0; i < static_cast<int>(n); ++i)
      for (int j = i + 1; j < static_cast<int>(n); ++j)
        for (int k = j + 1; k < static_cast<int>(n); ++k)
          for (int b = 0; b < 8; ++b) {
            PerturbationTuple t{3, {i, j, k}, {0, 0, 0}};
            signs_of(b, 3, t.sign);
            out.push_back(t);
          }
  } else {
    throw std::invalid_argument("enumerate_tuples: level must be 1..3");
  }
  return out;
}

inline std::vector<PerturbationTuple> enumerate_all(std::size_t n) {
  std::vector<PerturbationTuple> out = enumerate_tuples(n, 1);
  if (n >= 2) {
    auto t2 = enumerate_tuples(n, 2);
    out.insert(out.end(), t2.begin(), t2.end());
  }
  if (n >= 3) {
    auto t3 = enumerate_tuples(n, 3);
    out.insert(out.end(), t3.begin(), t3.end());
  }
  return out;
}

/// Perturbed point for one tuple: move each listed coordinate by
/// sign * rho * (b_k - a_k) from the nominal point, then clip into the
/// domain. `clipped` reports whether any coordinate hit the boundary.
inline Point apply_tuple(const BoxDomain& domain, const Point& xbar, double rho,
                         const PerturbationTuple& t, bool* clipped = nullptr) {
  Point p = xbar;
  for (int s = 0; s < t.level; ++s) {
    const int k = t.idx[s];
    p[k] += t.sign[s] * rho * domain.range(k);
  }
  Point q = domain.clip(p);
  if (clipped) *clipped = (q != p);
  return q;
}

// ---------------------------------------------------------------------------
// Elementary effects
// ---------------------------------------------------------------------------

/// Absolute relative output changes |f(xbar) - f(perturbed)| / |f(xbar)|
/// for a set of perturbation tuples at one step fraction rho.
struct ElementaryEffects {
  Point base_x;
  double base_f = 0.0;
  double rho = 0.0;
  std::map<PerturbationTuple, double> effects;
};

inline ElementaryEffects elementary_effects(const BatchTarget& target, const BoxDomain& domain,
                                            const Point& xbar, double rho,
                                            const std::vector<PerturbationTuple>& tuples) {
  if (!domain.contains(xbar)) throw OutOfDomain("elementary_effects: nominal point outside domain");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("elementary_effects: rho must be in (0,1)");
  ElementaryEffects out;
  out.base_x = xbar;
  out.rho = rho;
  out.base_f = target({xbar}).at(0);
  if (std::abs(out.base_f) < 1e-12)
    throw DegenerateNominal(
        "elementary_effects: |f(nominal)| < 1e-12; shift the objective by a constant");
  std::vector<Point> pts;
  pts.reserve(tuples.size());
  std::size_t n_clipped = 0;
  std::string clipped_example;
  for (const auto& t : tuples) {
    bool clipped = false;
    pts.push_back(apply_tuple(domain, xbar, rho, t, &clipped));
    if (clipped) {
      ++n_clipped;
      if (clipped_example.empty()) {
        for (int s = 0; s < t.level; ++s)
          clipped_example += (s ? ";" : "") + std::to_string(t.idx[s] + 1) +
                             (t.sign[s] > 0 ? "+" : "-");
      }
    }
  }
  const std::vector<double> f = target(pts);
  for (std::size_t i = 0; i < tuples.size(); ++i)
    out.effects[tuples[i]] = std::abs(out.base_f - f[i]) / std::abs(out.base_f);
  if (n_clipped > 0)
    warn("elementary_effects: " + std::to_string(n_clipped) +
         " perturbation sample(s) clipped to the domain (first: " + clipped_example + ")");
  return out;
}

/// Full enumeration over all levels.
inline ElementaryEffects elementary_effects_all(const BatchTarget& target, const BoxDomain& domain,
                                                const Point& xbar, double rho) {
  return elementary_effects(target, domain, xbar, rho, enumerate_all(xbar.size()));
}

// ---------------------------------------------------------------------------
// Aggregated per-variable indices
// ---------------------------------------------------------------------------

/// Per-variable aggregates of the elementary effects: SI1[i] averages the two
/// univariate effects, SI2_pair(i,j) the four bivariate sign patterns,
/// SI3_triple the eight trivariate ones; SI2[i] and SI3[i] average those over
/// all combinations containing variable i.
struct LocalIndices {
  std::vector<double> SI1;                   // n
  Eigen::MatrixXd SI2_pair;                  // n x n symmetric, diagonal unused (0)
  std::map<std::array<int, 3>, double> SI3_triple;  // key i<j<k
  std::vector<double> SI2;                   // n
  std::vector<double> SI3;                   // n
  double rho = 0.0;
};

inline LocalIndices aggregate(const ElementaryEffects& eff) {
  const std::size_t n = eff.base_x.size();
  for (int level = 1; level <= (n >= 3 ? 3 : (n >= 2 ? 2 : 1)); ++level) {
    for (const auto& t : enumerate_tuples(n, level)) {
      if (!eff.effects.count(t))
        throw IncompleteEffects("aggregate: effects are not fully enumerated (level " +
                                std::to_string(level) + ")");
    }
  }
  LocalIndices out;
  out.rho = eff.rho;
  out.SI1.assign(n, 0.0);
  out.SI2.assign(n, 0.0);
  out.SI3.assign(n, 0.0);
  out.SI2_pair = Eigen::MatrixXd::Zero(n, n);

  for (int i = 0; i < static_cast<int>(n); ++i) {
    out.SI1[i] = 0.5 * (eff.effects.at(PerturbationTuple::uni(i, +1)) +
                        eff.effects.at(PerturbationTuple::uni(i, -1)));
  }
  for (int i = 0; i < static_cast<int>(n); ++i) {
    for (int j = i + 1; j < static_cast<int>(n); ++j) {
      double s = 0.0;
      for (int si : {+1, -1})
        for (int sj : {+1, -1}) s += eff.effects.at(PerturbationTuple::bi(i, j, si, sj));
      out.SI2_pair(i, j) = out.SI2_pair(j, i) = s / 4.0;
    }
  }
  if (n >= 3) {
    for (int i = 0; i < static_cast<int>(n); ++i)
      for (int j = i + 1; j < static_cast<int>(n); ++j)
        for (int k = j + 1; k < static_cast<int>(n); ++k) {
          double s = 0.0;
          for (int si : {+1, -1})
            for (int sj : {+1, -1})
              for (int sk : {+1, -1})
                s += eff.effects.at(PerturbationTuple::tri(i, j, k, si, sj, sk));
          out.SI3_triple[{i, j, k}] = s / 8.0;
        }
  }
  if (n >= 2) {
    for (int i = 0; i < static_cast<int>(n); ++i) {
      double s = 0.0;
      for (int j = 0; j < static_cast<int>(n); ++j)
        if (j != i) s += out.SI2_pair(i, j);
      out.SI2[i] = s / static_cast<double>(n - 1);
    }
  }
  if (n >= 3) {
    for (const auto& [key, val] : out.SI3_triple) {
      out.SI3[key[0]] += val;
      out.SI3[key[1]] += val;
      out.SI3[key[2]] += val;
    }
    const double denom = static_cast<double>((n - 1) * (n - 2)) / 2.0;
    for (auto& v : out.SI3) v /= denom;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigen-indices of the interaction matrix
// ---------------------------------------------------------------------------

/// Symmetric matrix with the univariate aggregates on the diagonal and the
/// bivariate pair aggregates off it, plus its leading eigen-structure.
struct EigIndices {
  Eigen::MatrixXd H;                // n x n symmetric
  std::vector<double> eigvals;      // sorted by |lambda| descending
  std::vector<double> U1abs, U2abs; // componentwise |U| of the top two eigenvectors
};

inline EigIndices h_eig(const LocalIndices& li) {
  const std::size_t n = li.SI1.size();
  if (n < 2) throw std::invalid_argument("h_eig: need at least 2 variables");
  EigIndices out;
  out.H = li.SI2_pair;
  for (std::size_t i = 0; i < n; ++i) out.H(i, i) = li.SI1[i];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.H);
  if (solver.info() != Eigen::Success) throw Error("h_eig: eigendecomposition failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();

  // Order by |lambda| descending; ties prefer the larger signed value, then
  // the lower index in the solver's output.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double aa = std::abs(vals[a]), ab = std::abs(vals[b]);
    if (aa != ab) return aa > ab;
    return vals[a] > vals[b];
  });
  out.eigvals.resize(n);
  for (std::size_t r = 0; r < n; ++r) out.eigvals[r] = vals[order[r]];

  const auto unit_abs = [&](int col) {
    Eigen::VectorXd u = vecs.col(col);
    u.normalize();
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(u[i]);
    return a;
  };
  out.U1abs = unit_abs(order[0]);
  out.U2abs = unit_abs(order[1]);
  return out;
}

// ---------------------------------------------------------------------------
// One-call analysis
// ---------------------------------------------------------------------------

struct Analysis {
  ElementaryEffects effects;
  LocalIndices local;
  EigIndices eig;
};

/// Full enumeration of effects on `target` (the expensive function itself or
/// a fitted surrogate evaluated in domain coordinates), then aggregation and
/// eigen-analysis.
inline Analysis analyze(const BatchTarget& target, const BoxDomain& domain, const Point& xbar,
                        double rho) {
  Analysis a;
  a.effects = elementary_effects_all(target, domain, xbar, rho);
  a.local = aggregate(a.effects);
  a.eig = h_eig(a.local);
  return a;
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

/// Per-tuple effects: `level,indices,signs,rho,effect` with 1-based indices
/// joined by ';' (e.g. "1;3", "+;-").
inline void save_effects_csv(const ElementaryEffects& eff, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "level,indices,signs,rho,effect\n";
  for (const auto& [t, e] : eff.effects) {
    out << t.level << ',';
    for (int s = 0; s < t.level; ++s) out << (s ? ";" : "") << (t.idx[s] + 1);
    out << ',';
    for (int s = 0; s < t.level; ++s) out << (s ? ";" : "") << (t.sign[s] > 0 ? '+' : '-');
    out << ',' << format_double(eff.rho) << ',' << format_double(e) << "\n";
  }
}

/// Per-variable aggregates: `i,SI1,SI2,SI3,E1,E2` with 1-based i.
inline void save_aggregates_csv(const LocalIndices& li, const EigIndices& eig,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "i,SI1,SI2,SI3,E1,E2\n";
  for (std::size_t i = 0; i < li.SI1.size(); ++i) {
    out << (i + 1) << ',' << format_double(li.SI1[i]) << ',' << format_double(li.SI2[i]) << ','
        << format_double(li.SI3[i]) << ',' << format_double(eig.U1abs[i]) << ','
        << format_double(eig.U2abs[i]) << "\n";
  }
}

}  // namespace o3aed::mvmsl
