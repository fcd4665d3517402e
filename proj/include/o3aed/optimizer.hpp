// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "o3aed/design.hpp"
#include "o3aed/surrogate.hpp"

namespace o3aed::optimizer {

/// Budgeted stochastic-RBF global search configuration. The defaults follow
/// the usual response-surface candidate-search recipe: a maximin LHS warm
/// start, Gaussian coordinate perturbations of the incumbent plus a uniform
/// exploration share, and a score that cycles between exploitation and
/// exploration weights.
struct OptimizerConfig {
  std::size_t budget = 0;              // total expensive evaluations
  std::size_t init_size = 0;           // initial LHS size, default 2(n+1)
  std::size_t candidates_per_iter = 0; // default min(100 n, 5000)
  std::vector<double> weight_cycle{0.3, 0.5, 0.8, 0.95};
  std::vector<double> sigma_schedule{0.2, 0.1, 0.05, 0.025};
  std::uint64_t seed = 0;

  static OptimizerConfig defaults(std::size_t n, std::size_t budget, std::uint64_t seed) {
    OptimizerConfig c;
    c.budget = budget;
    c.init_size = 2 * (n + 1);
    c.candidates_per_iter = std::min<std::size_t>(100 * n, 5000);
    c.seed = seed;
    return c;
  }

  void validate(std::size_t n) const {
    if (init_size < n + 2) throw std::invalid_argument("optimizer: init_size must be >= n+2");
    if (budget <= init_size) throw std::invalid_argument("optimizer: budget must exceed init_size");
    if (candidates_per_iter < 1) throw std::invalid_argument("optimizer: need candidates");
    if (weight_cycle.empty() || sigma_schedule.empty())
      throw std::invalid_argument("optimizer: empty schedule");
  }
};

struct OptimizationResult {
  Point x_star;
  double f_star = 0.0;
  std::vector<EvaluationRecord> trace;  // exactly `budget` records, tag opt
};

namespace detail {

/// Evaluate one domain point through the log, guaranteeing a fresh record;
/// duplicate hits are replaced by uniform random points.
inline double evaluate_fresh(const BlackBox& bb, const Point& x_unit, EvaluationLog& log, Rng& rng,
                             Point& used_unit) {
  Point u = x_unit;
  for (int tries = 0; tries < 1000; ++tries) {
    const std::size_t before = log.size();
    const double y = evaluate_batch(bb, {bb.domain().denormalize(u)}, log, Tag::opt)[0];
    if (log.size() > before) {
      used_unit = u;
      return y;
    }
    u.assign(bb.dim(), 0.0);
    for (auto& c : u) c = rng.uniform();
  }
  throw Error("optimizer: could not place a fresh evaluation point");
}

}  // namespace detail

/// Minimize `bb` with exactly cfg.budget evaluations recorded in `log`
/// (tag opt). Iterations fit a Gaussian RBF to all points evaluated so far
/// and pick the best-scoring candidate by a cycling blend of predicted value
/// and distance to the evaluated set. Deterministic for a fixed seed.
inline OptimizationResult optimize(const BlackBox& bb, const OptimizerConfig& cfg,
                                   EvaluationLog& log) {
  const std::size_t n = bb.dim();
  cfg.validate(n);
  if (log.budget() && cfg.budget > log.remaining())
    throw BudgetExhausted("optimizer: log budget too small for the requested run");

  Rng rng(cfg.seed);
  std::vector<Point> X;           // evaluated points, unit cube
  std::vector<double> y;          // matching function values
  std::vector<EvaluationRecord> trace;
  trace.reserve(cfg.budget);

  Point best_u;
  double best_f = std::numeric_limits<double>::infinity();
  auto record = [&](const Point& u, double fy) {
    X.push_back(u);
    y.push_back(fy);
    trace.push_back(log.records().back());
    if (fy < best_f) {
      best_f = fy;
      best_u = u;
    }
  };

  // Warm start: maximin LHS.
  const design::DesignMatrix init = design::maximin_lhs(cfg.init_size, n, rng.bits(), 2000);
  for (const Point& u : init.points) {
    Point used;
    const double fy = detail::evaluate_fresh(bb, u, log, rng, used);
    record(used, fy);
  }

  const std::size_t fail_limit = std::max<std::size_t>(5, n);
  std::size_t fails = 0;
  double shrink = 1.0;
  const double perturb_prob = std::min(20.0 / static_cast<double>(n), 1.0);
  const std::size_t n_uniform = std::max<std::size_t>(1, cfg.candidates_per_iter / 10);
  const std::size_t n_perturb = cfg.candidates_per_iter - n_uniform;

  for (std::size_t iter = 0; trace.size() < cfg.budget; ++iter) {
    const double w = cfg.weight_cycle[iter % cfg.weight_cycle.size()];
    const double sigma = cfg.sigma_schedule[iter % cfg.sigma_schedule.size()] * shrink;

    // Candidates: Gaussian perturbations of the incumbent plus uniform picks.
    std::vector<Point> cand;
    cand.reserve(cfg.candidates_per_iter);
    for (std::size_t c = 0; c < n_perturb; ++c) {
      Point p = best_u;
      bool any = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (rng.uniform() < perturb_prob) {
          p[k] = std::clamp(p[k] + sigma * rng.normal(), 0.0, 1.0);
          any = true;
        }
      }
      if (!any) {
        const std::size_t k = rng.below(n);
        p[k] = std::clamp(p[k] + sigma * rng.normal(), 0.0, 1.0);
      }
      cand.push_back(std::move(p));
    }
    for (std::size_t c = 0; c < n_uniform; ++c) {
      Point p(n);
      for (auto& v : p) v = rng.uniform();
      cand.push_back(std::move(p));
    }

    // Predicted values (falling back to pure distance scoring if the fit
    // degenerates) and distances to the evaluated set.
    std::vector<double> pred(cand.size(), 0.0);
    bool have_pred = false;
    try {
      const surrogate::RbfModel model =
          surrogate::fit_rbf(X, y, surrogate::heuristic_gamma(X), 0.0);
      const auto v = surrogate::predict_rbf(model, cand);
      pred.assign(v.begin(), v.end());
      have_pred = true;
    } catch (const Error& e) {
      warn(std::string("optimizer: surrogate fit failed (") + e.what() +
           "), using distance-only scoring this iteration");
    }
    const Eigen::MatrixXd D2 = surrogate::detail::cross_dist2(surrogate::detail::to_matrix(X),
                                                              surrogate::detail::to_matrix(cand));
    std::vector<double> mind(cand.size());
    for (std::size_t c = 0; c < cand.size(); ++c)
      mind[c] = std::sqrt(D2.col(static_cast<Eigen::Index>(c)).minCoeff());

    double pmin = INFINITY, pmax = -INFINITY, dmin = INFINITY, dmax = -INFINITY;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      pmin = std::min(pmin, pred[c]);
      pmax = std::max(pmax, pred[c]);
      dmin = std::min(dmin, mind[c]);
      dmax = std::max(dmax, mind[c]);
    }
    const double weight = have_pred ? w : 0.0;
    auto score = [&](std::size_t c) {
      const double nv = pmax > pmin ? (pred[c] - pmin) / (pmax - pmin) : 1.0;
      const double nd = dmax > dmin ? (dmax - mind[c]) / (dmax - dmin) : 1.0;
      return weight * nv + (1.0 - weight) * nd;
    };

    // Best-scoring candidate at least 1e-4 from every evaluated point; ties
    // break to the lower predicted value, then the lower candidate index.
    std::size_t pick = SIZE_MAX;
    double pick_score = INFINITY;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      if (mind[c] < 1e-4) continue;
      const double sc = score(c);
      if (sc < pick_score || (sc == pick_score && pick != SIZE_MAX && pred[c] < pred[pick])) {
        pick = c;
        pick_score = sc;
      }
    }
    if (pick == SIZE_MAX) {
      pick = static_cast<std::size_t>(
          std::max_element(mind.begin(), mind.end()) - mind.begin());
    }

    Point used;
    const double fy = detail::evaluate_fresh(bb, cand[pick], log, rng, used);
    const bool improved = fy < best_f;
    record(used, fy);
    if (improved) {
      fails = 0;
    } else if (++fails >= fail_limit) {
      fails = 0;
      shrink = std::max(shrink * 0.5, 1.0 / 64.0);
    }
  }

  OptimizationResult res;
  res.x_star = bb.domain().denormalize(best_u);
  res.f_star = best_f;
  res.trace = std::move(trace);
  return res;
}

/// Uniform-random baseline with the same result contract.
inline OptimizationResult random_search(const BlackBox& bb, std::size_t budget, std::uint64_t seed,
                                        EvaluationLog& log) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  if (log.budget() && budget > log.remaining())
    throw BudgetExhausted("random_search: log budget too small");
  Rng rng(seed);
  OptimizationResult res;
  res.f_star = std::numeric_limits<double>::infinity();
  const std::size_t n = bb.dim();
  while (res.trace.size() < budget) {
    Point u(n);
    for (auto& c : u) c = rng.uniform();
    Point used;
    const double fy = detail::evaluate_fresh(bb, u, log, rng, used);
    res.trace.push_back(log.records().back());
    if (fy < res.f_star) {
      res.f_star = fy;
      res.x_star = bb.domain().denormalize(used);
    }
  }
  return res;
}

}  // namespace o3aed::optimizer
