// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "o3aed/core.hpp"

namespace o3aed::surrogate {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline MatrixXd to_matrix(const std::vector<Point>& X) {
  if (X.empty()) throw TooFewPoints("no points given");
  MatrixXd M(X.size(), X.front().size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != X.front().size()) throw std::invalid_argument("ragged point list");
    for (std::size_t k = 0; k < X[i].size(); ++k) {
      double c = X[i][k];
      if (!(c >= -1e-12 && c <= 1.0 + 1e-12))
        throw std::invalid_argument("surrogate: points must be normalized to the unit cube");
      M(i, k) = std::clamp(c, 0.0, 1.0);
    }
  }
  return M;
}

/// Keep the earliest of every near-duplicate group (by dedup_tol in the
/// unit-cube metric). Returns the surviving row indices.
inline std::vector<std::size_t> dedup_rows(const MatrixXd& X, double tol) {
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    bool dup = false;
    for (std::size_t j : keep) {
      if ((X.row(i) - X.row(j)).norm() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(static_cast<std::size_t>(i));
  }
  return keep;
}

/// Squared-distance matrix between row sets.
inline MatrixXd cross_dist2(const MatrixXd& A, const MatrixXd& B) {
  const VectorXd a2 = A.rowwise().squaredNorm();
  const VectorXd b2 = B.rowwise().squaredNorm();
  MatrixXd D = -2.0 * A * B.transpose();
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  return D.cwiseMax(0.0);
}

inline double median_pairwise_distance(const MatrixXd& X) {
  const Eigen::Index m = X.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) d.push_back((X.row(i) - X.row(j)).norm());
  return median(std::move(d));
}

/// Evenly strided subset of 0..m-1 with k elements.
inline std::vector<std::size_t> strided_subset(std::size_t m, std::size_t k) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i * m / k;
  return idx;
}

/// Leave-one-out residuals of a bordered interpolation system
/// [K, P; P^T, 0] [w; c] = [y; 0] via the diagonal-of-inverse identity
/// e_i = w_i / (A^{-1})_ii. Exact for distinct points; matches refitting
/// with point i removed.
inline std::vector<double> bordered_loo_residuals(const MatrixXd& K, const MatrixXd& P,
                                                  const VectorXd& y) {
  const Eigen::Index m = K.rows(), q = P.cols();
  MatrixXd A = MatrixXd::Zero(m + q, m + q);
  A.topLeftCorner(m, m) = K;
  A.topRightCorner(m, q) = P;
  A.bottomLeftCorner(q, m) = P.transpose();
  VectorXd rhs = VectorXd::Zero(m + q);
  rhs.head(m) = y;
  Eigen::PartialPivLU<MatrixXd> lu(A);
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite() || (A * sol - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
    throw SingularSystem("loo: bordered system is singular");
  const MatrixXd inv = lu.inverse();
  std::vector<double> e(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double dii = inv(i, i);
    if (dii == 0.0) throw SingularSystem("loo: zero diagonal in inverse");
    e[static_cast<std::size_t>(i)] = sol[i] / dii;
  }
  return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian RBF interpolation with linear tail
// ---------------------------------------------------------------------------

/// s(x) = sum_i lambda_i exp(-gamma ||x - c_i||^2) + poly . [1; x], fitted as
/// the solution of the saddle system [Phi + ridge I, P; P^T, 0] with
/// P = [1 | X]. All coordinates are unit-cube normalized.
struct RbfModel {
  MatrixXd centers;  // m x n
  VectorXd lambda;   // m
  VectorXd poly;     // n + 1 (constant first)
  double gamma = 1.0;
  double ridge = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(centers.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
};

struct RbfOptions {
  std::optional<double> gamma;
  std::optional<double> ridge;
  double dedup_tol = 1e-8;
  std::size_t loo_subset_max = 600;  // gamma grid search runs on a subset above this
};

/// The scale-aware default shape parameter 1/(2 d_med^2), d_med the median
/// pairwise distance of the points.
inline double heuristic_gamma(const std::vector<Point>& X) {
  const double d_med = detail::median_pairwise_distance(detail::to_matrix(X));
  if (!(d_med > 0.0)) throw TooFewPoints("heuristic_gamma: degenerate point set");
  return 1.0 / (2.0 * d_med * d_med);
}

inline VectorXd predict_rbf(const RbfModel& model, const MatrixXd& X) {
  const MatrixXd D2 = detail::cross_dist2(model.centers, X);
  VectorXd out = ((-model.gamma * D2).array().exp().matrix()).transpose() * model.lambda;
  out.array() += model.poly[0];
  out += X * model.poly.tail(model.dim());
  return out;
}

inline double predict_rbf(const RbfModel& model, const Point& x) {
  MatrixXd X(1, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) X(0, k) = x[k];
  return predict_rbf(model, X)[0];
}

inline std::vector<double> predict_rbf(const RbfModel& model, const std::vector<Point>& pts) {
  const VectorXd v = predict_rbf(model, detail::to_matrix(pts));
  return {v.data(), v.data() + v.size()};
}

namespace detail {

struct RbfSolve {
  VectorXd lambda, poly;
  double ridge;
};

inline RbfSolve solve_rbf_system(const MatrixXd& X, const VectorXd& y, double gamma, double ridge,
                                 bool allow_escalation) {
  const Eigen::Index m = X.rows(), n = X.cols();
  MatrixXd P(m, n + 1);
  P.col(0).setOnes();
  P.rightCols(n) = X;
  const MatrixXd Phi = (-gamma * cross_dist2(X, X).array()).exp();
  const Eigen::Index q = n + 1;
  VectorXd rhs = VectorXd::Zero(m + q);
  rhs.head(m) = y;

  double r = ridge;
  for (int attempt = 0; attempt < 2; ++attempt) {
    MatrixXd A = MatrixXd::Zero(m + q, m + q);
    A.topLeftCorner(m, m) = Phi + r * MatrixXd::Identity(m, m);
    A.topRightCorner(m, q) = P;
    A.bottomLeftCorner(q, m) = P.transpose();
    Eigen::PartialPivLU<MatrixXd> lu(A);
    const VectorXd sol = lu.solve(rhs);
    if (sol.allFinite() && (A * sol - rhs).norm() <= 1e-8 * std::max(1.0, rhs.norm())) {
      return RbfSolve{sol.head(m), sol.tail(q), r};
    }
    if (!allow_escalation || attempt == 1) break;
    const double esc = 1e-10 * (1.0 + r);  // max diagonal of Phi is 1 + ridge
    warn("fit_rbf: solver failed, escalating ridge to " + format_double(esc));
    r = esc;
  }
  throw SingularSystem("fit_rbf: saddle system could not be solved (degenerate geometry?)");
}

inline double rbf_loo_rmse(const MatrixXd& X, const VectorXd& y, double gamma, double ridge) {
  const Eigen::Index m = X.rows(), n = X.cols();
  MatrixXd P(m, n + 1);
  P.col(0).setOnes();
  P.rightCols(n) = X;
  const MatrixXd K =
      ((-gamma * cross_dist2(X, X).array()).exp()).matrix() + ridge * MatrixXd::Identity(m, m);
  const auto e = bordered_loo_residuals(K, P, y);
  double s = 0.0;
  for (double r : e) s += r * r;
  return std::sqrt(s / static_cast<double>(e.size()));
}

}  // namespace detail

/// Fit the interpolant. X must be unit-cube normalized; near-duplicate
/// points are dropped (earliest kept) before fitting. With no gamma given,
/// the scale-aware default 1/(2 d_med^2) is refined over the grid
/// {1/16, 1/4, 1, 4, 16} x default by leave-one-out RMSE.
inline RbfModel fit_rbf(const std::vector<Point>& X_in, const std::vector<double>& y_in,
                        const RbfOptions& opt = {}) {
  if (X_in.size() != y_in.size()) throw std::invalid_argument("fit_rbf: X/y size mismatch");
  MatrixXd Xall = detail::to_matrix(X_in);
  const auto keep = detail::dedup_rows(Xall, opt.dedup_tol);
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size()), n = Xall.cols();
  if (m < n + 2) throw TooFewPoints("fit_rbf: need at least n+2 distinct points");
  MatrixXd X(m, n);
  VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    X.row(i) = Xall.row(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]));
    y[i] = y_in[keep[static_cast<std::size_t>(i)]];
  }

  const double ridge = opt.ridge.value_or(0.0);
  double gamma;
  if (opt.gamma) {
    gamma = *opt.gamma;
  } else {
    const double d_med = detail::median_pairwise_distance(X);
    const double g0 = 1.0 / (2.0 * d_med * d_med);
    // Grid search by LOO, on an evenly strided subset when m is large.
    MatrixXd Xs = X;
    VectorXd ys = y;
    if (static_cast<std::size_t>(m) > opt.loo_subset_max) {
      const auto idx = detail::strided_subset(static_cast<std::size_t>(m), opt.loo_subset_max);
      Xs.resize(static_cast<Eigen::Index>(idx.size()), n);
      ys.resize(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
        ys[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
      }
    }
    gamma = g0;
    double best = std::numeric_limits<double>::infinity();
    for (double f : {1.0 / 16.0, 0.25, 1.0, 4.0, 16.0}) {
      double err;
      try {
        err = detail::rbf_loo_rmse(Xs, ys, g0 * f, ridge);
      } catch (const SingularSystem&) {
        continue;
      }
      if (err < best) {
        best = err;
        gamma = g0 * f;
      }
    }
  }

  const auto sol = detail::solve_rbf_system(X, y, gamma, ridge, !opt.ridge.has_value());
  RbfModel model;
  model.centers = std::move(X);
  model.lambda = sol.lambda;
  model.poly = sol.poly;
  model.gamma = gamma;
  model.ridge = sol.ridge;
  return model;
}

inline RbfModel fit_rbf(const std::vector<Point>& X, const std::vector<double>& y, double gamma,
                        double ridge = 0.0) {
  RbfOptions opt;
  opt.gamma = gamma;
  opt.ridge = ridge;
  return fit_rbf(X, y, opt);
}

/// Root-mean-square leave-one-out error at fixed hyperparameters.
inline double loo_error_rbf(const std::vector<Point>& X_in, const std::vector<double>& y,
                            double gamma, double ridge = 0.0, double dedup_tol = 1e-8) {
  MatrixXd Xall = detail::to_matrix(X_in);
  const auto keep = detail::dedup_rows(Xall, dedup_tol);
  if (keep.size() != static_cast<std::size_t>(Xall.rows()))
    throw std::invalid_argument("loo_error: near-duplicate points in X");
  if (Xall.rows() < Xall.cols() + 3) throw TooFewPoints("loo_error: need at least n+3 points");
  VectorXd yv(Xall.rows());
  for (Eigen::Index i = 0; i < Xall.rows(); ++i) yv[i] = y[static_cast<std::size_t>(i)];
  return detail::rbf_loo_rmse(Xall, yv, gamma, ridge);
}

// ---------------------------------------------------------------------------
// Ordinary Kriging with Gaussian correlation
// ---------------------------------------------------------------------------

/// Constant-trend Kriging with R_ij = exp(-sum_k theta_k (x_ik - x_jk)^2).
/// The response is standardized internally; mu and sigma2 are reported in
/// original units. nugget is the diagonal addition to the correlation
/// matrix.
struct KrigingModel {
  MatrixXd centers;  // m x n
  VectorXd theta;    // n
  double nugget = 1e-8;
  double mu = 0.0;      // original units
  double sigma2 = 0.0;  // original units
  // Internal solve state (standardized units).
  VectorXd alpha;  // (R + nugget I)^{-1} (z - mu_std 1)
  double y_mean = 0.0, y_std = 1.0, mu_std = 0.0, sigma2_std = 0.0;
  // Fit diagnostics.
  double loglik = 0.0;
  std::vector<double> start_logliks;

  std::size_t dim() const { return static_cast<std::size_t>(centers.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
};

struct KrigingOptions {
  std::optional<double> nugget;
  std::size_t starts = 20;
  double dedup_tol = 1e-8;
  std::size_t theta_subset_max = 384;  // likelihood search subset above this
  std::size_t max_sweeps = 8;
  std::optional<VectorXd> fixed_theta;
};

namespace detail {

inline MatrixXd kriging_corr(const MatrixXd& X, const VectorXd& theta) {
  const Eigen::Index m = X.rows();
  MatrixXd R(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    R(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < X.cols(); ++k) s += theta[k] * sq(X(i, k) - X(j, k));
      R(i, j) = R(j, i) = std::exp(-s);
    }
  }
  return R;
}

struct KrigingSolve {
  double mu, sigma2, loglik;
  VectorXd alpha;
  bool ok;
};

/// GLS mean, process variance and concentrated log-likelihood at fixed
/// theta; ok=false when the (nugget-stabilized) correlation matrix cannot
/// be factorized.
inline KrigingSolve kriging_solve(const MatrixXd& X, const VectorXd& z, const VectorXd& theta,
                                  double nugget) {
  const Eigen::Index m = X.rows();
  MatrixXd R = kriging_corr(X, theta);
  R.diagonal().array() += nugget;
  Eigen::LLT<MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) return {0, 0, -std::numeric_limits<double>::infinity(), {}, false};
  const VectorXd ones = VectorXd::Ones(m);
  const VectorXd Ri1 = llt.solve(ones);
  const VectorXd Riz = llt.solve(z);
  const double denom = ones.dot(Ri1);
  if (!(denom > 0.0)) return {0, 0, -std::numeric_limits<double>::infinity(), {}, false};
  const double mu = ones.dot(Riz) / denom;
  const VectorXd r = z - mu * ones;
  const VectorXd alpha = llt.solve(r);
  const double sigma2 = std::max(0.0, r.dot(alpha) / static_cast<double>(m));
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double loglik =
      -0.5 * (static_cast<double>(m) * std::log(std::max(sigma2, 1e-300)) + logdet);
  return {mu, sigma2, loglik, alpha, true};
}

}  // namespace detail

/// Fit ordinary Kriging by maximizing the concentrated log-likelihood over
/// log-theta with multistart coordinate pattern search. theta is bounded to
/// [1e-3, 1e3] per coordinate; on large designs the likelihood search runs
/// on an evenly strided subset of the centers and the final solve uses all
/// of them.
inline KrigingModel fit_kriging(const std::vector<Point>& X_in, const std::vector<double>& y_in,
                                const KrigingOptions& opt = {}) {
  if (X_in.size() != y_in.size()) throw std::invalid_argument("fit_kriging: X/y size mismatch");
  MatrixXd Xall = detail::to_matrix(X_in);
  const auto keep = detail::dedup_rows(Xall, opt.dedup_tol);
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size()), n = Xall.cols();
  if (m < 2) throw TooFewPoints("fit_kriging: need at least 2 distinct points");
  MatrixXd X(m, n);
  VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    X.row(i) = Xall.row(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]));
    y[i] = y_in[keep[static_cast<std::size_t>(i)]];
  }

  KrigingModel model;
  model.centers = X;
  model.y_mean = y.mean();
  const double var = (y.array() - model.y_mean).square().sum() / static_cast<double>(m - 1);
  model.y_std = std::sqrt(var);

  if (model.y_std < 1e-150) {
    // Constant data: the predictor is the constant itself.
    model.y_std = 0.0;
    model.theta = VectorXd::Ones(n);
    model.nugget = opt.nugget.value_or(0.0);
    model.alpha = VectorXd::Zero(m);
    model.mu = model.y_mean;
    model.sigma2 = 0.0;
    return model;
  }

  const VectorXd z = (y.array() - model.y_mean).array() / model.y_std;
  // Default nugget 1e-8 in correlation units; the response is standardized,
  // so this equals 1e-8 times the sample variance in covariance units.
  const double nugget0 = opt.nugget.value_or(1e-8);

  // Likelihood-search subset.
  MatrixXd Xs = X;
  VectorXd zs = z;
  if (static_cast<std::size_t>(m) > opt.theta_subset_max) {
    const auto idx = detail::strided_subset(static_cast<std::size_t>(m), opt.theta_subset_max);
    Xs.resize(static_cast<Eigen::Index>(idx.size()), n);
    zs.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
      zs[static_cast<Eigen::Index>(i)] = z[static_cast<Eigen::Index>(idx[i])];
    }
  }

  VectorXd best_log_theta = VectorXd::Zero(n);
  if (opt.fixed_theta) {
    if (opt.fixed_theta->size() != n) throw std::invalid_argument("fit_kriging: fixed_theta size");
    best_log_theta = opt.fixed_theta->array().log10().matrix();
  } else {
    const double lo = -3.0, hi = 3.0;
    auto loglik_at = [&](const VectorXd& lt) {
      const VectorXd theta = Eigen::pow(10.0, lt.array()).matrix();
      return detail::kriging_solve(Xs, zs, theta, nugget0).loglik;
    };
    // Multistart: theta = 1 plus a seeded LHS in log-theta space.
    std::vector<VectorXd> starts;
    starts.push_back(VectorXd::Zero(n));
    Rng rng(0x6b726967u);
    if (opt.starts > 1) {
      const std::size_t extra = opt.starts - 1;
      for (std::size_t i = 0; i < extra; ++i) starts.push_back(VectorXd::Zero(n));
      std::vector<std::size_t> perm(extra);
      for (Eigen::Index k = 0; k < n; ++k) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        for (std::size_t i = 0; i < extra; ++i) {
          starts[1 + i][k] = lo + (hi - lo) * (static_cast<double>(perm[i]) + rng.uniform()) /
                                      static_cast<double>(extra);
        }
      }
    }
    double best_ll = -std::numeric_limits<double>::infinity();
    for (const VectorXd& s0 : starts) {
      VectorXd cur = s0;
      double cur_ll = loglik_at(cur);
      model.start_logliks.push_back(cur_ll);
      double step = 0.5;
      for (std::size_t sweep = 0; sweep < opt.max_sweeps && step >= 0.05; ++sweep) {
        bool improved = false;
        for (Eigen::Index k = 0; k < n; ++k) {
          for (double dir : {+1.0, -1.0}) {
            const double trial = std::clamp(cur[k] + dir * step, lo, hi);
            if (trial == cur[k]) continue;
            const double old = cur[k];
            cur[k] = trial;
            const double ll = loglik_at(cur);
            if (ll > cur_ll) {
              cur_ll = ll;
              improved = true;
              break;
            }
            cur[k] = old;
          }
        }
        if (!improved) step *= 0.5;
      }
      if (cur_ll > best_ll) {
        best_ll = cur_ll;
        best_log_theta = cur;
      }
    }
    if (!std::isfinite(best_ll))
      throw SingularCorrelation("fit_kriging: likelihood is undefined at every start");
    model.loglik = best_ll;
  }

  model.theta = Eigen::pow(10.0, best_log_theta.array()).matrix();

  // Final solve on all points, escalating the nugget if factorization fails.
  double nugget = nugget0;
  detail::KrigingSolve fin;
  while (true) {
    fin = detail::kriging_solve(X, z, model.theta, nugget);
    if (fin.ok) break;
    const double next = nugget == 0.0 ? 1e-12 : nugget * 10.0;
    if (next > 1e-4)
      throw SingularCorrelation("fit_kriging: correlation matrix singular at max nugget");
    warn("fit_kriging: factorization failed, escalating nugget to " + format_double(next));
    nugget = next;
  }
  model.nugget = nugget;
  model.mu_std = fin.mu;
  model.sigma2_std = fin.sigma2;
  model.alpha = fin.alpha;
  if (opt.fixed_theta) model.loglik = fin.loglik;
  model.mu = model.y_mean + model.y_std * fin.mu;
  model.sigma2 = model.y_std * model.y_std * fin.sigma2;
  return model;
}

inline VectorXd predict_kriging(const KrigingModel& model, const MatrixXd& X) {
  if (model.y_std == 0.0) return VectorXd::Constant(X.rows(), model.y_mean);
  // theta-weighted squared distances via sqrt(theta)-scaled coordinates.
  const VectorXd s = model.theta.cwiseSqrt();
  const MatrixXd Cs = model.centers.array().rowwise() * s.transpose().array();
  const MatrixXd Xs = X.array().rowwise() * s.transpose().array();
  const MatrixXd D2 = detail::cross_dist2(Cs, Xs);
  VectorXd pred = ((-D2.array()).exp().matrix()).transpose() * model.alpha;
  pred.array() += model.mu_std;
  return (model.y_mean + model.y_std * pred.array()).matrix();
}

inline double predict_kriging(const KrigingModel& model, const Point& x) {
  MatrixXd X(1, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) X(0, k) = x[k];
  return predict_kriging(model, X)[0];
}

inline std::vector<double> predict_kriging(const KrigingModel& model,
                                           const std::vector<Point>& pts) {
  const VectorXd v = predict_kriging(model, detail::to_matrix(pts));
  return {v.data(), v.data() + v.size()};
}

/// Leave-one-out RMSE for ordinary Kriging at fixed hyperparameters, in
/// original response units.
inline double loo_error_kriging(const std::vector<Point>& X_in, const std::vector<double>& y_in,
                                const VectorXd& theta, double nugget) {
  MatrixXd X = detail::to_matrix(X_in);
  if (X.rows() < 3) throw TooFewPoints("loo_error: need at least 3 points");
  const Eigen::Index m = X.rows();
  VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) y[i] = y_in[static_cast<std::size_t>(i)];
  const double y_mean = y.mean();
  const double y_std = std::sqrt((y.array() - y_mean).square().sum() / static_cast<double>(m - 1));
  if (y_std == 0.0) return 0.0;
  const VectorXd z = (y.array() - y_mean) / y_std;
  MatrixXd K = detail::kriging_corr(X, theta);
  K.diagonal().array() += nugget;
  const auto e = detail::bordered_loo_residuals(K, MatrixXd::Ones(m, 1), z);
  double s = 0.0;
  for (double r : e) s += r * r;
  return y_std * std::sqrt(s / static_cast<double>(e.size()));
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// A fitted surrogate plus the original domain, as stored between pipeline
/// stages. Predictions accept domain coordinates (`predict`) or unit-cube
/// coordinates (`predict_unit`).
struct Surrogate {
  std::string type;  // "rbf" | "kriging"
  std::optional<RbfModel> rbf;
  std::optional<KrigingModel> kriging;
  BoxDomain domain{Point{0.0}, Point{1.0}};

  double predict_unit(const Point& u) const {
    return rbf ? predict_rbf(*rbf, u) : predict_kriging(*kriging, u);
  }
  std::vector<double> predict_unit(const std::vector<Point>& u) const {
    return rbf ? predict_rbf(*rbf, u) : predict_kriging(*kriging, u);
  }
  double predict(const Point& x) const { return predict_unit(domain.normalize(x)); }
};

namespace detail {

inline nlohmann::json to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j) {
  const std::size_t r = j.size(), c = r ? j[0].size() : 0;
  MatrixXd M(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < c; ++k) M(i, k) = j[i][k].get<double>();
  return M;
}

inline nlohmann::json to_json(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline VectorXd vector_from_json(const nlohmann::json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json surrogate_to_json(const Surrogate& s) {
  nlohmann::json j;
  j["type"] = s.type;
  j["domain"] = {{"lower", s.domain.lower()}, {"upper", s.domain.upper()}};
  if (s.rbf) {
    j["centers"] = detail::to_json(s.rbf->centers);
    j["lambda"] = detail::to_json(s.rbf->lambda);
    j["poly"] = detail::to_json(s.rbf->poly);
    j["gamma"] = s.rbf->gamma;
    j["ridge"] = s.rbf->ridge;
  } else if (s.kriging) {
    const KrigingModel& k = *s.kriging;
    j["centers"] = detail::to_json(k.centers);
    j["theta"] = detail::to_json(k.theta);
    j["nugget"] = k.nugget;
    j["mu"] = k.mu;
    j["sigma2"] = k.sigma2;
    j["alpha"] = detail::to_json(k.alpha);
    j["y_mean"] = k.y_mean;
    j["y_std"] = k.y_std;
    j["mu_std"] = k.mu_std;
    j["sigma2_std"] = k.sigma2_std;
  } else {
    throw Error("surrogate_to_json: empty surrogate");
  }
  return j;
}

inline Surrogate surrogate_from_json(const nlohmann::json& j) {
  Surrogate s;
  s.type = j.at("type").get<std::string>();
  s.domain = BoxDomain(j.at("domain").at("lower").get<Point>(),
                       j.at("domain").at("upper").get<Point>());
  if (s.type == "rbf") {
    RbfModel m;
    m.centers = detail::matrix_from_json(j.at("centers"));
    m.lambda = detail::vector_from_json(j.at("lambda"));
    m.poly = detail::vector_from_json(j.at("poly"));
    m.gamma = j.at("gamma").get<double>();
    m.ridge = j.at("ridge").get<double>();
    s.rbf = std::move(m);
  } else if (s.type == "kriging") {
    KrigingModel m;
    m.centers = detail::matrix_from_json(j.at("centers"));
    m.theta = detail::vector_from_json(j.at("theta"));
    m.nugget = j.at("nugget").get<double>();
    m.mu = j.at("mu").get<double>();
    m.sigma2 = j.at("sigma2").get<double>();
    m.alpha = detail::vector_from_json(j.at("alpha"));
    m.y_mean = j.at("y_mean").get<double>();
    m.y_std = j.at("y_std").get<double>();
    m.mu_std = j.at("mu_std").get<double>();
    m.sigma2_std = j.at("sigma2_std").get<double>();
    s.kriging = std::move(m);
  } else {
    throw Error("surrogate_from_json: unknown type " + s.type);
  }
  return s;
}

inline void save_surrogate(const Surrogate& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << surrogate_to_json(s).dump(2) << "\n";
}

inline Surrogate load_surrogate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return surrogate_from_json(j);
}

}  // namespace o3aed::surrogate
