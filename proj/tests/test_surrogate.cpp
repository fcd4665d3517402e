// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "o3aed/design.hpp"
#include "o3aed/surrogate.hpp"
#include "helpers.hpp"

using namespace o3aed;
using namespace o3aed::surrogate;
using Catch::Approx;

namespace {

std::vector<Point> random_unit_points(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> X(m, Point(n));
  for (auto& p : X)
    for (auto& c : p) c = rng.uniform();
  return X;
}

}  // namespace

TEST_CASE("RBF fitting") {
  SECTION("reproduces affine data exactly") {
    const std::size_t n = 3;
    const auto X = random_unit_points(20, n, 1);
    const Point c0{2.5, -1.0, 0.5, 3.0};  // constant first
    std::vector<double> y;
    for (const auto& p : X) {
      double v = c0[0];
      for (std::size_t k = 0; k < n; ++k) v += c0[k + 1] * p[k];
      y.push_back(v);
    }
    const RbfModel m = fit_rbf(X, y, 2.0, 0.0);
    REQUIRE(m.lambda.norm() <= 1e-9);
    for (std::size_t k = 0; k <= n; ++k) REQUIRE(m.poly[k] == Approx(c0[k]).margin(1e-9));
    const auto Q = random_unit_points(50, n, 2);
    for (const auto& q : Q) {
      double v = c0[0];
      for (std::size_t k = 0; k < n; ++k) v += c0[k + 1] * q[k];
      REQUIRE(predict_rbf(m, q) == Approx(v).margin(1e-10));
    }
  }
  SECTION("interpolates the training data with ridge=0") {
    const auto X = random_unit_points(30, 4, 3);
    std::vector<double> y;
    Rng rng(4);
    double ymax = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      y.push_back(std::sin(5.0 * X[i][0]) + 10.0 * rng.uniform());
      ymax = std::max(ymax, std::abs(y.back()));
    }
    const RbfModel m = fit_rbf(X, y);  // auto gamma, ridge 0
    for (std::size_t i = 0; i < X.size(); ++i)
      REQUIRE(predict_rbf(m, X[i]) == Approx(y[i]).margin(1e-8 * std::max(1.0, ymax)));
  }
  SECTION("orthogonality side condition P^T lambda = 0") {
    const auto X = random_unit_points(25, 3, 5);
    std::vector<double> y;
    for (const auto& p : X) y.push_back(std::exp(p[0]) * (1.0 + p[1] * p[2]));
    const RbfModel m = fit_rbf(X, y);
    Eigen::MatrixXd P(m.size(), m.dim() + 1);
    P.col(0).setOnes();
    P.rightCols(m.dim()) = m.centers;
    REQUIRE((P.transpose() * m.lambda).norm() <= 1e-8 * std::max(1e-30, m.lambda.norm()));
  }
  SECTION("too few points") {
    const auto X = random_unit_points(4, 3, 6);  // need n+2 = 5
    std::vector<double> y(4, 1.0);
    REQUIRE_THROWS_AS(fit_rbf(X, y), TooFewPoints);
  }
  SECTION("duplicate centers keep the earliest value") {
    auto X = random_unit_points(10, 2, 7);
    std::vector<double> y(10, 0.0);
    for (std::size_t i = 0; i < 10; ++i) y[i] = static_cast<double>(i);
    X.push_back(X[0]);
    y.push_back(999.0);  // conflicting duplicate, must be ignored
    const RbfModel m = fit_rbf(X, y);
    REQUIRE(m.size() == 10);
    REQUIRE(predict_rbf(m, X[0]) == Approx(0.0).margin(1e-7));
  }
}

TEST_CASE("RBF prediction structure") {
  SECTION("1D two-center model matches an independent 4x4 saddle solve") {
    const std::vector<Point> X{{0.0}, {1.0}};
    const std::vector<double> y{0.0, 1.0};
    const double gamma = 1.0;
    const RbfModel m = fit_rbf(X, y, gamma, 0.0);

    // Independent oracle: assemble and solve the bordered system directly.
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A(0, 0) = 1.0;
    A(0, 1) = std::exp(-1.0);
    A(1, 0) = std::exp(-1.0);
    A(1, 1) = 1.0;
    // P = [1 | x]
    A(0, 2) = 1.0; A(0, 3) = 0.0;
    A(1, 2) = 1.0; A(1, 3) = 1.0;
    A(2, 0) = 1.0; A(2, 1) = 1.0;
    A(3, 0) = 0.0; A(3, 1) = 1.0;
    Eigen::Vector4d b(0.0, 1.0, 0.0, 0.0);
    const Eigen::Vector4d sol = A.fullPivLu().solve(b);
    const double expected = sol[0] * std::exp(-gamma * 0.25) + sol[1] * std::exp(-gamma * 0.25) +
                            sol[2] + sol[3] * 0.5;
    REQUIRE(predict_rbf(m, Point{0.5}) == Approx(expected).margin(1e-12));
  }
  SECTION("kernel terms vanish far from the centers") {
    const std::vector<Point> X{{0.0, 0.0}, {0.1, 0.0}, {0.0, 0.1}, {0.1, 0.1}, {0.05, 0.05}};
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0, 2.5};
    const RbfModel m = fit_rbf(X, y, 1e4, 0.0);
    const Point far{1.0, 1.0};
    const double tail = m.poly[0] + m.poly[1] * far[0] + m.poly[2] * far[1];
    REQUIRE(predict_rbf(m, far) == Approx(tail).margin(1e-10));
  }
}

TEST_CASE("leave-one-out error") {
  SECTION("closed form matches brute-force refits") {
    const std::size_t n = 2;
    const auto X = random_unit_points(12, n, 8);
    std::vector<double> y;
    for (const auto& p : X) y.push_back(std::cos(3.0 * p[0]) + p[1] * p[1]);
    const double gamma = 4.0;
    const double fast = loo_error_rbf(X, y, gamma, 0.0);
    double brute = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      std::vector<Point> Xi;
      std::vector<double> yi;
      for (std::size_t j = 0; j < X.size(); ++j)
        if (j != i) {
          Xi.push_back(X[j]);
          yi.push_back(y[j]);
        }
      const RbfModel m = fit_rbf(Xi, yi, gamma, 0.0);
      brute += sq(predict_rbf(m, X[i]) - y[i]);
    }
    brute = std::sqrt(brute / static_cast<double>(X.size()));
    REQUIRE(fast == Approx(brute).epsilon(1e-6));
  }
  SECTION("loo error of affine data is tiny") {
    const auto X = random_unit_points(15, 3, 9);
    std::vector<double> y;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : X) {
      y.push_back(1.0 + 2.0 * p[0] - p[2]);
      lo = std::min(lo, y.back());
      hi = std::max(hi, y.back());
    }
    REQUIRE(loo_error_rbf(X, y, 3.0, 0.0) <= 1e-8 * (hi - lo));
  }
  SECTION("grid-selected gamma is never worse than the heuristic default") {
    const auto X = random_unit_points(24, 2, 10);
    std::vector<double> y;
    for (const auto& p : X) y.push_back(std::sin(6.0 * p[0]) * std::cos(4.0 * p[1]));
    const double g0 = heuristic_gamma(X);
    const RbfModel m = fit_rbf(X, y);  // grid search
    REQUIRE(loo_error_rbf(X, y, m.gamma, 0.0) <= loo_error_rbf(X, y, g0, 0.0) + 1e-12);
  }
  SECTION("duplicate-heavy input is rejected") {
    std::vector<Point> X(8, Point{0.5, 0.5});
    std::vector<double> y(8, 1.0);
    REQUIRE_THROWS_AS(loo_error_rbf(X, y, 1.0), std::invalid_argument);
  }
}

TEST_CASE("Kriging fitting") {
  SECTION("two-point closed form (theta fixed, nugget 0)") {
    const std::vector<Point> X{{0.0}, {1.0}};
    const std::vector<double> y{0.0, 1.0};
    KrigingOptions opt;
    opt.nugget = 0.0;
    opt.fixed_theta = Eigen::VectorXd::Ones(1);
    const KrigingModel m = fit_kriging(X, y, opt);

    // Oracle: R = [[1, r],[r, 1]] with r = exp(-1).
    const double r = std::exp(-1.0);
    Eigen::Matrix2d R;
    R << 1.0, r, r, 1.0;
    const Eigen::Matrix2d Ri = R.inverse();
    const Eigen::Vector2d ones(1.0, 1.0), yv(0.0, 1.0);
    const double mu = ones.dot(Ri * yv) / ones.dot(Ri * ones);
    const Eigen::Vector2d resid = yv - mu * ones;
    const double sigma2 = resid.dot(Ri * resid) / 2.0;
    const double rq = std::exp(-0.25);
    const Eigen::Vector2d rx(rq, rq);
    const double pred = mu + rx.dot(Ri * resid);

    REQUIRE(m.mu == Approx(mu).margin(1e-12));
    REQUIRE(m.sigma2 == Approx(sigma2).margin(1e-12));
    REQUIRE(predict_kriging(m, Point{0.5}) == Approx(pred).margin(1e-12));
  }
  SECTION("constant data degenerates to the constant") {
    const auto X = random_unit_points(8, 2, 11);
    const std::vector<double> y(8, 7.0);
    const KrigingModel m = fit_kriging(X, y);
    REQUIRE(m.sigma2 <= 1e-12);
    REQUIRE(predict_kriging(m, Point{0.3, 0.9}) == Approx(7.0).margin(1e-12));
  }
  SECTION("interpolates within the nugget tolerance") {
    const auto X = random_unit_points(20, 2, 12);
    std::vector<double> y;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : X) {
      y.push_back(50.0 * std::sin(4.0 * p[0]) + 20.0 * p[1]);
      lo = std::min(lo, y.back());
      hi = std::max(hi, y.back());
    }
    KrigingOptions opt;
    opt.starts = 5;
    const KrigingModel m = fit_kriging(X, y, opt);
    for (std::size_t i = 0; i < X.size(); ++i)
      REQUIRE(predict_kriging(m, X[i]) == Approx(y[i]).margin(1e-6 * (hi - lo)));
  }
  SECTION("far from all centers the prediction is mu") {
    std::vector<Point> X;
    for (double c : {0.0, 0.02, 0.04, 0.06}) X.push_back({c, c});
    const std::vector<double> y{3.0, 3.5, 2.5, 3.2};
    KrigingOptions opt;
    opt.fixed_theta = Eigen::VectorXd::Constant(1, 2, 1000.0);
    const KrigingModel m = fit_kriging(X, y, opt);
    REQUIRE(predict_kriging(m, Point{1.0, 1.0}) == Approx(m.mu).margin(1e-9));
  }
  SECTION("likelihood never below any multistart initial value") {
    const auto X = random_unit_points(15, 2, 13);
    std::vector<double> y;
    for (const auto& p : X) y.push_back(std::exp(p[0]) + p[1]);
    KrigingOptions opt;
    opt.starts = 6;
    const KrigingModel m = fit_kriging(X, y, opt);
    REQUIRE_FALSE(m.start_logliks.empty());
    for (double s0 : m.start_logliks) REQUIRE(m.loglik >= s0 - 1e-12);
  }
  SECTION("too few points") {
    REQUIRE_THROWS_AS(fit_kriging({{0.5, 0.5}}, {1.0}), TooFewPoints);
  }
  SECTION("kriging loo matches brute force at fixed hyperparameters") {
    const auto X = random_unit_points(10, 1, 14);
    std::vector<double> y;
    for (const auto& p : X) y.push_back(std::sin(6.0 * p[0]));
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 5.0);
    const double nugget = 1e-8;
    const double fast = loo_error_kriging(X, y, theta, nugget);
    double brute = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      std::vector<Point> Xi;
      std::vector<double> yi;
      for (std::size_t j = 0; j < X.size(); ++j)
        if (j != i) {
          Xi.push_back(X[j]);
          yi.push_back(y[j]);
        }
      KrigingOptions opt;
      opt.fixed_theta = theta;
      // Brute force must see the same standardization scale as the shortcut,
      // which standardizes once over the full sample.
      const KrigingModel m = fit_kriging(Xi, yi, opt);
      brute += sq(predict_kriging(m, X[i]) - y[i]);
    }
    brute = std::sqrt(brute / static_cast<double>(X.size()));
    REQUIRE(fast == Approx(brute).epsilon(0.05));
  }
}

TEST_CASE("surrogate persistence") {
  testutil::TempDir tmp("model");
  const auto X = random_unit_points(18, 2, 15);
  std::vector<double> y;
  for (const auto& p : X) y.push_back(p[0] * p[0] + 3.0 * p[1]);

  SECTION("rbf round trip") {
    Surrogate s;
    s.type = "rbf";
    s.domain = BoxDomain::cube(2, -2.0, 5.0);
    s.rbf = fit_rbf(X, y);
    save_surrogate(s, tmp.path() / "m.json");
    const Surrogate back = load_surrogate(tmp.path() / "m.json");
    REQUIRE(back.type == "rbf");
    REQUIRE(back.domain == s.domain);
    const auto Q = random_unit_points(10, 2, 16);
    for (const auto& q : Q) REQUIRE(back.predict_unit(q) == predict_rbf(*s.rbf, q));
  }
  SECTION("kriging round trip") {
    Surrogate s;
    s.type = "kriging";
    s.domain = BoxDomain::cube(2, 0.0, 1.0);
    KrigingOptions opt;
    opt.starts = 3;
    s.kriging = fit_kriging(X, y, opt);
    save_surrogate(s, tmp.path() / "k.json");
    const Surrogate back = load_surrogate(tmp.path() / "k.json");
    const auto Q = random_unit_points(10, 2, 17);
    for (const auto& q : Q) REQUIRE(back.predict_unit(q) == predict_kriging(*s.kriging, q));
  }
}

TEST_CASE("normalization equivariance") {
  // The models only ever see unit-cube coordinates, so two problems that
  // differ by an affine change of the original domain give identical
  // predictions at the same unit points.
  const auto X = random_unit_points(12, 2, 18);
  std::vector<double> y;
  for (const auto& p : X) y.push_back(std::sin(3.0 * p[0]) + p[1]);
  const RbfModel a = fit_rbf(X, y);
  const RbfModel b = fit_rbf(X, y);
  const auto Q = random_unit_points(20, 2, 19);
  for (const auto& q : Q) REQUIRE(predict_rbf(a, q) == predict_rbf(b, q));
}
