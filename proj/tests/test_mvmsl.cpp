// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "o3aed/mvmsl.hpp"
#include "helpers.hpp"

using namespace o3aed;
using namespace o3aed::mvmsl;
using Catch::Approx;

namespace {

const BoxDomain kUnit2 = BoxDomain::cube(2, 0.0, 1.0);

BatchTarget linear_target() {
  return batch_of([](const Point& x) { return x[0] + 2.0 * x[1]; });
}

}  // namespace

TEST_CASE("tuple enumeration counts") {
  SECTION("population formulas") {
    REQUIRE(tuple_population(36, 1) == 72);
    REQUIRE(tuple_population(36, 2) == 2520);
    REQUIRE(tuple_population(36, 3) == 57120);
    REQUIRE(tuple_population(36, 1) + tuple_population(36, 2) + tuple_population(36, 3) == 59712);
    REQUIRE(tuple_population(10, 1) + tuple_population(10, 2) + tuple_population(10, 3) == 1160);
    REQUIRE(tuple_population(2, 3) == 0);
  }
  SECTION("enumeration sizes match the populations") {
    for (std::size_t n : {2u, 3u, 5u, 8u})
      for (int level = 1; level <= 3; ++level)
        REQUIRE(enumerate_tuples(n, level).size() == tuple_population(n, level));
  }
  SECTION("canonical order: combinations lexicographic, signs binary with + first") {
    const auto t = enumerate_tuples(3, 2);
    REQUIRE(t[0].idx == std::array<int, 3>{0, 1, -1});
    REQUIRE(t[0].sign == std::array<int, 3>{+1, +1, 0});
    REQUIRE(t[1].sign == std::array<int, 3>{+1, -1, 0});
    REQUIRE(t[2].sign == std::array<int, 3>{-1, +1, 0});
    REQUIRE(t[3].sign == std::array<int, 3>{-1, -1, 0});
    REQUIRE(t[4].idx == std::array<int, 3>{0, 2, -1});
    REQUIRE(t[8].idx == std::array<int, 3>{1, 2, -1});
  }
}

TEST_CASE("elementary effects on a linear function") {
  // f = x1 + 2 x2 at (0.5, 0.5), rho = 0.1: hand-computed relative changes.
  const Point xbar{0.5, 0.5};
  const auto eff = elementary_effects_all(linear_target(), kUnit2, xbar, 0.1);

  REQUIRE(eff.base_f == Approx(1.5));
  REQUIRE(eff.effects.size() == 2 * 2 + 2 * 2 * 1);  // 4 univariate + 4 bivariate
  REQUIRE(eff.effects.at(PerturbationTuple::uni(0, +1)) == Approx(0.1 / 1.5).epsilon(1e-12));
  REQUIRE(eff.effects.at(PerturbationTuple::uni(1, +1)) == Approx(0.2 / 1.5).epsilon(1e-12));
  REQUIRE(eff.effects.at(PerturbationTuple::bi(0, 1, +1, +1)) == Approx(0.3 / 1.5).epsilon(1e-12));
  REQUIRE(eff.effects.at(PerturbationTuple::bi(0, 1, +1, -1)) == Approx(0.1 / 1.5).epsilon(1e-12));

  SECTION("aggregates") {
    const LocalIndices li = aggregate(eff);
    REQUIRE(li.SI1[0] == Approx(0.1 / 1.5).epsilon(1e-12));
    REQUIRE(li.SI1[1] == Approx(0.2 / 1.5).epsilon(1e-12));
    REQUIRE(li.SI2_pair(0, 1) == Approx(0.2 / 1.5).epsilon(1e-12));  // (0.2+0.0667+0.0667+0.2)/4
    REQUIRE(li.SI2_pair(0, 1) == li.SI2_pair(1, 0));
    REQUIRE(li.SI2[0] == Approx(li.SI2_pair(0, 1)).epsilon(1e-12));
  }
  SECTION("H matrix and closed-form 2x2 eigen decomposition") {
    const LocalIndices li = aggregate(eff);
    const EigIndices ei = h_eig(li);
    const double a = 0.1 / 1.5, d = 0.2 / 1.5, b = 0.2 / 1.5;  // H = [[a, b], [b, d]]
    REQUIRE(ei.H(0, 0) == Approx(a).epsilon(1e-12));
    REQUIRE(ei.H(1, 1) == Approx(d).epsilon(1e-12));
    REQUIRE(ei.H(0, 1) == Approx(b).epsilon(1e-12));
    // Characteristic polynomial oracle.
    const double tr = a + d, det = a * d - b * b;
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    const double l1 = tr / 2.0 + disc, l2 = tr / 2.0 - disc;
    const double big = std::abs(l1) >= std::abs(l2) ? l1 : l2;
    const double small = std::abs(l1) >= std::abs(l2) ? l2 : l1;
    REQUIRE(ei.eigvals[0] == Approx(big).epsilon(1e-10));
    REQUIRE(ei.eigvals[1] == Approx(small).epsilon(1e-10));
    // Eigenvector of the dominant eigenvalue: (b, big - a), normalized.
    Eigen::Vector2d u(b, big - a);
    u.normalize();
    REQUIRE(ei.U1abs[0] == Approx(std::abs(u[0])).epsilon(1e-9));
    REQUIRE(ei.U1abs[1] == Approx(std::abs(u[1])).epsilon(1e-9));
    REQUIRE(std::hypot(ei.U1abs[0], ei.U1abs[1]) == Approx(1.0).margin(1e-10));
    REQUIRE(std::hypot(ei.U2abs[0], ei.U2abs[1]) == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("degenerate nominal point") {
  const auto zero_at = batch_of([](const Point& x) { return x[0] - 0.5; });
  REQUIRE_THROWS_AS(elementary_effects_all(zero_at, kUnit2, Point{0.5, 0.3}, 0.1),
                    DegenerateNominal);
}

TEST_CASE("effects are invariant under output scaling") {
  const Point xbar{0.4, 0.7};
  const auto f1 = batch_of([](const Point& x) { return 1.0 + x[0] * x[1]; });
  const auto f2 = batch_of([](const Point& x) { return -3.5 * (1.0 + x[0] * x[1]); });
  const auto a = elementary_effects_all(f1, kUnit2, xbar, 0.2);
  const auto b = elementary_effects_all(f2, kUnit2, xbar, 0.2);
  for (const auto& [t, e] : a.effects) REQUIRE(b.effects.at(t) == e);
}

TEST_CASE("symmetric function gives equal indices at a symmetric point") {
  const BoxDomain dom = BoxDomain::cube(3, 0.0, 1.0);
  const auto f = batch_of([](const Point& x) {
    return 1.0 + x[0] * x[0] + x[1] * x[1] + 0.5 * x[0] * x[1] + x[2];
  });
  const auto a = analyze(f, dom, Point{0.5, 0.5, 0.5}, 0.2);
  REQUIRE(a.local.SI1[0] == Approx(a.local.SI1[1]).epsilon(1e-12));
  REQUIRE(a.local.SI2[0] == Approx(a.local.SI2[1]).epsilon(1e-12));
  REQUIRE(a.local.SI3[0] == Approx(a.local.SI3[1]).epsilon(1e-12));
}

TEST_CASE("aggregate invariants") {
  const BoxDomain dom = BoxDomain::cube(4, 0.0, 1.0);
  const auto f = batch_of([](const Point& x) {
    return 2.0 + x[0] + x[1] * x[1] + std::sin(x[2]) + x[0] * x[3];
  });
  const auto a = analyze(f, dom, Point{0.3, 0.6, 0.5, 0.4}, 0.15);
  const std::size_t n = 4;

  SECTION("all effects and aggregates nonnegative") {
    for (const auto& [t, e] : a.effects.effects) REQUIRE(e >= 0.0);
    for (double v : a.local.SI1) REQUIRE(v >= 0.0);
    for (double v : a.local.SI2) REQUIRE(v >= 0.0);
    for (double v : a.local.SI3) REQUIRE(v >= 0.0);
  }
  SECTION("SI2/SI3 equal their defining averages, recomputed") {
    for (std::size_t i = 0; i < n; ++i) {
      double s2 = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) s2 += a.local.SI2_pair(i, j);
      REQUIRE(a.local.SI2[i] == Approx(s2 / (n - 1)).margin(1e-14));
      double s3 = 0.0;
      std::size_t c3 = 0;
      for (const auto& [key, val] : a.local.SI3_triple) {
        if (key[0] == static_cast<int>(i) || key[1] == static_cast<int>(i) ||
            key[2] == static_cast<int>(i)) {
          s3 += val;
          ++c3;
        }
      }
      REQUIRE(c3 == (n - 1) * (n - 2) / 2);
      REQUIRE(a.local.SI3[i] == Approx(s3 / static_cast<double>(c3)).margin(1e-14));
    }
  }
  SECTION("H is exactly symmetric") {
    REQUIRE((a.eig.H - a.eig.H.transpose()).norm() == 0.0);
  }
  SECTION("n=3 SI3 averages exactly one triple value") {
    const BoxDomain d3 = BoxDomain::cube(3, 0.0, 1.0);
    const auto g = batch_of([](const Point& x) { return 1.0 + x[0] + x[1] + x[2]; });
    const auto r = analyze(g, d3, Point{0.5, 0.5, 0.5}, 0.1);
    REQUIRE(r.local.SI3[0] == Approx(r.local.SI3_triple.at({0, 1, 2})).margin(1e-15));
  }
}

TEST_CASE("diagonal H has a standard basis dominant eigenvector") {
  LocalIndices li;
  li.SI1 = {0.1, 0.7, 0.3};
  li.SI2 = {0.0, 0.0, 0.0};
  li.SI3 = {0.0, 0.0, 0.0};
  li.SI2_pair = Eigen::MatrixXd::Zero(3, 3);
  const EigIndices ei = h_eig(li);
  REQUIRE(ei.eigvals[0] == Approx(0.7));
  REQUIRE(ei.U1abs[1] == Approx(1.0));
  REQUIRE(ei.U1abs[0] == Approx(0.0).margin(1e-12));
}

TEST_CASE("boundary clipping keeps tuple keys and never throws OutOfDomain") {
  testutil::CaptureWarnings cap;
  const auto f = batch_of([](const Point& x) { return 1.0 + x[0] + x[1]; });
  const Point xbar{0.05, 0.95};
  const auto eff = elementary_effects_all(f, kUnit2, xbar, 0.2);
  REQUIRE(eff.effects.size() == tuple_population(2, 1) + tuple_population(2, 2));
  REQUIRE(eff.effects.count(PerturbationTuple::uni(0, -1)) == 1);  // clipped to x1 = 0
  REQUIRE_FALSE(cap.messages.empty());
}

TEST_CASE("incomplete effect maps are rejected by aggregate") {
  const auto f = batch_of([](const Point& x) { return 1.0 + x[0]; });
  auto tuples = enumerate_tuples(2, 1);
  tuples.pop_back();  // drop one sign combination
  const auto eff = elementary_effects(f, kUnit2, Point{0.5, 0.5}, 0.1, tuples);
  REQUIRE_THROWS_AS(aggregate(eff), IncompleteEffects);
}

TEST_CASE("surrogate-path analysis equals the composed direct path") {
  // With the true function standing in for the surrogate, both entry points
  // must agree bit for bit (same clipping, same tuple order).
  const BoxDomain dom = BoxDomain::cube(5, -1.0, 1.0);
  const auto f = batch_of([](const Point& x) {
    double s = 1.0;
    for (double c : x) s += c * c;
    return s;
  });
  const Point xbar(5, -0.5);
  for (double rho : {0.1, 0.2}) {
    const auto direct_eff = elementary_effects_all(f, dom, xbar, rho);
    const auto direct_local = aggregate(direct_eff);
    const auto direct_eig = h_eig(direct_local);
    const auto surr = analyze(f, dom, xbar, rho);
    REQUIRE(surr.effects.effects == direct_eff.effects);
    REQUIRE(surr.local.SI1 == direct_local.SI1);
    REQUIRE(surr.local.SI2 == direct_local.SI2);
    REQUIRE(surr.local.SI3 == direct_local.SI3);
    REQUIRE(surr.eig.U1abs == direct_eig.U1abs);
    REQUIRE(surr.eig.U2abs == direct_eig.U2abs);
  }
}

TEST_CASE("mvmsl CSV exports") {
  testutil::TempDir tmp("mvmsl");
  const auto f = batch_of([](const Point& x) { return 1.0 + x[0] + x[1]; });
  const auto a = analyze(f, kUnit2, Point{0.5, 0.5}, 0.1);
  save_effects_csv(a.effects, tmp.path() / "eff.csv");
  save_aggregates_csv(a.local, a.eig, tmp.path() / "agg.csv");
  std::ifstream e(tmp.path() / "eff.csv"), g(tmp.path() / "agg.csv");
  std::string line;
  std::getline(e, line);
  REQUIRE(line == "level,indices,signs,rho,effect");
  std::getline(e, line);
  REQUIRE(line.rfind("1,1,+,0.1", 0) == 0);
  std::getline(g, line);
  REQUIRE(line == "i,SI1,SI2,SI3,E1,E2");
  REQUIRE(testutil::line_count(tmp.path() / "agg.csv") == 3);
}
