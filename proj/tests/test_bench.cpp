// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "o3aed/bench.hpp"
#include "helpers.hpp"

using namespace o3aed;
using namespace o3aed::bench;
using Catch::Approx;

TEST_CASE("relative error metric") {
  REQUIRE(rel_err({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  REQUIRE(rel_err({0.0, 0.0}, {3.0, 4.0}) == Approx(1.0));
  REQUIRE(rel_err({2.0, 0.0}, {1.0, 0.0}) == Approx(1.0));
  REQUIRE_THROWS_AS(rel_err({1.0}, {0.0}), ZeroReference);
  REQUIRE_THROWS_AS(rel_err({1.0}, {1.0, 2.0}), std::invalid_argument);
  SECTION("degree-zero homogeneity under joint scaling") {
    const std::vector<double> a{0.3, 0.5, 0.1}, b{0.35, 0.4, 0.2};
    std::vector<double> a2, b2;
    for (double v : a) a2.push_back(7.5 * v);
    for (double v : b) b2.push_back(7.5 * v);
    REQUIRE(rel_err(a2, b2) == Approx(rel_err(a, b)).epsilon(1e-14));
  }
}

TEST_CASE("matching rate") {
  const BoxDomain dom = BoxDomain::cube(3, 0.0, 1.0);
  const auto f = batch_of([](const Point& x) { return 1.0 + 3.0 * x[0] + x[1] * x[2]; });
  const auto eff = mvmsl::elementary_effects_all(f, dom, Point{0.5, 0.5, 0.5}, 0.1);

  SECTION("identical maps match perfectly at any s") {
    REQUIRE(matching_rate(eff.effects, eff.effects, 2, 6) == 1.0);
    REQUIRE(matching_rate(eff.effects, eff.effects, 3, 4) == 1.0);
  }
  SECTION("disjoint top halves give zero") {
    // Assign synthetic effects so the computed map ranks exactly the keys
    // the reference ranks lowest.
    auto a = eff.effects, b = eff.effects;
    std::vector<mvmsl::PerturbationTuple> keys;
    for (const auto& [t, e] : a)
      if (t.level == 2) keys.push_back(t);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      a.at(keys[i]) = static_cast<double>(i);
      b.at(keys[i]) = static_cast<double>(keys.size() - i);
    }
    REQUIRE(matching_rate(a, b, 2, keys.size() / 2) == 0.0);
  }
  SECTION("key mismatch is detected") {
    auto a = eff.effects;
    a.erase(a.begin());
    REQUIRE_THROWS_AS(matching_rate(a, eff.effects, 1, 2), KeyMismatch);
  }
  SECTION("s beyond the key count is rejected") {
    REQUIRE_THROWS_AS(matching_rate(eff.effects, eff.effects, 2, 1000), std::invalid_argument);
  }
}

TEST_CASE("rank ordering") {
  REQUIRE(rank_order({0.1, 0.5, 0.3}) == std::vector<int>{2, 3, 1});
  REQUIRE(rank_order({0.5, 0.5, 0.1}) == std::vector<int>{1, 2, 3});  // tie: lower id first
}

TEST_CASE("efast reference oracle") {
  SECTION("additive function: S equals ST and evaluations count") {
    const BlackBox bb = builtin("additive10");
    const auto ref = reference_efast(bb, 5, 1001);
    REQUIRE(ref.evaluations == 10 * 1001);
    for (std::size_t i = 0; i < 10; ++i)
      REQUIRE(ref.indices.S[i] == Approx(ref.indices.ST[i]).margin(0.01));
    // Heterogeneous weights: top factor dominates.
    REQUIRE(rank_order(ref.indices.ST)[0] == 1);
  }
  SECTION("disk cache round trip") {
    testutil::TempDir tmp("refcache");
    const BlackBox bb = builtin("sphere2");
    bool hit = true;
    const auto a = cached_efast_reference(bb, "sphere2", 1001, tmp.path(), &hit);
    REQUIRE_FALSE(hit);
    const auto b = cached_efast_reference(bb, "sphere2", 1001, tmp.path(), &hit);
    REQUIRE(hit);
    REQUIRE(a.indices.S == b.indices.S);
    REQUIRE(a.indices.ST == b.indices.ST);
  }
}

TEST_CASE("mvmsl reference oracle") {
  const BlackBox bb = builtin("sphere5");
  const auto ref = reference_mvmsl(bb, Point(5, 0.25), 0.1);
  REQUIRE(ref.evaluations == 10 + 40 + 80);  // 2n + 2n(n-1) + 4n(n-1)(n-2)/3
  REQUIRE(ref.analysis.local.SI1.size() == 5);
}

TEST_CASE("efast comparison harness") {
  testutil::TempDir tmp("cmp");
  ComparisonConfig cfg;
  cfg.problem = "sphere2";
  cfg.mode = "efast";
  cfg.n_opt = 12;
  cfg.n_ext = 4;
  cfg.n_seeds = 2;
  cfg.seed0 = 5;
  cfg.efast_ns = 257;
  cfg.ref_ns = 2001;
  cfg.cache_dir = tmp.path();

  const auto res = run_comparison(cfg);

  SECTION("report structure") {
    REQUIRE(res.reports.size() == 1 + 2 * 3);  // REF + (O3AED_RBF, LHD_RBF, DIRECT) per seed
    REQUIRE(res.reports[0].method == "REF");
    std::size_t o3 = 0, lhd = 0, direct = 0;
    for (const auto& r : res.reports) {
      if (r.method == "O3AED_RBF") ++o3;
      if (r.method == "LHD_RBF") ++lhd;
      if (r.method == "DIRECT") ++direct;
      if (r.method != "REF") {
        REQUIRE(r.status == "ok");
        REQUIRE(r.rel_err.count("ST") == 1);
        REQUIRE(r.rel_err.at("ST") >= 0.0);
      }
    }
    REQUIRE(o3 == 2);
    REQUIRE(lhd == 2);
    REQUIRE(direct == 2);
  }
  SECTION("fair budgets across surrogate arms") {
    for (const auto& r : res.reports) {
      std::size_t total = 0;
      for (const auto& [tag, c] : r.budgets) total += c;
      if (r.method == "O3AED_RBF") {
        REQUIRE(r.budgets.at("opt") == 12);
        REQUIRE(r.budgets.at("lhd") == 4);
      }
      if (r.method == "LHD_RBF") REQUIRE(total == 16);
      if (r.method == "DIRECT") REQUIRE(r.budgets.at("direct") == 2 * 65);
    }
  }
  SECTION("byte-identical reruns") {
    const auto res2 = run_comparison(cfg);
    REQUIRE(result_to_json(cfg, res).dump() == result_to_json(cfg, res2).dump());
  }
  SECTION("rank tables") {
    save_rank_tables(res, tmp.path() / "tables");
    REQUIRE(std::filesystem::exists(tmp.path() / "tables" / "table_ST.csv"));
    std::ifstream in(tmp.path() / "tables" / "table_ST.csv");
    std::string header;
    std::getline(in, header);
    REQUIRE(header.rfind("rank,REF_i,REF_value", 0) == 0);
  }
}

TEST_CASE("mvmsl comparison harness") {
  testutil::TempDir tmp("cmpm");
  ComparisonConfig cfg;
  cfg.problem = "sphere5";
  cfg.mode = "mvmsl";
  cfg.n_opt = 15;
  cfg.rho = 0.2;
  cfg.oo_uni = 10;
  cfg.oo_bi = 20;
  cfg.oo_tri = 30;
  cfg.center = Point(5, 0.3);
  cfg.n_seeds = 2;
  cfg.seed0 = 2;
  cfg.cache_dir = tmp.path();

  const auto res = run_comparison(cfg);
  REQUIRE(res.reports.size() == 1 + 2 * 2);
  for (const auto& r : res.reports) {
    if (r.method == "REF") continue;
    INFO(r.method << ": " << r.status);
    REQUIRE(r.status == "ok");
    REQUIRE(r.rel_err.count("SI1") == 1);
    REQUIRE(r.rel_err.count("E2") == 1);
    REQUIRE(r.match.count("gamma2") == 1);
    REQUIRE(r.match.at("gamma2") >= 0.0);
    REQUIRE(r.match.at("gamma2") <= 1.0);
    std::size_t total = 0;
    for (const auto& [tag, c] : r.budgets) total += c;
    REQUIRE(total == 15 + 60);
    if (r.method == "O3AED_RBF") REQUIRE(r.budgets.at("oo") == 60);
    if (r.method == "LHD_RBF") REQUIRE(r.budgets.at("lhd") == 60);
  }
}

TEST_CASE("zero seeds run nothing") {
  ComparisonConfig cfg;
  cfg.problem = "sphere2";
  cfg.n_seeds = 0;
  const auto res = run_comparison(cfg);
  REQUIRE(res.reports.empty());
}
