// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "o3aed/design.hpp"
#include "o3aed/efast.hpp"
#include "o3aed/mvmsl.hpp"
#include "o3aed/optimizer.hpp"
#include "o3aed/surrogate.hpp"

namespace o3aed::bench {

/// Seed of the gold-standard reference estimates. Fixed so reruns are cache
/// hits and reports stay byte-identical.
inline constexpr std::uint64_t kReferenceSeed = 9001;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// l2 relative error ||computed - reference|| / ||reference||.
inline double rel_err(const std::vector<double>& computed, const std::vector<double>& reference) {
  if (computed.size() != reference.size())
    throw std::invalid_argument("rel_err: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < computed.size(); ++i) {
    num += sq(computed[i] - reference[i]);
    den += sq(reference[i]);
  }
  if (den == 0.0) throw ZeroReference("rel_err: reference vector has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

/// Fraction of the top-s most sensitive perturbation keys of one level that
/// the computed effects detect, against the reference ranking. Ties break by
/// tuple order, so identical maps always give gamma = 1.
inline double matching_rate(const std::map<mvmsl::PerturbationTuple, double>& computed,
                            const std::map<mvmsl::PerturbationTuple, double>& reference, int level,
                            std::size_t s) {
  using Entry = std::pair<mvmsl::PerturbationTuple, double>;
  auto extract = [&](const std::map<mvmsl::PerturbationTuple, double>& m) {
    std::vector<Entry> v;
    for (const auto& [t, e] : m)
      if (t.level == level) v.push_back({t, e});
    return v;
  };
  std::vector<Entry> a = extract(computed), b = extract(reference);
  if (a.size() != b.size()) throw KeyMismatch("matching_rate: effect key spaces differ");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].first == b[i].first)) throw KeyMismatch("matching_rate: effect key spaces differ");
  if (a.empty()) throw KeyMismatch("matching_rate: no effects at level " + std::to_string(level));
  if (s > a.size()) throw std::invalid_argument("matching_rate: s exceeds key count");
  auto by_effect = [](const Entry& x, const Entry& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  };
  std::sort(a.begin(), a.end(), by_effect);
  std::sort(b.begin(), b.end(), by_effect);
  std::set<mvmsl::PerturbationTuple> top_b;
  for (std::size_t i = 0; i < s; ++i) top_b.insert(b[i].first);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < s; ++i) hit += top_b.count(a[i].first);
  return static_cast<double>(hit) / static_cast<double>(s);
}

/// 1-based variable ids sorted by value descending, ties by lower id.
inline std::vector<int> rank_order(const std::vector<double>& values) {
  std::vector<int> ids(values.size());
  std::iota(ids.begin(), ids.end(), 1);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a - 1)] > values[static_cast<std::size_t>(b - 1)];
  });
  return ids;
}

// ---------------------------------------------------------------------------
// Gold-standard references
// ---------------------------------------------------------------------------

struct EfastReference {
  efast::FastPlan plan;
  efast::FastIndices indices;
  std::size_t evaluations = 0;
};

/// Reference Extended FAST estimate with 10000 samples per factor (rounded
/// up to the next odd count, so n extra evaluations in total).
inline EfastReference reference_efast(const BlackBox& bb, std::uint64_t seed = kReferenceSeed,
                                      std::size_t ns = 10001) {
  EfastReference ref;
  ref.plan = efast::fast_plan(bb.dim(), 4, ns, seed);
  ref.indices = efast::fast_indices(batch_of([&](const Point& x) { return bb(x); }), bb.domain(),
                                    ref.plan);
  ref.evaluations = ref.plan.total_evaluations();
  return ref;
}

struct MvmslReference {
  Point center_unit;
  double rho = 0.2;
  mvmsl::Analysis analysis;
  std::size_t evaluations = 0;  // perturbation samples (base point excluded)
};

/// Fully enumerated elementary effects, aggregates and eigen-indices on the
/// raw function around `center_unit`.
inline MvmslReference reference_mvmsl(const BlackBox& bb, const Point& center_unit, double rho) {
  MvmslReference ref;
  ref.center_unit = center_unit;
  ref.rho = rho;
  const Point xbar = bb.domain().denormalize(center_unit);
  ref.analysis =
      mvmsl::analyze(batch_of([&](const Point& x) { return bb(x); }), bb.domain(), xbar, rho);
  ref.evaluations = ref.analysis.effects.effects.size();
  return ref;
}

// ---------------------------------------------------------------------------
// Reference (de)serialization and caching
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json effects_to_json(const mvmsl::ElementaryEffects& eff) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [t, e] : eff.effects) {
    nlohmann::json row = nlohmann::json::array();
    row.push_back(t.level);
    for (int s = 0; s < 3; ++s) row.push_back(t.idx[s]);
    for (int s = 0; s < 3; ++s) row.push_back(t.sign[s]);
    row.push_back(e);
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"base_x", eff.base_x}, {"base_f", eff.base_f}, {"rho", eff.rho},
                        {"rows", std::move(rows)}};
}

inline mvmsl::ElementaryEffects effects_from_json(const nlohmann::json& j) {
  mvmsl::ElementaryEffects eff;
  eff.base_x = j.at("base_x").get<Point>();
  eff.base_f = j.at("base_f").get<double>();
  eff.rho = j.at("rho").get<double>();
  for (const auto& row : j.at("rows")) {
    mvmsl::PerturbationTuple t;
    t.level = row[0].get<int>();
    for (int s = 0; s < 3; ++s) t.idx[s] = row[1 + s].get<int>();
    for (int s = 0; s < 3; ++s) t.sign[s] = row[4 + s].get<int>();
    eff.effects[t] = row[7].get<double>();
  }
  return eff;
}

}  // namespace detail

inline nlohmann::json efast_ref_to_json(const std::string& problem, const EfastReference& ref) {
  return nlohmann::json{{"problem", problem},
                        {"mode", "efast"},
                        {"n", ref.plan.n},
                        {"M", ref.plan.M},
                        {"Ns", ref.plan.Ns},
                        {"seed", ref.plan.seed},
                        {"evaluations", ref.evaluations},
                        {"S", ref.indices.S},
                        {"ST", ref.indices.ST},
                        {"V", ref.indices.V}};
}

inline nlohmann::json mvmsl_ref_to_json(const std::string& problem, const MvmslReference& ref,
                                        std::size_t center_n_opt, std::uint64_t center_seed) {
  nlohmann::json j{{"problem", problem},
                   {"mode", "mvmsl"},
                   {"rho", ref.rho},
                   {"center", ref.center_unit},
                   {"center_n_opt", center_n_opt},
                   {"center_seed", center_seed},
                   {"evaluations", ref.evaluations},
                   {"SI1", ref.analysis.local.SI1},
                   {"SI2", ref.analysis.local.SI2},
                   {"SI3", ref.analysis.local.SI3},
                   {"E1", ref.analysis.eig.U1abs},
                   {"E2", ref.analysis.eig.U2abs},
                   {"eigvals", ref.analysis.eig.eigvals}};
  j["effects"] = detail::effects_to_json(ref.analysis.effects);
  return j;
}

// ---------------------------------------------------------------------------
// Comparison harness
// ---------------------------------------------------------------------------

struct ComparisonConfig {
  std::string problem = "testproblem1";
  std::string mode = "efast";  // efast | mvmsl
  std::size_t n_opt = 100;
  std::size_t n_ext = 0;  // efast-mode extension budget
  double rho = 0.2;       // mvmsl step fraction
  // Objective-oriented extension counts; SIZE_MAX means the defaults
  // 2n / 45n / 40n, clamped to each level's population.
  std::size_t oo_uni = SIZE_MAX, oo_bi = SIZE_MAX, oo_tri = SIZE_MAX;
  std::optional<Point> center;  // unit-cube nominal point for mvmsl mode
  std::vector<std::string> surrogates{"rbf"};
  std::size_t n_seeds = 10;
  std::uint64_t seed0 = 1;
  std::size_t efast_ns = 10001;  // surrogate-side plan samples per factor
  std::size_t ref_ns = 10001;    // reference plan samples per factor
  std::size_t kriging_starts = 20;
  std::size_t match_top = 100;  // s for the gamma_2 / gamma_3 matching rates
  std::filesystem::path cache_dir;  // empty = no on-disk reference cache
};

struct ComparisonReport {
  std::string method;  // O3AED_RBF, O3AED_Kriging, LHD_RBF, LHD_Kriging, DIRECT, REF
  std::string mode;
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::map<std::string, std::size_t> budgets;               // tag -> evaluation count
  std::map<std::string, std::vector<double>> indices;       // family -> values
  std::map<std::string, double> rel_err;                    // family -> error vs REF
  std::map<std::string, double> match;                      // gamma2 / gamma3
  std::map<std::string, std::vector<int>> ranks;            // family -> variable order
};

struct ComparisonResult {
  std::vector<ComparisonReport> reports;  // REF first
  std::uint64_t ref_hash = 0;
  nlohmann::json ref_json;
};

namespace detail {

inline constexpr std::uint64_t kExtSalt = 0xa5a5a5a5ull;
inline constexpr std::uint64_t kLhdSalt = 0x5a5a5a5aull;
inline constexpr std::uint64_t kOoSalt = 0xc3c3c3c3ull;

inline std::vector<Point> log_points_unit(const EvaluationLog& log) {
  std::vector<Point> X;
  X.reserve(log.size());
  for (const auto& r : log.records()) X.push_back(log.domain().normalize(r.x));
  return X;
}

inline std::vector<double> log_values(const EvaluationLog& log) {
  std::vector<double> y;
  y.reserve(log.size());
  for (const auto& r : log.records()) y.push_back(r.y);
  return y;
}

inline surrogate::Surrogate fit_surrogate(const std::string& kind, const std::vector<Point>& X,
                                          const std::vector<double>& y, const BoxDomain& domain,
                                          std::size_t kriging_starts) {
  surrogate::Surrogate s;
  s.type = kind;
  s.domain = domain;
  if (kind == "rbf") {
    s.rbf = surrogate::fit_rbf(X, y);
  } else if (kind == "kriging") {
    surrogate::KrigingOptions opt;
    opt.starts = kriging_starts;
    s.kriging = surrogate::fit_kriging(X, y, opt);
  } else {
    throw std::invalid_argument("unknown surrogate kind: " + kind);
  }
  return s;
}

/// Batch target evaluating a fitted surrogate at domain-coordinate points.
inline BatchTarget surrogate_target(const surrogate::Surrogate& s) {
  return [&s](const std::vector<Point>& pts) {
    std::vector<Point> unit;
    unit.reserve(pts.size());
    for (const auto& p : pts) unit.push_back(s.domain.normalize(p));
    return s.predict_unit(unit);
  };
}

/// Batch target evaluating the raw function through a budgeted log.
inline BatchTarget logged_target(const BlackBox& bb, EvaluationLog& log, Tag tag) {
  return [&bb, &log, tag](const std::vector<Point>& pts) {
    return evaluate_batch(bb, pts, log, tag);
  };
}

inline std::string method_name(const std::string& arm, const std::string& kind) {
  std::string suffix = kind == "rbf" ? "RBF" : "Kriging";
  return arm + "_" + suffix;
}

inline std::map<std::string, std::size_t> budget_map(const EvaluationLog& log) {
  std::map<std::string, std::size_t> b;
  for (Tag t : {Tag::opt, Tag::lhd, Tag::oo, Tag::direct, Tag::reference}) {
    const std::size_t c = log.count(t);
    if (c) b[to_string(t)] = c;
  }
  return b;
}

}  // namespace detail

/// Load the efast reference from cache or compute (and cache) it.
inline EfastReference cached_efast_reference(const BlackBox& bb, const std::string& problem,
                                             std::size_t ref_ns,
                                             const std::filesystem::path& cache_dir,
                                             bool* cache_hit = nullptr) {
  namespace fs = std::filesystem;
  const fs::path file =
      cache_dir.empty() ? fs::path{} : cache_dir / ("ref_" + problem + "_efast.json");
  if (cache_hit) *cache_hit = false;
  if (!file.empty() && fs::exists(file)) {
    std::ifstream in(file);
    nlohmann::json j;
    in >> j;
    if (j.value("problem", "") == problem && j.value("Ns", std::size_t{0}) == ref_ns &&
        j.value("seed", std::uint64_t{0}) == kReferenceSeed) {
      EfastReference ref;
      ref.plan = efast::fast_plan(bb.dim(), j.at("M").get<int>(), ref_ns, kReferenceSeed);
      ref.indices.S = j.at("S").get<std::vector<double>>();
      ref.indices.ST = j.at("ST").get<std::vector<double>>();
      ref.indices.V = j.at("V").get<double>();
      ref.evaluations = j.at("evaluations").get<std::size_t>();
      if (cache_hit) *cache_hit = true;
      return ref;
    }
  }
  EfastReference ref = reference_efast(bb, kReferenceSeed, ref_ns);
  if (!file.empty()) {
    std::filesystem::create_directories(cache_dir);
    std::ofstream out(file);
    out << efast_ref_to_json(problem, ref).dump(2) << "\n";
  }
  return ref;
}

/// Load the mvmsl reference (including the canonical nominal point) from
/// cache or compute it. When no explicit center is given, the nominal point
/// is the optimum of one canonical optimizer run (budget n_opt, seed0).
inline MvmslReference cached_mvmsl_reference(const BlackBox& bb, const ComparisonConfig& cfg,
                                             bool* cache_hit = nullptr) {
  namespace fs = std::filesystem;
  char rho_tag[32];
  std::snprintf(rho_tag, sizeof(rho_tag), "%g", cfg.rho);
  const fs::path file = cfg.cache_dir.empty()
                            ? fs::path{}
                            : cfg.cache_dir / ("ref_" + cfg.problem + "_mvmsl_rho" + rho_tag + ".json");
  const std::size_t center_n_opt = cfg.center ? 0 : cfg.n_opt;
  const std::uint64_t center_seed = cfg.center ? 0 : cfg.seed0;
  if (cache_hit) *cache_hit = false;
  if (!file.empty() && fs::exists(file)) {
    std::ifstream in(file);
    nlohmann::json j;
    in >> j;
    if (j.value("problem", "") == cfg.problem && j.value("rho", -1.0) == cfg.rho &&
        j.value("center_n_opt", SIZE_MAX) == center_n_opt &&
        j.value("center_seed", UINT64_MAX) == center_seed &&
        (!cfg.center || j.at("center").get<Point>() == *cfg.center)) {
      MvmslReference ref;
      ref.center_unit = j.at("center").get<Point>();
      ref.rho = cfg.rho;
      ref.evaluations = j.at("evaluations").get<std::size_t>();
      ref.analysis.effects = detail::effects_from_json(j.at("effects"));
      ref.analysis.local = mvmsl::aggregate(ref.analysis.effects);
      ref.analysis.eig = mvmsl::h_eig(ref.analysis.local);
      if (cache_hit) *cache_hit = true;
      return ref;
    }
  }
  Point center;
  if (cfg.center) {
    center = *cfg.center;
  } else {
    EvaluationLog log(bb.domain(), cfg.n_opt);
    const auto res =
        optimizer::optimize(bb, optimizer::OptimizerConfig::defaults(bb.dim(), cfg.n_opt, cfg.seed0), log);
    center = bb.domain().normalize(res.x_star);
  }
  MvmslReference ref = reference_mvmsl(bb, center, cfg.rho);
  if (!file.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    std::ofstream out(file);
    out << mvmsl_ref_to_json(cfg.problem, ref, center_n_opt, center_seed).dump(2) << "\n";
  }
  return ref;
}

namespace detail {

inline void attach_efast_metrics(ComparisonReport& rep, const efast::FastIndices& fi,
                                 const EfastReference& ref) {
  rep.indices["S"] = fi.S;
  rep.indices["ST"] = fi.ST;
  rep.rel_err["S"] = rel_err(fi.S, ref.indices.S);
  rep.rel_err["ST"] = rel_err(fi.ST, ref.indices.ST);
  rep.ranks["S"] = rank_order(fi.S);
  rep.ranks["ST"] = rank_order(fi.ST);
}

inline void attach_mvmsl_metrics(ComparisonReport& rep, const mvmsl::Analysis& a,
                                 const MvmslReference& ref, std::size_t match_top) {
  rep.indices["SI1"] = a.local.SI1;
  rep.indices["SI2"] = a.local.SI2;
  rep.indices["SI3"] = a.local.SI3;
  rep.indices["E1"] = a.eig.U1abs;
  rep.indices["E2"] = a.eig.U2abs;
  rep.rel_err["SI1"] = rel_err(a.local.SI1, ref.analysis.local.SI1);
  rep.rel_err["SI2"] = rel_err(a.local.SI2, ref.analysis.local.SI2);
  rep.rel_err["SI3"] = rel_err(a.local.SI3, ref.analysis.local.SI3);
  rep.rel_err["E1"] = rel_err(a.eig.U1abs, ref.analysis.eig.U1abs);
  rep.rel_err["E2"] = rel_err(a.eig.U2abs, ref.analysis.eig.U2abs);
  for (const std::string& fam : {"SI1", "SI2", "SI3", "E1", "E2"})
    rep.ranks[fam] = rank_order(rep.indices[fam]);
  const std::size_t n = a.local.SI1.size();
  for (int level : {2, 3}) {
    const std::size_t pop = mvmsl::tuple_population(n, level);
    if (pop == 0) continue;
    const std::size_t s = std::min(match_top, pop);
    rep.match["gamma" + std::to_string(level)] =
        matching_rate(a.effects.effects, ref.analysis.effects.effects, level, s);
  }
}

}  // namespace detail

/// Run the seeded O3AED / LHD / DIRECT comparison for one problem and mode.
/// Every surrogate-based arm spends exactly the same number of raw-function
/// evaluations; the reference is computed once and shared across seeds.
inline ComparisonResult run_comparison(const ComparisonConfig& cfg) {
  ComparisonResult result;
  if (cfg.n_seeds == 0) return result;
  if (cfg.mode != "efast" && cfg.mode != "mvmsl")
    throw std::invalid_argument("run_comparison: mode must be efast or mvmsl");
  const BlackBox bb = builtin(cfg.problem);
  const std::size_t n = bb.dim();

  // Gold standard, shared across seeds.
  EfastReference efast_ref;
  MvmslReference mvmsl_ref;
  ComparisonReport ref_rep;
  ref_rep.method = "REF";
  ref_rep.mode = cfg.mode;
  ref_rep.seed = kReferenceSeed;
  if (cfg.mode == "efast") {
    efast_ref = cached_efast_reference(bb, cfg.problem, cfg.ref_ns, cfg.cache_dir);
    ref_rep.budgets["reference"] = efast_ref.evaluations;
    ref_rep.indices["S"] = efast_ref.indices.S;
    ref_rep.indices["ST"] = efast_ref.indices.ST;
    ref_rep.ranks["S"] = rank_order(efast_ref.indices.S);
    ref_rep.ranks["ST"] = rank_order(efast_ref.indices.ST);
    result.ref_json = efast_ref_to_json(cfg.problem, efast_ref);
  } else {
    mvmsl_ref = cached_mvmsl_reference(bb, cfg);
    ref_rep.budgets["reference"] = mvmsl_ref.evaluations;
    ref_rep.indices["SI1"] = mvmsl_ref.analysis.local.SI1;
    ref_rep.indices["SI2"] = mvmsl_ref.analysis.local.SI2;
    ref_rep.indices["SI3"] = mvmsl_ref.analysis.local.SI3;
    ref_rep.indices["E1"] = mvmsl_ref.analysis.eig.U1abs;
    ref_rep.indices["E2"] = mvmsl_ref.analysis.eig.U2abs;
    for (const std::string& fam : {"SI1", "SI2", "SI3", "E1", "E2"})
      ref_rep.ranks[fam] = rank_order(ref_rep.indices[fam]);
    result.ref_json = mvmsl_ref_to_json(cfg.problem, mvmsl_ref, cfg.center ? 0 : cfg.n_opt,
                                        cfg.center ? 0 : cfg.seed0);
  }
  result.ref_hash = fnv1a(result.ref_json.dump());
  result.reports.push_back(ref_rep);

  // Objective-oriented counts (defaults 2n / 45n / 40n, clamped to the
  // populations).
  auto clamp_count = [&](std::size_t req, std::size_t dflt, int level) {
    const std::size_t pop = mvmsl::tuple_population(n, level);
    const std::size_t want = req == SIZE_MAX ? std::min(dflt, pop) : req;
    if (want > pop) {
      warn("run_comparison: oo count " + std::to_string(want) + " exceeds population " +
           std::to_string(pop) + " at level " + std::to_string(level) + ", clamping");
      return pop;
    }
    return want;
  };
  const std::size_t oo_uni = clamp_count(cfg.oo_uni, 2 * n, 1);
  const std::size_t oo_bi = clamp_count(cfg.oo_bi, 45 * n, 2);
  const std::size_t oo_tri = clamp_count(cfg.oo_tri, 40 * n, 3);
  const std::size_t ext_total = cfg.mode == "efast" ? cfg.n_ext : oo_uni + oo_bi + oo_tri;
  const std::size_t arm_total = cfg.n_opt + ext_total;

  for (std::size_t i = 0; i < cfg.n_seeds; ++i) {
    const std::uint64_t seed = cfg.seed0 + i;
    auto guarded = [&](const std::string& method, auto&& body) {
      ComparisonReport rep;
      rep.method = method;
      rep.mode = cfg.mode;
      rep.seed = seed;
      try {
        body(rep);
      } catch (const std::exception& e) {
        rep.status = std::string("failed: ") + e.what();
      }
      result.reports.push_back(std::move(rep));
    };

    if (cfg.mode == "efast") {
      const efast::FastPlan plan = efast::fast_plan(n, 4, cfg.efast_ns, seed);

      // O3AED arm: optimizer trace plus optional space-filling extension.
      EvaluationLog log_o3(bb.domain(), arm_total);
      optimizer::optimize(bb, optimizer::OptimizerConfig::defaults(n, cfg.n_opt, seed), log_o3);
      if (cfg.n_ext > 0) {
        const auto ext = design::maximin_lhs(cfg.n_ext, n, seed ^ detail::kExtSalt);
        std::vector<Point> pts;
        for (const auto& u : ext.points) pts.push_back(bb.domain().denormalize(u));
        evaluate_batch(bb, pts, log_o3, Tag::lhd);
      }
      for (const std::string& kind : cfg.surrogates) {
        guarded(detail::method_name("O3AED", kind), [&](ComparisonReport& rep) {
          const auto s = detail::fit_surrogate(kind, detail::log_points_unit(log_o3),
                                               detail::log_values(log_o3), bb.domain(),
                                               cfg.kriging_starts);
          const auto fi = efast::fast_indices(detail::surrogate_target(s), bb.domain(), plan);
          rep.budgets = detail::budget_map(log_o3);
          detail::attach_efast_metrics(rep, fi, efast_ref);
        });
      }

      // LHD arm: one space-filling design of the same total size.
      EvaluationLog log_lhd(bb.domain(), arm_total);
      {
        const auto dm = design::maximin_lhs(arm_total, n, seed ^ detail::kLhdSalt);
        std::vector<Point> pts;
        for (const auto& u : dm.points) pts.push_back(bb.domain().denormalize(u));
        evaluate_batch(bb, pts, log_lhd, Tag::lhd);
      }
      if (log_lhd.size() != log_o3.size())
        throw Error("run_comparison: unequal raw-function budgets across surrogate arms");
      for (const std::string& kind : cfg.surrogates) {
        guarded(detail::method_name("LHD", kind), [&](ComparisonReport& rep) {
          const auto s = detail::fit_surrogate(kind, detail::log_points_unit(log_lhd),
                                               detail::log_values(log_lhd), bb.domain(),
                                               cfg.kriging_starts);
          const auto fi = efast::fast_indices(detail::surrogate_target(s), bb.domain(), plan);
          rep.budgets = detail::budget_map(log_lhd);
          detail::attach_efast_metrics(rep, fi, efast_ref);
        });
      }

      // DIRECT arm: Extended FAST on the raw function at the same total
      // budget, floored at 65 samples per factor.
      guarded("DIRECT", [&](ComparisonReport& rep) {
        std::size_t ns_direct = std::max<std::size_t>(65, arm_total / n);
        if (ns_direct % 2 == 0) --ns_direct;
        const efast::FastPlan dplan = efast::fast_plan(n, 4, ns_direct, seed);
        EvaluationLog log_direct(bb.domain());
        const auto fi =
            efast::fast_indices(detail::logged_target(bb, log_direct, Tag::direct), bb.domain(), dplan);
        rep.budgets = detail::budget_map(log_direct);
        detail::attach_efast_metrics(rep, fi, efast_ref);
      });
    } else {
      // mvmsl mode: both arms share the optimizer trace and differ in the
      // extension design (objective-oriented subset vs local space-filling).
      const Point& center = mvmsl_ref.center_unit;
      const Point xbar = bb.domain().denormalize(center);

      EvaluationLog log_opt(bb.domain(), cfg.n_opt);
      optimizer::optimize(bb, optimizer::OptimizerConfig::defaults(n, cfg.n_opt, seed), log_opt);

      auto with_trace = [&]() {
        EvaluationLog log(bb.domain(), arm_total);
        for (const auto& r : log_opt.records()) log.append(r.x, r.y, r.tag);
        return log;
      };

      // O3AED arm: objective-oriented extension.
      EvaluationLog log_o3 = with_trace();
      {
        design::OODesignSpec spec;
        spec.center = center;
        spec.rho = cfg.rho;
        spec.n_uni = oo_uni;
        spec.n_bi = oo_bi;
        spec.n_tri = oo_tri;
        spec.seed = seed ^ detail::kOoSalt;
        const auto dm = design::oo_design(spec);
        std::vector<Point> pts;
        for (const auto& u : dm.points) pts.push_back(bb.domain().denormalize(u));
        evaluate_batch(bb, pts, log_o3, Tag::oo);
      }

      // LHD arm: space-filling extension inside the perturbation
      // neighborhood of the nominal point.
      EvaluationLog log_lhd = with_trace();
      {
        Point lo(n), hi(n);
        for (std::size_t k = 0; k < n; ++k) {
          lo[k] = std::max(0.0, center[k] - cfg.rho);
          hi[k] = std::min(1.0, center[k] + cfg.rho);
        }
        const auto dm = design::maximin_lhs(ext_total, n, seed ^ detail::kLhdSalt);
        std::vector<Point> pts;
        for (const auto& u : dm.points) {
          Point p(n);
          for (std::size_t k = 0; k < n; ++k) p[k] = lo[k] + u[k] * (hi[k] - lo[k]);
          pts.push_back(bb.domain().denormalize(p));
        }
        evaluate_batch(bb, pts, log_lhd, Tag::lhd);
      }
      if (log_lhd.size() != log_o3.size())
        throw Error("run_comparison: unequal raw-function budgets across surrogate arms");

      for (const std::string& kind : cfg.surrogates) {
        guarded(detail::method_name("O3AED", kind), [&](ComparisonReport& rep) {
          const auto s = detail::fit_surrogate(kind, detail::log_points_unit(log_o3),
                                               detail::log_values(log_o3), bb.domain(),
                                               cfg.kriging_starts);
          const auto a = mvmsl::analyze(detail::surrogate_target(s), bb.domain(), xbar, cfg.rho);
          rep.budgets = detail::budget_map(log_o3);
          detail::attach_mvmsl_metrics(rep, a, mvmsl_ref, cfg.match_top);
        });
        guarded(detail::method_name("LHD", kind), [&](ComparisonReport& rep) {
          const auto s = detail::fit_surrogate(kind, detail::log_points_unit(log_lhd),
                                               detail::log_values(log_lhd), bb.domain(),
                                               cfg.kriging_starts);
          const auto a = mvmsl::analyze(detail::surrogate_target(s), bb.domain(), xbar, cfg.rho);
          rep.budgets = detail::budget_map(log_lhd);
          detail::attach_mvmsl_metrics(rep, a, mvmsl_ref, cfg.match_top);
        });
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const ComparisonConfig& cfg) {
  nlohmann::json j{{"problem", cfg.problem},
                   {"mode", cfg.mode},
                   {"n_opt", cfg.n_opt},
                   {"n_ext", cfg.n_ext},
                   {"rho", cfg.rho},
                   {"surrogates", cfg.surrogates},
                   {"n_seeds", cfg.n_seeds},
                   {"seed0", cfg.seed0},
                   {"efast_ns", cfg.efast_ns},
                   {"ref_ns", cfg.ref_ns},
                   {"kriging_starts", cfg.kriging_starts},
                   {"match_top", cfg.match_top}};
  if (cfg.oo_uni != SIZE_MAX) j["oo_uni"] = cfg.oo_uni;
  if (cfg.oo_bi != SIZE_MAX) j["oo_bi"] = cfg.oo_bi;
  if (cfg.oo_tri != SIZE_MAX) j["oo_tri"] = cfg.oo_tri;
  if (cfg.center) j["center"] = *cfg.center;
  return j;
}

inline nlohmann::json report_to_json(const ComparisonReport& rep) {
  nlohmann::json j{{"method", rep.method}, {"mode", rep.mode},     {"seed", rep.seed},
                   {"status", rep.status}, {"budgets", rep.budgets}};
  if (!rep.indices.empty()) j["indices"] = rep.indices;
  if (!rep.rel_err.empty()) j["rel_err"] = rep.rel_err;
  if (!rep.match.empty()) j["match"] = rep.match;
  if (!rep.ranks.empty()) j["ranks"] = rep.ranks;
  return j;
}

inline nlohmann::json result_to_json(const ComparisonConfig& cfg, const ComparisonResult& res) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(res.ref_hash));
  j["ref_hash"] = hash;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : res.reports) j["reports"].push_back(report_to_json(r));
  return j;
}

/// Rank tables shaped like the published comparisons: one CSV per index
/// family with `rank` plus an (i, value) column pair per method, using the
/// first seed's reports.
inline void save_rank_tables(const ComparisonResult& res, const std::filesystem::path& dir) {
  if (res.reports.empty()) return;
  std::filesystem::create_directories(dir);
  const std::uint64_t first_seed =
      res.reports.size() > 1 ? res.reports[1].seed : res.reports[0].seed;
  std::vector<const ComparisonReport*> cols;
  for (const auto& r : res.reports)
    if (r.method == "REF" || (r.seed == first_seed && r.status == "ok")) cols.push_back(&r);
  if (cols.empty()) return;
  std::vector<std::string> families;
  for (const auto& [fam, vals] : cols.front()->indices) families.push_back(fam);
  for (const std::string& fam : families) {
    std::ofstream out(dir / ("table_" + fam + ".csv"));
    out << "rank";
    for (const auto* r : cols)
      if (r->indices.count(fam)) out << ',' << r->method << "_i," << r->method << "_value";
    out << "\n";
    const std::size_t n = cols.front()->indices.at(fam).size();
    for (std::size_t row = 0; row < n; ++row) {
      out << (row + 1);
      for (const auto* r : cols) {
        if (!r->indices.count(fam)) continue;
        const int id = r->ranks.at(fam)[row];
        out << ',' << id << ',' << format_double(r->indices.at(fam)[static_cast<std::size_t>(id - 1)]);
      }
      out << "\n";
    }
  }
}

}  // namespace o3aed::bench
