// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>

#include "o3aed/bench.hpp"

namespace o3aed::cli {

namespace fs = std::filesystem;

namespace detail {

inline Point parse_point(const std::string& csv) {
  Point p;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) p.push_back(std::stod(cell));
  return p;
}

inline std::vector<double> parse_doubles(const std::string& csv) { return parse_point(csv); }

/// Problem selection shared by the stages: a builtin name, or an external
/// command with an explicit box domain.
struct ProblemArgs {
  std::string problem;
  std::string external_cmd;
  std::size_t dim = 0;
  std::string lower = "0", upper = "1";
  double timeout = 60.0;

  void add_options(CLI::App* sub) {
    sub->add_option("--problem", problem, "builtin function name");
    sub->add_option("--external", external_cmd, "external command speaking the line protocol");
    sub->add_option("--dim", dim, "dimension of the external function");
    sub->add_option("--lower", lower, "lower bounds (scalar or comma list) for --external");
    sub->add_option("--upper", upper, "upper bounds (scalar or comma list) for --external");
    sub->add_option("--timeout", timeout, "external reply timeout in seconds");
  }

  BlackBox make() const {
    if (!external_cmd.empty()) {
      if (dim == 0) throw std::invalid_argument("--external requires --dim");
      auto expand = [&](const std::string& s) {
        Point v = parse_point(s);
        if (v.size() == 1) v.assign(dim, v[0]);
        if (v.size() != dim) throw std::invalid_argument("bound list length != dim");
        return v;
      };
      std::vector<std::string> argv;
      std::stringstream ss(external_cmd);
      std::string tok;
      while (ss >> tok) argv.push_back(tok);
      return external(argv, dim, BoxDomain(expand(lower), expand(upper)), timeout);
    }
    if (problem.empty()) throw std::invalid_argument("one of --problem or --external is required");
    return builtin(problem);
  }
};

inline std::string hash_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(ss.str())));
  return buf;
}

inline void write_manifest(const fs::path& out_dir, const std::string& command,
                           const nlohmann::json& options, const std::vector<fs::path>& files) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["options"] = options;
  nlohmann::json fj;
  for (const auto& f : files) fj[f.filename().string()] = hash_hex(f);
  j["files"] = std::move(fj);
  std::ofstream out(out_dir / "manifest.json");
  out << j.dump(2) << "\n";
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

inline nlohmann::json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

/// Inject `--key=value` tokens from a flat JSON config file right after the
/// subcommand token, so explicit flags (parsed later, take-last) win.
inline std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string cfg_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) cfg_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) cfg_path = args[i].substr(9);
  }
  if (cfg_path.empty() || args.empty()) return args;
  const nlohmann::json j = load_json(cfg_path);
  std::vector<std::string> tokens;
  for (const auto& [key, val] : j.items()) {
    if (val.is_boolean()) {
      if (val.get<bool>()) tokens.push_back("--" + key);
    } else if (val.is_string()) {
      tokens.push_back("--" + key + "=" + val.get<std::string>());
    } else {
      tokens.push_back("--" + key + "=" + val.dump());
    }
  }
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

inline void take_last_everywhere(CLI::App& app) {
  for (auto* opt : app.get_options()) {
    if (opt->get_expected_min() > 0) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) take_last_everywhere(*sub);
}

}  // namespace detail

/// Entry point behind the command-line tool. Returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"optimization- and perturbation-driven surrogate sensitivity analysis"};
  app.require_subcommand(1);
  std::string config_file;

  // --- optimize ---
  auto* cmd_opt = app.add_subcommand("optimize", "minimize the function, saving the trace");
  detail::ProblemArgs opt_prob;
  opt_prob.add_options(cmd_opt);
  std::size_t opt_budget = 0, opt_init = 0, opt_cand = 0;
  std::uint64_t opt_seed = 0;
  std::string opt_out;
  cmd_opt->add_option("--budget", opt_budget, "total expensive evaluations")->required();
  cmd_opt->add_option("--seed", opt_seed, "RNG seed")->required();
  cmd_opt->add_option("--out", opt_out, "output directory")->required();
  cmd_opt->add_option("--init-size", opt_init, "initial design size (default 2(n+1))");
  cmd_opt->add_option("--candidates", opt_cand, "candidates per iteration");
  cmd_opt->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- design ---
  auto* cmd_des = app.add_subcommand("design", "generate an experimental design as CSV");
  std::string des_kind = "maximin", des_center, des_out;
  std::size_t des_m = 0, des_n = 0, des_iters = SIZE_MAX, des_uni = 0, des_bi = 0, des_tri = 0;
  std::uint64_t des_seed = 0;
  double des_rho = 0.2;
  bool des_midpoint = false;
  cmd_des->add_option("--kind", des_kind, "lhs | maximin | oo");
  cmd_des->add_option("--m", des_m, "number of points (lhs/maximin)");
  cmd_des->add_option("--n", des_n, "dimension (lhs/maximin)");
  cmd_des->add_option("--seed", des_seed, "RNG seed")->required();
  cmd_des->add_option("--out", des_out, "output directory")->required();
  cmd_des->add_option("--iters", des_iters, "maximin improvement attempts");
  cmd_des->add_flag("--midpoint", des_midpoint, "stratum midpoints instead of jitter");
  cmd_des->add_option("--center", des_center, "oo: nominal point, unit-cube coords");
  cmd_des->add_option("--rho", des_rho, "oo: step fraction");
  cmd_des->add_option("--uni", des_uni, "oo: univariate sample count");
  cmd_des->add_option("--bi", des_bi, "oo: bivariate sample count");
  cmd_des->add_option("--tri", des_tri, "oo: trivariate sample count");
  cmd_des->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- fit ---
  auto* cmd_fit = app.add_subcommand("fit", "fit a surrogate to an evaluation log");
  detail::ProblemArgs fit_prob;
  fit_prob.add_options(cmd_fit);
  std::string fit_log, fit_kind = "rbf", fit_out;
  double fit_gamma = 0.0, fit_ridge = -1.0, fit_nugget = -1.0;
  std::size_t fit_starts = 20;
  cmd_fit->add_option("--log", fit_log, "evaluation log CSV")->required();
  cmd_fit->add_option("--surrogate", fit_kind, "rbf | kriging");
  cmd_fit->add_option("--out", fit_out, "output directory")->required();
  cmd_fit->add_option("--gamma", fit_gamma, "fixed RBF shape parameter (default: auto)");
  cmd_fit->add_option("--ridge", fit_ridge, "RBF ridge (default 0 with auto escalation)");
  cmd_fit->add_option("--nugget", fit_nugget, "Kriging nugget (default 1e-8)");
  cmd_fit->add_option("--starts", fit_starts, "Kriging likelihood multistarts");
  cmd_fit->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- efast ---
  auto* cmd_ef = app.add_subcommand("efast", "global sensitivity indices");
  detail::ProblemArgs ef_prob;
  ef_prob.add_options(cmd_ef);
  std::string ef_model, ef_out;
  bool ef_direct = false;
  std::size_t ef_ns = 10001, ef_budget = 0;
  int ef_M = 4;
  std::uint64_t ef_seed = 0;
  cmd_ef->add_option("--model", ef_model, "surrogate model JSON");
  cmd_ef->add_flag("--direct", ef_direct, "evaluate the raw function instead of a surrogate");
  cmd_ef->add_option("--seed", ef_seed, "plan seed")->required();
  cmd_ef->add_option("--out", ef_out, "output directory")->required();
  cmd_ef->add_option("--ns", ef_ns, "samples per factor curve (odd)");
  cmd_ef->add_option("--m", ef_M, "interference factor");
  cmd_ef->add_option("--budget", ef_budget, "direct mode: total evaluations (floored at 65n)");
  cmd_ef->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- mvmsl ---
  auto* cmd_mv = app.add_subcommand("mvmsl", "local multivariate sensitivity indices");
  detail::ProblemArgs mv_prob;
  mv_prob.add_options(cmd_mv);
  std::string mv_model, mv_center, mv_center_from, mv_rho = "0.2", mv_out;
  bool mv_direct = false;
  cmd_mv->add_option("--model", mv_model, "surrogate model JSON");
  cmd_mv->add_flag("--direct", mv_direct, "evaluate the raw function instead of a surrogate");
  cmd_mv->add_option("--center", mv_center, "nominal point, unit-cube coords");
  cmd_mv->add_option("--center-from", mv_center_from, "opt_result.json to take the optimum from");
  cmd_mv->add_option("--rho", mv_rho, "step fraction(s), comma separated");
  cmd_mv->add_option("--out", mv_out, "output directory")->required();
  cmd_mv->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- reference ---
  auto* cmd_ref = app.add_subcommand("reference", "gold-standard indices (cached)");
  detail::ProblemArgs ref_prob;
  ref_prob.add_options(cmd_ref);
  std::string ref_mode = "efast", ref_center, ref_out, ref_cache;
  double ref_rho = 0.2;
  std::size_t ref_nopt = 0;
  cmd_ref->add_option("--mode", ref_mode, "efast | mvmsl");
  cmd_ref->add_option("--rho", ref_rho, "mvmsl step fraction");
  cmd_ref->add_option("--center", ref_center, "mvmsl nominal point, unit-cube coords");
  cmd_ref->add_option("--n-opt", ref_nopt, "mvmsl: canonical optimizer budget for the center");
  cmd_ref->add_option("--out", ref_out, "output directory")->required();
  cmd_ref->add_option("--cache", ref_cache, "cache directory (default <out>/cache)");
  cmd_ref->add_option("--config", config_file, "flat JSON config file (flags win)");

  // --- compare ---
  auto* cmd_cmp = app.add_subcommand("compare", "seeded O3AED / LHD / DIRECT comparison");
  std::string cmp_problem = "testproblem1", cmp_mode = "efast", cmp_surr = "rbf", cmp_out,
              cmp_cache, cmp_center;
  std::size_t cmp_nopt = 100, cmp_next = 0, cmp_seeds = 10, cmp_ns = 10001, cmp_kstarts = 20;
  std::size_t cmp_uni = SIZE_MAX, cmp_bi = SIZE_MAX, cmp_tri = SIZE_MAX, cmp_top = 100;
  std::uint64_t cmp_seed0 = 1;
  double cmp_rho = 0.2;
  cmd_cmp->add_option("--problem", cmp_problem, "builtin function name");
  cmd_cmp->add_option("--mode", cmp_mode, "efast | mvmsl");
  cmd_cmp->add_option("--n-opt", cmp_nopt, "optimizer budget per seed");
  cmd_cmp->add_option("--n-ext", cmp_next, "efast mode: extension design size");
  cmd_cmp->add_option("--rho", cmp_rho, "mvmsl step fraction");
  cmd_cmp->add_option("--oo-uni", cmp_uni, "mvmsl: univariate design count (default 2n)");
  cmd_cmp->add_option("--oo-bi", cmp_bi, "mvmsl: bivariate design count (default 45n, clamped)");
  cmd_cmp->add_option("--oo-tri", cmp_tri, "mvmsl: trivariate design count (default 40n, clamped)");
  cmd_cmp->add_option("--center", cmp_center, "mvmsl nominal point (default: canonical optimum)");
  cmd_cmp->add_option("--surrogate", cmp_surr, "rbf | kriging | both");
  cmd_cmp->add_option("--seeds", cmp_seeds, "number of paired seeds");
  cmd_cmp->add_option("--seed", cmp_seed0, "first seed (seeds are seed..seed+k-1)")->required();
  cmd_cmp->add_option("--ns", cmp_ns, "surrogate-side plan samples per factor");
  cmd_cmp->add_option("--kriging-starts", cmp_kstarts, "Kriging likelihood multistarts");
  cmd_cmp->add_option("--match-top", cmp_top, "top-s size for the matching rates");
  cmd_cmp->add_option("--out", cmp_out, "output directory")->required();
  cmd_cmp->add_option("--cache", cmp_cache, "reference cache directory (default <out>/cache)");
  cmd_cmp->add_option("--config", config_file, "flat JSON config file (flags win)");

  try {
    args = detail::apply_config_file(std::move(args));
    detail::take_last_everywhere(app);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(cmd_opt)) {
      const BlackBox bb = opt_prob.make();
      fs::create_directories(opt_out);
      auto cfg = optimizer::OptimizerConfig::defaults(bb.dim(), opt_budget, opt_seed);
      if (opt_init) cfg.init_size = opt_init;
      if (opt_cand) cfg.candidates_per_iter = opt_cand;
      EvaluationLog log(bb.domain(), opt_budget);
      const auto res = optimizer::optimize(bb, cfg, log);
      log.save_csv(fs::path(opt_out) / "opt_log.csv");
      nlohmann::json rj{{"problem", bb.kind()},
                        {"seed", opt_seed},
                        {"budget", opt_budget},
                        {"x_star", res.x_star},
                        {"x_star_unit", bb.domain().normalize(res.x_star)},
                        {"f_star", res.f_star}};
      detail::write_json(fs::path(opt_out) / "opt_result.json", rj);
      detail::write_manifest(opt_out, "optimize",
                             nlohmann::json{{"problem", bb.kind()},
                                            {"budget", opt_budget},
                                            {"seed", opt_seed}},
                             {fs::path(opt_out) / "opt_log.csv",
                              fs::path(opt_out) / "opt_result.json"});
      out << "optimize: f_star = " << format_double(res.f_star) << " after " << opt_budget
          << " evaluations\n";
      return 0;
    }

    if (app.got_subcommand(cmd_des)) {
      fs::create_directories(des_out);
      design::DesignMatrix dm;
      if (des_kind == "lhs") {
        dm = design::latin_hypercube(des_m, des_n, des_seed, !des_midpoint);
      } else if (des_kind == "maximin") {
        dm = design::maximin_lhs(des_m, des_n, des_seed, des_iters, !des_midpoint);
      } else if (des_kind == "oo") {
        design::OODesignSpec spec;
        spec.center = detail::parse_point(des_center);
        spec.rho = des_rho;
        spec.n_uni = des_uni;
        spec.n_bi = des_bi;
        spec.n_tri = des_tri;
        spec.seed = des_seed;
        dm = design::oo_design(spec);
      } else {
        throw std::invalid_argument("unknown design kind: " + des_kind);
      }
      design::save_csv(dm, fs::path(des_out) / "design.csv");
      detail::write_manifest(des_out, "design",
                             nlohmann::json{{"kind", des_kind}, {"seed", des_seed}},
                             {fs::path(des_out) / "design.csv"});
      out << "design: " << dm.points.size() << " points\n";
      return 0;
    }

    if (app.got_subcommand(cmd_fit)) {
      const BlackBox bb = fit_prob.make();
      fs::create_directories(fit_out);
      const EvaluationLog log = EvaluationLog::load_csv(fit_log, bb.domain());
      std::vector<Point> X;
      std::vector<double> y;
      for (const auto& r : log.records()) {
        X.push_back(bb.domain().normalize(r.x));
        y.push_back(r.y);
      }
      surrogate::Surrogate s;
      s.type = fit_kind;
      s.domain = bb.domain();
      if (fit_kind == "rbf") {
        surrogate::RbfOptions o;
        if (fit_gamma > 0.0) o.gamma = fit_gamma;
        if (fit_ridge >= 0.0) o.ridge = fit_ridge;
        s.rbf = surrogate::fit_rbf(X, y, o);
      } else if (fit_kind == "kriging") {
        surrogate::KrigingOptions o;
        if (fit_nugget >= 0.0) o.nugget = fit_nugget;
        o.starts = fit_starts;
        s.kriging = surrogate::fit_kriging(X, y, o);
      } else {
        throw std::invalid_argument("unknown surrogate kind: " + fit_kind);
      }
      const fs::path model_path = fs::path(fit_out) / ("model_" + fit_kind + ".json");
      surrogate::save_surrogate(s, model_path);
      detail::write_manifest(fit_out, "fit",
                             nlohmann::json{{"surrogate", fit_kind}, {"log", fit_log}},
                             {model_path});
      out << "fit: " << fit_kind << " on " << log.size() << " points -> "
          << model_path.filename().string() << "\n";
      return 0;
    }

    if (app.got_subcommand(cmd_ef)) {
      fs::create_directories(ef_out);
      efast::FastIndices fi;
      efast::FastPlan plan;
      nlohmann::json rj;
      std::vector<fs::path> files;
      if (!ef_model.empty()) {
        const surrogate::Surrogate s = surrogate::load_surrogate(ef_model);
        plan = efast::fast_plan(s.domain.dim(), ef_M, ef_ns, ef_seed);
        fi = efast::fast_indices(bench::detail::surrogate_target(s), s.domain, plan);
        rj["target"] = "model";
      } else if (ef_direct) {
        const BlackBox bb = ef_prob.make();
        std::size_t ns = ef_budget ? std::max<std::size_t>(65, ef_budget / bb.dim()) : 65;
        if (ns % 2 == 0) --ns;
        plan = efast::fast_plan(bb.dim(), ef_M, ns, ef_seed);
        EvaluationLog log(bb.domain());
        fi = efast::fast_indices(bench::detail::logged_target(bb, log, Tag::direct), bb.domain(),
                                 plan);
        log.save_csv(fs::path(ef_out) / "efast_log.csv");
        files.push_back(fs::path(ef_out) / "efast_log.csv");
        rj["target"] = "direct";
      } else {
        throw std::invalid_argument("efast: one of --model or --direct is required");
      }
      efast::save_indices_csv(fi, fs::path(ef_out) / "efast_indices.csv");
      rj["plan"] = {{"n", plan.n}, {"M", plan.M}, {"Ns", plan.Ns}, {"seed", plan.seed}};
      rj["evaluations"] = plan.total_evaluations();
      rj["S"] = fi.S;
      rj["ST"] = fi.ST;
      rj["V"] = fi.V;
      detail::write_json(fs::path(ef_out) / "efast_report.json", rj);
      files.push_back(fs::path(ef_out) / "efast_indices.csv");
      files.push_back(fs::path(ef_out) / "efast_report.json");
      detail::write_manifest(ef_out, "efast", nlohmann::json{{"seed", ef_seed}, {"ns", ef_ns}},
                             files);
      out << "efast: " << plan.n << " factors, " << plan.total_evaluations()
          << " target evaluations\n";
      return 0;
    }

    if (app.got_subcommand(cmd_mv)) {
      fs::create_directories(mv_out);
      Point center;
      if (!mv_center.empty()) {
        center = detail::parse_point(mv_center);
      } else if (!mv_center_from.empty()) {
        center = detail::load_json(mv_center_from).at("x_star_unit").get<Point>();
      } else {
        throw std::invalid_argument("mvmsl: one of --center or --center-from is required");
      }
      const std::vector<double> rhos = detail::parse_doubles(mv_rho);
      BatchTarget target;
      BoxDomain domain = BoxDomain::cube(1, 0, 1);
      std::optional<surrogate::Surrogate> model;
      std::optional<BlackBox> bb;
      std::optional<EvaluationLog> log;
      if (!mv_model.empty()) {
        model = surrogate::load_surrogate(mv_model);
        domain = model->domain;
        target = bench::detail::surrogate_target(*model);
      } else if (mv_direct) {
        bb = mv_prob.make();
        domain = bb->domain();
        log.emplace(domain);
        target = bench::detail::logged_target(*bb, *log, Tag::direct);
      } else {
        throw std::invalid_argument("mvmsl: one of --model or --direct is required");
      }
      const Point xbar = domain.denormalize(center);
      nlohmann::json rj;
      rj["center"] = center;
      rj["rho"] = rhos;
      std::vector<fs::path> files;
      for (double rho : rhos) {
        const auto a = mvmsl::analyze(target, domain, xbar, rho);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%g", rho);
        const fs::path eff_path = fs::path(mv_out) / ("mvmsl_effects_rho" + std::string(tag) + ".csv");
        const fs::path agg_path =
            fs::path(mv_out) / ("mvmsl_aggregates_rho" + std::string(tag) + ".csv");
        mvmsl::save_effects_csv(a.effects, eff_path);
        mvmsl::save_aggregates_csv(a.local, a.eig, agg_path);
        files.push_back(eff_path);
        files.push_back(agg_path);
        nlohmann::json per{{"rho", rho},          {"SI1", a.local.SI1},   {"SI2", a.local.SI2},
                           {"SI3", a.local.SI3},  {"E1", a.eig.U1abs},    {"E2", a.eig.U2abs},
                           {"eigvals", a.eig.eigvals},
                           {"evaluations", a.effects.effects.size()}};
        rj["results"].push_back(std::move(per));
      }
      if (log) {
        log->save_csv(fs::path(mv_out) / "mvmsl_log.csv");
        files.push_back(fs::path(mv_out) / "mvmsl_log.csv");
      }
      detail::write_json(fs::path(mv_out) / "mvmsl_report.json", rj);
      files.push_back(fs::path(mv_out) / "mvmsl_report.json");
      detail::write_manifest(mv_out, "mvmsl", nlohmann::json{{"rho", mv_rho}}, files);
      out << "mvmsl: " << rhos.size() << " step fraction(s) analyzed\n";
      return 0;
    }

    if (app.got_subcommand(cmd_ref)) {
      const BlackBox bb = ref_prob.make();
      fs::create_directories(ref_out);
      const fs::path cache = ref_cache.empty() ? fs::path(ref_out) / "cache" : fs::path(ref_cache);
      bool hit = false;
      nlohmann::json rj;
      if (ref_mode == "efast") {
        const auto ref = bench::cached_efast_reference(bb, bb.kind(), 10001, cache, &hit);
        rj = bench::efast_ref_to_json(bb.kind(), ref);
      } else if (ref_mode == "mvmsl") {
        bench::ComparisonConfig cc;
        cc.problem = bb.kind();
        cc.mode = "mvmsl";
        cc.rho = ref_rho;
        cc.cache_dir = cache;
        if (!ref_center.empty()) cc.center = detail::parse_point(ref_center);
        else if (ref_nopt) cc.n_opt = ref_nopt;
        else throw std::invalid_argument("reference mvmsl: need --center or --n-opt");
        const auto ref = bench::cached_mvmsl_reference(bb, cc, &hit);
        rj = bench::mvmsl_ref_to_json(bb.kind(), ref, cc.center ? 0 : cc.n_opt,
                                      cc.center ? 0 : cc.seed0);
      } else {
        throw std::invalid_argument("reference: mode must be efast or mvmsl");
      }
      detail::write_json(fs::path(ref_out) / "reference_report.json", rj);
      detail::write_manifest(ref_out, "reference",
                             nlohmann::json{{"mode", ref_mode}, {"problem", bb.kind()}},
                             {fs::path(ref_out) / "reference_report.json"});
      out << "reference: " << (hit ? "cache hit" : "computed") << " ("
          << rj.at("evaluations").get<std::size_t>() << " evaluations)\n";
      return 0;
    }

    if (app.got_subcommand(cmd_cmp)) {
      fs::create_directories(cmp_out);
      bench::ComparisonConfig cc;
      cc.problem = cmp_problem;
      cc.mode = cmp_mode;
      cc.n_opt = cmp_nopt;
      cc.n_ext = cmp_next;
      cc.rho = cmp_rho;
      cc.oo_uni = cmp_uni;
      cc.oo_bi = cmp_bi;
      cc.oo_tri = cmp_tri;
      if (!cmp_center.empty()) cc.center = detail::parse_point(cmp_center);
      cc.surrogates = cmp_surr == "both" ? std::vector<std::string>{"rbf", "kriging"}
                                         : std::vector<std::string>{cmp_surr};
      cc.n_seeds = cmp_seeds;
      cc.seed0 = cmp_seed0;
      cc.efast_ns = cmp_ns;
      cc.kriging_starts = cmp_kstarts;
      cc.match_top = cmp_top;
      cc.cache_dir = cmp_cache.empty() ? fs::path(cmp_out) / "cache" : fs::path(cmp_cache);
      const auto res = bench::run_comparison(cc);
      detail::write_json(fs::path(cmp_out) / "compare_report.json",
                         bench::result_to_json(cc, res));
      bench::save_rank_tables(res, cmp_out);
      std::vector<fs::path> files{fs::path(cmp_out) / "compare_report.json"};
      for (const auto& e : fs::directory_iterator(cmp_out)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("table_", 0) == 0) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      detail::write_manifest(cmp_out, "compare", bench::config_to_json(cc), files);
      std::size_t ok = 0, failed = 0;
      for (const auto& r : res.reports) (r.status == "ok" ? ok : failed)++;
      out << "compare: " << ok << " reports";
      if (failed) out << ", " << failed << " failed";
      out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace o3aed::cli
