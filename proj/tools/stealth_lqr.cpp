// Command-line front end: solve, simulate and stealth experiments writing CSV/JSON.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stealth_lqr/model_json.hpp"
#include "stealth_lqr/stealth_lqr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace stealth_lqr;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3, kNoAdmissible = 4 };

struct NoAdmissibleLambda : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::vector<double> grid;
  std::optional<double> eps;
  std::string mode;
  bool force = false;
  std::optional<double> a, b;
  std::vector<double> lambdas;
  std::vector<double> eps_sweep;
  std::string dump;
  int grid_points = 51;
};

/// Experiment settings after merging defaults, the config file and flags.
struct Resolved {
  ProblemSpec problem;
  std::uint64_t seed = 0;
  long long paths = 20000;
  std::vector<double> grid;
  double eps = 0.02;
  std::string mode = "mc";
  double a = 0.01, b = 0.01;
  std::vector<double> lambdas{0.0, 0.1, 0.3};
  std::vector<double> eps_sweep{0.005, 0.01, 0.02, 0.05};
  bool force = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.is_array()) throw ValidationError(std::string(key) + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError(std::string(key) + " must be a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Resolved resolve(const Options& o) {
  Resolved r;
  json cfg = json::object();
  if (o.config.empty()) {
    r.problem = presets::scalar_reference();
  } else {
    cfg = parse_json_text(read_file(o.config));
    if (!cfg.is_object()) throw ValidationError("config: top level must be an object");
    r.problem = cfg.contains("problem") ? spec_from_json(cfg["problem"]) : spec_from_json(cfg);
  }
  auto get = [&](const char* key) -> const json* { return cfg.contains(key) ? &cfg[key] : nullptr; };
  if (auto* j = get("seed")) r.seed = j->get<std::uint64_t>();
  if (auto* j = get("paths")) r.paths = j->get<long long>();
  if (auto* j = get("grid")) r.grid = number_list(*j, "grid");
  if (auto* j = get("eps")) r.eps = j->get<double>();
  if (auto* j = get("mode")) r.mode = j->get<std::string>();
  if (auto* j = get("a")) r.a = j->get<double>();
  if (auto* j = get("b")) r.b = j->get<double>();
  if (auto* j = get("lambdas")) r.lambdas = number_list(*j, "lambdas");
  if (auto* j = get("eps_sweep")) r.eps_sweep = number_list(*j, "eps_sweep");

  if (o.seed) r.seed = *o.seed;
  if (o.paths) r.paths = *o.paths;
  if (!o.grid.empty()) r.grid = o.grid;
  if (o.eps) r.eps = *o.eps;
  if (!o.mode.empty()) r.mode = o.mode;
  if (o.a) r.a = *o.a;
  if (o.b) r.b = *o.b;
  if (!o.lambdas.empty()) r.lambdas = o.lambdas;
  if (!o.eps_sweep.empty()) r.eps_sweep = o.eps_sweep;
  r.force = o.force;

  if (r.paths < 1) throw ValidationError("paths must be positive");
  if (!(r.eps > 0.0 && r.eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
  parse_search_mode(r.mode);
  if (r.grid.empty()) r.grid = default_lambda_grid(validate_spec(r.problem), o.grid_points);
  return r;
}

json resolved_to_json(const Resolved& r, const std::string& command) {
  return json{{"command", command}, {"problem", spec_to_json(r.problem)}, {"seed", r.seed},
              {"paths", r.paths},   {"grid", r.grid},                     {"eps", r.eps},
              {"mode", r.mode},     {"a", r.a},                           {"b", r.b},
              {"lambdas", r.lambdas}, {"eps_sweep", r.eps_sweep},         {"force", r.force}};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Console formatting.
std::string show(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Short stable tag for file names, e.g. 0.04 -> "0.04".
std::string lambda_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Collects artifacts and writes config.json and manifest.json at the end of a run.
class OutputDir {
 public:
  OutputDir(const std::string& dir, const json& resolved) : dir_(dir), resolved_(resolved) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + (dir_ / name).string() + "'");
    out << content;
    artifacts_.push_back(name);
  }

  void finish() {
    const std::string cfg = resolved_.dump(2) + "\n";
    write("config.json", cfg);
    json manifest{{"tool", "stealth_lqr"},
                  {"version", kToolVersion},
                  {"command", resolved_["command"]},
                  {"config_hash", "fnv1a64:" + hex64(fnv1a(cfg))},
                  {"seed", resolved_["seed"]},
                  {"artifacts", artifacts_}};
    std::ofstream(dir_ / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  json resolved_;
  std::vector<std::string> artifacts_;
};

std::vector<std::string> component_names(const std::string& base, int n) {
  if (n == 1) return {base};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(base + "_" + std::to_string(i));
  return out;
}

json matrix_json(const Matrix& m) { return detail::matrix_to_json(m); }
json vector_json(const Vector& v) { return detail::vector_to_json(v); }

int cmd_solve(const Options& o) {
  const Resolved r = resolve(o);
  const Model model = validate_spec(r.problem);
  const WellPosedness w = wellposedness(model);
  std::cout << "admissible lambda range: [0, " << show(w.lambda_max) << "]\n";
  std::cout << "lambda = " << show(model.lambda()) << ": well-posedness " << (w.holds ? "holds" : "fails")
            << " (smallest eigenvalue " << show(w.min_eigenvalue) << ")\n";
  SolveOptions so;
  so.force = r.force;
  const SolvedPolicy pol = backward_solve(model, so);

  json P = json::array(), s = json::array(), c = json::array(), gain = json::array(), offset = json::array();
  for (int t = 0; t <= pol.T; ++t) {
    P.push_back(matrix_json(pol.P[t]));
    s.push_back(vector_json(pol.s[t]));
    c.push_back(pol.c[t]);
  }
  for (int t = 0; t < pol.T; ++t) {
    gain.push_back(matrix_json(pol.gain[t]));
    offset.push_back(vector_json(pol.offset[t]));
  }
  json doc{{"lambda", pol.lambda},
           {"T", pol.T},
           {"n", pol.n},
           {"wellposed", w.holds},
           {"min_eigenvalue", w.min_eigenvalue},
           {"lambda_max", w.lambda_max},
           {"value_at_x0", value_at(pol, 0, model.spec().x0)},
           {"P", P},
           {"s", s},
           {"c", c},
           {"gain", gain},
           {"offset", offset}};
  OutputDir out(o.out, resolved_to_json(r, "solve"));
  out.write(o.dump.empty() ? "policy.json" : o.dump, doc.dump(2) + "\n");
  out.finish();
  std::cout << "V_0(x0) = " << show(value_at(pol, 0, model.spec().x0)) << "\n";
  return kOk;
}

int cmd_simulate(const Options& o) {
  const Resolved r = resolve(o);
  const Model base = validate_spec(r.problem);
  const int n = base.n(), T = base.horizon();
  const SprtConfig sprt = thresholds(r.a, r.b);
  OutputDir out(o.out, resolved_to_json(r, "simulate"));

  std::ostringstream summary;
  summary << "lambda,primary_cost,augmented_cost,D,first_rejection";
  for (int t = 0; t <= T; ++t) summary << ",loglr_" << t;
  summary << "\n";

  std::vector<std::string> header{"t"};
  for (const char* name : {"v", "p", "alpha", "beta", "Z", "Y"})
    for (const auto& c : component_names(name, n)) header.push_back(c);
  header.push_back("loglr");
  header.push_back("decision");

  for (double lam : r.lambdas) {
    const Model model = base.with_lambda(lam);
    SolveOptions so;
    so.force = r.force;
    const SolvedPolicy pol = backward_solve(model, so);
    // Path 0 of the master seed: every intensity sees the same noise realization.
    const Trajectory tr = rollout(model, pol, SeedSpec{r.seed, 0});
    const SprtTrace trace = run_sprt(model, tr, sprt);

    std::ostringstream csv;
    for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
    csv << "\n";
    for (int t = 0; t <= T; ++t) {
      csv << t;
      for (int i = 0; i < 2 * n; ++i) csv << "," << num(tr.x[t][i]);
      for (int i = 0; i < 2 * n; ++i) csv << "," << (t < T ? num(tr.u[t][i]) : "");
      for (int i = 0; i < 2 * n; ++i) csv << "," << (t < T ? num(tr.w[t][i]) : "");
      csv << "," << num(tr.loglr[t]) << "," << to_string(trace.decision[t]) << "\n";
    }
    out.write("trajectory_lambda_" + lambda_tag(lam) + ".csv", csv.str());

    std::string d = "nan";
    try {
      d = num(deception_measure(model, tr));
    } catch (const ValidationError&) {
    }
    summary << num(lam) << "," << num(tr.primary_cost) << "," << num(augmented_cost(model, tr)) << "," << d << ","
            << (trace.first_rejection ? std::to_string(*trace.first_rejection) : "");
    for (int t = 0; t <= T; ++t) summary << "," << num(tr.loglr[t]);
    summary << "\n";
    std::cout << "lambda = " << show(lam) << ": primary cost " << show(tr.primary_cost) << ", D = " << d
              << ", log L_T = " << show(tr.loglr.back())
              << (trace.first_rejection ? ", rejected at t = " + std::to_string(*trace.first_rejection) : "") << "\n";
  }
  out.write("summary.csv", summary.str());
  out.write("sprt.json", json{{"a", sprt.a}, {"b", sprt.b}, {"U", sprt.U}, {"L", sprt.L},
                              {"log_U", sprt.log_upper()}, {"log_L", sprt.log_lower()}}.dump(2) + "\n");
  out.finish();
  return kOk;
}

/// Primary cost averaged over the first `count` paths and D on path 0, at intensity lam.
std::pair<double, double> tradeoff_at(const Model& base, double lam, std::uint64_t seed, long long count) {
  const Model model = base.with_lambda(lam);
  const SolvedPolicy pol = backward_solve(model);
  std::vector<double> cost(static_cast<std::size_t>(count));
  for_each_path(model, pol, count, seed, [&](std::size_t i, const Trajectory& tr) { cost[i] = tr.primary_cost; });
  double mean = 0.0;
  for (double c : cost) mean += c / static_cast<double>(count);
  double d = std::numeric_limits<double>::quiet_NaN();
  try {
    d = deception_measure(model, rollout(model, pol, SeedSpec{seed, 0}));
  } catch (const ValidationError&) {
  }
  return {mean, d};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_stealth(const Options& o) {
  const Resolved r = resolve(o);
  const Model base = validate_spec(r.problem);
  const SprtConfig sprt = thresholds(r.a, r.b);
  SearchOptions so;
  so.epsilon = r.eps;
  so.mode = parse_search_mode(r.mode);
  so.n_paths = r.paths;
  so.master_seed = r.seed;

  OutputDir out(o.out, resolved_to_json(r, "stealth"));
  bool any_admissible = false;
  for (double lam : r.grid) any_admissible = any_admissible || (lam >= 0.0 && wellposedness_holds(base.with_lambda(lam)));
  if (!any_admissible) {
    out.finish();
    throw NoAdmissibleLambda("no grid point satisfies the well-posedness condition");
  }
  const StealthReport rep = lambda_search(base, r.grid, sprt, so);

  std::ostringstream mc_csv, bound_csv;
  mc_csv << "lambda,t,hits,n_paths,p_hat,ci_lo,ci_hi\n";
  bound_csv << "lambda,t,E_loglr,delta,linear_norm,quad_fro,quad_op,eps1,eps2,linear_tail,quadratic_tail,bound\n";
  json rows = json::array();
  for (const auto& ev : rep.rows) {
    if (ev.mc)
      for (std::size_t t = 0; t < ev.mc->p_hat.size(); ++t)
        mc_csv << num(ev.lambda) << "," << t << "," << ev.mc->hits[t] << "," << ev.mc->n_paths << ","
               << num(ev.mc->p_hat[t]) << "," << num(ev.mc->ci_lo[t]) << "," << num(ev.mc->ci_hi[t]) << "\n";
    for (const auto& b : ev.bound)
      bound_csv << num(b.lambda) << "," << b.t << "," << num(b.E_loglr) << "," << num(b.delta) << ","
                << num(b.linear_norm) << "," << num(b.quad_fro) << "," << num(b.quad_op) << "," << num(b.eps1) << ","
                << num(b.eps2) << "," << num(b.linear_tail) << "," << num(b.quadratic_tail) << ","
                << num(b.total_bound) << "\n";
    json row{{"lambda", ev.lambda}, {"admissible", ev.admissible}};
    if (!ev.note.empty()) row["note"] = ev.note;
    if (ev.mc) {
      row["max_ci_hi"] = ev.max_mc;
      row["pass_mc"] = ev.pass_mc;
    }
    if (!ev.bound.empty()) {
      row["max_bound"] = ev.max_bound;
      row["pass_bound"] = ev.pass_bound;
    }
    rows.push_back(row);
  }
  if (so.mode != SearchMode::bound) out.write("stealth.csv", mc_csv.str());
  if (so.mode != SearchMode::mc) out.write("bound.csv", bound_csv.str());

  const bool use_bound = so.mode == SearchMode::bound;
  const long long cost_paths = std::min<long long>(r.paths, 2000);
  json tradeoff = json::array();
  std::vector<double> sweep = r.eps_sweep;
  if (std::find(sweep.begin(), sweep.end(), r.eps) == sweep.end()) sweep.push_back(r.eps);
  std::sort(sweep.begin(), sweep.end());
  for (double e : sweep) {
    const auto sel = rep.select(e, use_bound);
    json entry{{"epsilon", e}, {"lambda", optional_json(sel)}};
    if (sel) {
      for (const auto& ev : rep.rows)
        if (ev.lambda == *sel) entry["detection_probability"] = use_bound ? ev.max_bound : ev.max_mc;
      const auto [cost, d] = tradeoff_at(base, *sel, r.seed, cost_paths);
      entry["D"] = finite_or_null(d);
      entry["primary_cost"] = cost;
    }
    tradeoff.push_back(entry);
  }
  json sel{{"epsilon", rep.epsilon},
           {"mode", r.mode},
           {"n_paths", rep.n_paths},
           {"seed", rep.master_seed},
           {"sprt", {{"a", sprt.a}, {"b", sprt.b}, {"U", sprt.U}, {"L", sprt.L}}},
           {"lambda_star", {{"mc", optional_json(rep.selected_mc)}, {"bound", optional_json(rep.selected_bound)}}},
           {"rows", rows},
           {"notes", rep.notes},
           {"tradeoff", tradeoff},
           {"tradeoff_cost_paths", cost_paths}};
  out.write("selection.json", sel.dump(2) + "\n");
  out.finish();

  for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";
  if (rep.selected_mc) std::cout << "lambda* (mc) = " << show(*rep.selected_mc) << "\n";
  if (rep.selected_bound) std::cout << "lambda* (bound) = " << show(*rep.selected_bound) << "\n";
  const std::optional<double> primary = use_bound ? rep.selected_bound : rep.selected_mc;
  if (!primary) throw NoAdmissibleLambda("no grid point meets the stealth tolerance eps = " + show(r.eps));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deceptive LQ control against a sequential probability ratio test"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Problem or experiment JSON (default: built-in scalar reference)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("-a", o.a, "SPRT type-I bound");
    sub->add_option("-b", o.b, "SPRT type-II bound");
    sub->add_flag("--force", o.force, "Solve even when the well-posedness condition fails");
  };

  auto* solve = app.add_subcommand("solve", "Backward recursion and well-posedness report");
  common(solve);
  solve->add_option("--dump", o.dump, "Policy file name inside --out (default policy.json)");

  auto* simulate = app.add_subcommand("simulate", "One shared-noise trajectory per intensity");
  common(simulate);
  simulate->add_option("--lambda", o.lambdas, "Intensities (comma separated)")->delimiter(',');

  auto* stealth = app.add_subcommand("stealth", "Grid search for the largest stealthy intensity");
  common(stealth);
  stealth->add_option("--paths", o.paths, "Monte Carlo paths per intensity");
  stealth->add_option("--grid", o.grid, "Intensity grid (comma separated)")->delimiter(',');
  stealth->add_option("--grid-points", o.grid_points, "Points of the default grid on the admissible interval")
      ->capture_default_str();
  stealth->add_option("--eps", o.eps, "Stealth tolerance");
  stealth->add_option("--mode", o.mode, "mc, bound or both")->check(CLI::IsMember({"mc", "bound", "both"}));
  stealth->add_option("--eps-sweep", o.eps_sweep, "Tolerances for the trade-off table")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*simulate) return cmd_simulate(o);
    if (*stealth) return cmd_stealth(o);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const NoAdmissibleLambda& e) {
    std::cerr << "stealth search: " << e.what() << "\n";
    return kNoAdmissible;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
