// tau1risk: estimate the number of sample uniques that are population
// uniques from a frequency-of-frequencies profile, evaluate the matching
// risk bounds, and run the synthetic-table simulations.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tau1/bounds.hpp"
#include "tau1/estimators.hpp"
#include "tau1/numeric.hpp"
#include "tau1/polyapprox.hpp"
#include "tau1/profile.hpp"
#include "tau1/simulation.hpp"
#include "tau1/smoothing.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::string out;
  std::string format;  // empty until set; subcommands pick their default
  int threads = 1;
  std::uint64_t seed = 0;

  std::string format_or(const char* def) const { return format.empty() ? def : format; }
};

void write_output(const GlobalOpts& g, const std::string& data) {
  if (g.out.empty() || g.out == "-") {
    std::cout << data;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw tau1::ParseError("cannot open output file: " + g.out);
  f << data;
}

std::istream* open_input(const std::string& path, std::ifstream& file) {
  if (path == "-") return &std::cin;
  file.open(path);
  if (!file) throw tau1::ParseError("cannot open input file: " + path);
  return &file;
}

std::vector<int> parse_cols(const std::string& spec) {
  std::vector<int> cols;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    cols.push_back(std::stoi(tok));
  }
  return cols;
}

std::vector<double> parse_doubles(const std::string& spec) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    vals.push_back(std::stod(tok));
  }
  return vals;
}

json smoothing_to_json(const tau1::SmoothingSpec& spec) {
  json j{{"kind", spec.name()}};
  if (spec.kind == tau1::SmoothingKind::Poisson) j["beta"] = spec.beta;
  if (spec.kind == tau1::SmoothingKind::Binomial) {
    j["x0"] = spec.x0;
    j["p"] = spec.p;
  }
  return j;
}

// ---- estimate --------------------------------------------------------------

struct EstimateOpts {
  std::string profile_path;
  double lambda = 0.0;
  double nbar = -1.0;
  std::string estimator = "all";
  std::string smoothing;  // optional override of the smoothing family
  double beta = -1.0;
  std::int64_t x0 = -1;
  std::string theta_convention = "paper";
};

int run_estimate(const GlobalOpts& g, const EstimateOpts& o) {
  std::ifstream file;
  std::istream* in = open_input(o.profile_path, file);
  json jprofile;
  try {
    *in >> jprofile;
  } catch (const json::exception& e) {
    throw tau1::ParseError(std::string("profile JSON: ") + e.what());
  }
  const tau1::FrequencyProfile profile = tau1::profile_from_json(jprofile);
  const double lambda = o.lambda;
  if (!(lambda > 0.0)) throw tau1::DomainError("estimate: requires --lambda > 0");
  const auto convention = o.theta_convention == "standard" ? tau1::ThetaConvention::Standard
                                                           : tau1::ThetaConvention::Paper;

  const bool needs_nbar = o.estimator != "unbiased" && o.estimator != "poisson" &&
                          o.estimator != "binomial2";
  if (needs_nbar && !(o.nbar > 0.0))
    throw tau1::DomainError("estimate: --nbar is required for " + o.estimator);

  auto poisson_spec = [&] {
    const double beta =
        o.beta > 0.0 ? o.beta : tau1::optimal_poisson_beta(lambda, static_cast<double>(profile.n));
    return tau1::SmoothingSpec::poisson(beta);
  };
  auto binomial_spec = [&] {
    const std::int64_t x0 =
        o.x0 >= 0 ? o.x0 : tau1::optimal_binomial_x0(lambda, static_cast<double>(profile.n));
    return tau1::SmoothingSpec::binomial2(lambda, x0);
  };

  std::vector<std::string> wanted;
  if (o.estimator == "all") {
    if (lambda < 1.0) wanted = {"unbiased", "naive", "dirichlet", "bethlehem", "skinner"};
    else wanted = {"poisson", "binomial2", "naive", "dirichlet", "bethlehem", "skinner"};
  } else {
    wanted = {o.estimator};
  }

  std::optional<tau1::PoissonGammaFit> fit;
  auto get_fit = [&]() -> const tau1::PoissonGammaFit& {
    if (!fit) fit = tau1::fit_poisson_gamma(profile, o.nbar);
    return *fit;
  };

  json reports = json::array();
  int failures = 0;
  for (const std::string& name : wanted) {
    json r{{"name", name}, {"lambda", lambda}};
    try {
      double value = 0.0;
      if (name == "unbiased") {
        tau1::SmoothingSpec spec = tau1::SmoothingSpec::none();
        value = tau1::tau1_smoothed(profile, lambda, spec);
        r["smoothing"] = smoothing_to_json(spec);
      } else if (name == "poisson") {
        const auto spec = o.smoothing == "none" ? tau1::SmoothingSpec::none() : poisson_spec();
        value = tau1::tau1_smoothed(profile, lambda, spec);
        r["smoothing"] = smoothing_to_json(spec);
      } else if (name == "binomial2") {
        const auto spec = o.smoothing == "none" ? tau1::SmoothingSpec::none() : binomial_spec();
        value = tau1::tau1_smoothed(profile, lambda, spec);
        r["smoothing"] = smoothing_to_json(spec);
      } else if (name == "naive") {
        value = tau1::tau1_naive(profile, o.nbar);
      } else if (name == "dirichlet") {
        value = tau1::tau1_dirichlet(profile, o.nbar, convention);
        if (profile.z_at(1) > 0)
          r["fitted"] = json{{"theta", tau1::fit_dirichlet_theta(profile, convention)}};
      } else if (name == "bethlehem" || name == "skinner") {
        const auto& f = get_fit();
        value = name == "bethlehem" ? tau1::tau1_bethlehem(profile, o.nbar, f)
                                    : tau1::tau1_skinner(profile, o.nbar, f);
        r["fitted"] = json{{"alpha", f.alpha}, {"beta", f.beta}, {"k_hat", f.k_hat}};
      } else {
        throw tau1::DomainError("estimate: unknown estimator '" + name + "'");
      }
      r["value"] = value;
      r["clamped"] = std::max(0.0, std::min(value, static_cast<double>(profile.z_at(1))));
    } catch (const tau1::DomainError& e) {
      if (o.estimator != "all") throw;
      r["error"] = e.what();
      ++failures;
    } catch (const tau1::ConvergenceError& e) {
      if (o.estimator != "all") throw;
      r["error"] = e.what();
      ++failures;
    }
    reports.push_back(r);
  }
  if (failures == static_cast<int>(wanted.size()))
    throw tau1::ConvergenceError("estimate: every requested estimator failed");

  const std::string format = g.format_or("json");
  json config{{"subcommand", "estimate"}, {"profile", o.profile_path}, {"lambda", lambda},
              {"estimator", o.estimator}, {"theta_convention", o.theta_convention},
              {"format", format}};
  if (o.nbar > 0.0) config["nbar"] = o.nbar;

  if (format == "csv") {
    std::ostringstream os;
    os << "# config: subcommand=estimate profile=" << o.profile_path
       << " lambda=" << tau1::fmt17(lambda) << " estimator=" << o.estimator;
    if (o.nbar > 0.0) os << " nbar=" << tau1::fmt17(o.nbar);
    os << "\nname,value,clamped,lambda,beta,x0,p,alpha,k_hat,theta,error\n";
    for (const auto& r : reports) {
      auto opt = [&](const char* outer, const char* key) -> std::string {
        if (!r.contains(outer) || !r[outer].contains(key)) return "";
        return tau1::fmt17(r[outer][key].get<double>());
      };
      os << r["name"].get<std::string>() << ","
         << (r.contains("value") ? tau1::fmt17(r["value"].get<double>()) : "") << ","
         << (r.contains("clamped") ? tau1::fmt17(r["clamped"].get<double>()) : "") << ","
         << tau1::fmt17(r["lambda"].get<double>()) << "," << opt("smoothing", "beta") << ","
         << (r.contains("smoothing") && r["smoothing"].contains("x0")
                 ? std::to_string(r["smoothing"]["x0"].get<std::int64_t>())
                 : "")
         << "," << opt("smoothing", "p") << "," << opt("fitted", "alpha") << ","
         << opt("fitted", "k_hat") << "," << opt("fitted", "theta") << ","
         << (r.contains("error") ? r["error"].get<std::string>() : "") << "\n";
    }
    write_output(g, os.str());
  } else {
    json out{{"config", config}, {"reports", reports}};
    write_output(g, out.dump(2) + "\n");
  }
  return 0;
}

// ---- profile ---------------------------------------------------------------

struct ProfileOpts {
  std::string in = "-";
  bool counts = false;
  std::string key_cols;
  std::string delim = ",";
  bool skip_header = false;
};

int run_profile(const GlobalOpts& g, const ProfileOpts& o) {
  std::ifstream file;
  std::istream* in = open_input(o.in, file);
  tau1::FrequencyProfile profile;
  if (o.counts) {
    profile = tau1::profile_from_counts(tau1::read_cell_count_csv(*in));
  } else {
    const auto records =
        tau1::read_records(*in, parse_cols(o.key_cols), o.delim.empty() ? ',' : o.delim[0],
                           o.skip_header);
    profile = tau1::profile_from_records(records);
  }
  profile.validate();
  std::cerr << "# config: subcommand=profile in=" << o.in << " counts=" << (o.counts ? 1 : 0)
            << " key_cols=" << (o.key_cols.empty() ? "-" : o.key_cols) << "\n";
  write_output(g, tau1::profile_to_json(profile).dump(2) + "\n");
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateOpts {
  int table = 1;
  int iterations = 100;
  double scale = 1.0;
};

int run_simulate(const GlobalOpts& g, const SimulateOpts& o) {
  const tau1::TableResult result =
      tau1::reproduce_table(o.table, g.seed, o.iterations, o.scale, g.threads);
  if (g.format_or("csv") == "csv") {
    write_output(g, tau1::table_to_csv(result));
    return 0;
  }
  json cols = json::array();
  for (const auto& col : result.columns) {
    json stats = json::object();
    stats["true_tau1"] = json{{"mean", col.true_stats.mean}, {"sd", col.true_stats.sd}};
    for (const auto& [name, st] : col.estimators)
      stats[name] = json{{"mean", st.mean}, {"sd", st.sd}, {"failures", st.failures}};
    cols.push_back(json{{"family", col.scenario.family.name()},
                        {"cells", col.scenario.cells},
                        {"nbar", col.scenario.nbar},
                        {"n", col.scenario.n},
                        {"lambda", col.scenario.lambda()},
                        {"estimates", stats}});
  }
  json out{{"config",
            {{"subcommand", "simulate"}, {"table", o.table}, {"seed", result.seed},
             {"iterations", o.iterations}, {"scale", o.scale}, {"mode", "fixed"}}},
           {"columns", cols}};
  write_output(g, out.dump(2) + "\n");
  return 0;
}

// ---- bounds ----------------------------------------------------------------

struct BoundsOpts {
  double lambda_min = 1.0;
  double lambda_max = 20.0;
  int lambda_steps = 50;
  std::string n_list = "100000";
  double K = 1.0;
};

int run_bounds(const GlobalOpts& g, const BoundsOpts& o) {
  const auto rows =
      tau1::bound_curves(o.lambda_min, o.lambda_max, o.lambda_steps, parse_doubles(o.n_list), o.K);
  if (g.format_or("csv") == "csv") {
    std::ostringstream os;
    os << "# config: subcommand=bounds lambda_min=" << tau1::fmt17(o.lambda_min)
       << " lambda_max=" << tau1::fmt17(o.lambda_max) << " lambda_steps=" << o.lambda_steps
       << " n=" << o.n_list << " K=" << tau1::fmt17(o.K) << "\n";
    os << "kind,lambda,n,value\n";
    for (const auto& r : rows)
      os << r.kind << "," << tau1::fmt17(r.lambda) << "," << tau1::fmt17(r.n) << ","
         << tau1::fmt17(r.value) << "\n";
    write_output(g, os.str());
  } else {
    json jrows = json::array();
    for (const auto& r : rows)
      jrows.push_back(json{{"kind", r.kind}, {"lambda", r.lambda}, {"n", r.n}, {"value", r.value}});
    json out{{"config",
              {{"subcommand", "bounds"}, {"lambda_min", o.lambda_min}, {"lambda_max", o.lambda_max},
               {"lambda_steps", o.lambda_steps}, {"n", o.n_list}, {"K", o.K}}},
             {"rows", jrows}};
    write_output(g, out.dump(2) + "\n");
  }
  return 0;
}

// ---- polyapprox ------------------------------------------------------------

struct PolyOpts {
  double n = 0.0;
  double lambda = 0.0;
  int L = 0;
  double xi = -1.0;
  double B = -1.0;
  double c0 = std::exp(-1.0);
};

int run_polyapprox(const GlobalOpts& g, const PolyOpts& o) {
  tau1::PolyApproxProblem problem =
      (o.xi > 0.0 && o.B > 0.0) ? tau1::PolyApproxProblem::from_params(o.xi, o.B, o.L)
                                : tau1::PolyApproxProblem::from_model(o.n, o.lambda, o.L, o.c0);
  const auto rep = tau1::verify_appendix_bounds(problem);
  json out{{"config",
            {{"subcommand", "polyapprox"}, {"n", o.n}, {"lambda", o.lambda}, {"L", o.L},
             {"xi", problem.xi}, {"B", problem.B}, {"c0", o.c0}}},
           {"report",
            {{"xi", rep.problem.xi},
             {"B", rep.problem.B},
             {"C", rep.problem.C()},
             {"S", rep.problem.S},
             {"L", rep.problem.L},
             {"E_gamma", rep.E_gamma},
             {"E_g", rep.E_g},
             {"rescale_factor", rep.rescale_factor},
             {"rescale_rel_err", rep.rescale_rel_err},
             {"eq19_lower", rep.eq19_lower},
             {"eq19_argmax_k", rep.eq19_argmax_k},
             {"eq19_holds", rep.eq19_holds},
             {"eq19_per_k", rep.eq19_per_k},
             {"thm5_branch", rep.thm5_branch},
             {"thm5_value", rep.thm5_value},
             {"implied_constant", rep.implied_constant},
             {"alternations", rep.alternations}}}};
  if (g.format_or("json") == "csv") {
    std::ostringstream os;
    os << "# config: subcommand=polyapprox xi=" << tau1::fmt17(problem.xi)
       << " B=" << tau1::fmt17(problem.B) << " L=" << problem.L << "\n";
    os << "key,value\n";
    for (const auto& [key, val] : out["report"].items()) {
      if (val.is_number()) os << key << "," << tau1::fmt17(val.get<double>()) << "\n";
      if (val.is_boolean()) os << key << "," << (val.get<bool>() ? 1 : 0) << "\n";
    }
    write_output(g, os.str());
    return 0;
  }
  write_output(g, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disclosure-risk estimation for cross-classified microdata"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "worker threads for simulations")
      ->check(CLI::Range(1, 1024));
  app.add_option("--seed", g.seed, "base RNG seed");

  ProfileOpts po;
  auto* profile_cmd = app.add_subcommand("profile", "build a frequency profile from records or counts");
  profile_cmd->add_option("--in", po.in, "input path, '-' for stdin");
  profile_cmd->add_flag("--counts", po.counts, "input is a cell,count CSV");
  profile_cmd->add_option("--key-cols", po.key_cols, "1-based CSV columns forming the key");
  profile_cmd->add_option("--delim", po.delim, "CSV delimiter (default ,)");
  profile_cmd->add_flag("--skip-header", po.skip_header, "skip the first record line");

  EstimateOpts eo;
  auto* estimate_cmd = app.add_subcommand("estimate", "run estimators on a profile");
  estimate_cmd->add_option("--profile", eo.profile_path, "profile JSON path")->required();
  estimate_cmd->add_option("--lambda", eo.lambda, "unobserved-to-observed ratio")->required();
  estimate_cmd->add_option("--nbar", eo.nbar, "population size");
  estimate_cmd->add_option("--estimator", eo.estimator, "which estimator")
      ->check(CLI::IsMember({"unbiased", "poisson", "binomial2", "naive", "dirichlet",
                             "bethlehem", "skinner", "all"}));
  estimate_cmd->add_option("--smoothing", eo.smoothing, "smoothing family override")
      ->check(CLI::IsMember({"none", "poisson", "binomial2"}));
  estimate_cmd->add_option("--beta", eo.beta, "Poisson smoothing rate override");
  estimate_cmd->add_option("--x0", eo.x0, "Binomial smoothing trial-count override");
  estimate_cmd->add_option("--theta-convention", eo.theta_convention,
                           "index range in the concentration equation")
      ->check(CLI::IsMember({"paper", "standard"}));

  SimulateOpts so;
  auto* simulate_cmd = app.add_subcommand("simulate", "reproduce a synthetic table");
  simulate_cmd->add_option("--table", so.table, "table preset 1..3")->check(CLI::Range(1, 3));
  simulate_cmd->add_option("--iterations", so.iterations, "iterations per scenario")
      ->check(CLI::Range(1, 1000000));
  simulate_cmd->add_option("--scale", so.scale, "shrink (cells, nbar, n) proportionally");

  BoundsOpts bo;
  auto* bounds_cmd = app.add_subcommand("bounds", "emit risk-bound curves");
  bounds_cmd->add_option("--lambda-min", bo.lambda_min, "grid start");
  bounds_cmd->add_option("--lambda-max", bo.lambda_max, "grid end");
  bounds_cmd->add_option("--lambda-steps", bo.lambda_steps, "grid steps");
  bounds_cmd->add_option("--n", bo.n_list, "comma-separated sample sizes");
  bounds_cmd->add_option("--K", bo.K, "caller constant for the minimax curve");

  PolyOpts xo;
  auto* poly_cmd = app.add_subcommand("polyapprox", "approximation-theory lab report");
  poly_cmd->add_option("--n", xo.n, "sample size");
  poly_cmd->add_option("--lambda", xo.lambda, "unobserved-to-observed ratio");
  poly_cmd->add_option("--L", xo.L, "polynomial degree")->required();
  poly_cmd->add_option("--xi", xo.xi, "explicit interval parameter");
  poly_cmd->add_option("--B", xo.B, "explicit exponent scale");
  poly_cmd->add_option("--c0", xo.c0, "constant in the interval parameter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (profile_cmd->parsed()) return run_profile(g, po);
    if (estimate_cmd->parsed()) return run_estimate(g, eo);
    if (simulate_cmd->parsed()) return run_simulate(g, so);
    if (bounds_cmd->parsed()) return run_bounds(g, bo);
    if (poly_cmd->parsed()) return run_polyapprox(g, xo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
