#ifndef TAU1_SIMULATION_HPP
#define TAU1_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tau1/estimators.hpp"
#include "tau1/numeric.hpp"
#include "tau1/profile.hpp"
#include "tau1/smoothing.hpp"

namespace tau1 {

enum class FamilyKind { Zipf, Uniform, SymDirichlet };

struct Family {
  FamilyKind kind = FamilyKind::Uniform;
  double param = 0.0;  // Zipf exponent s, or Dirichlet concentration

  static Family zipf(double s) {
    if (!(s > 0.0)) throw DomainError("Family: Zipf requires s > 0");
    return {FamilyKind::Zipf, s};
  }
  static Family uniform() { return {FamilyKind::Uniform, 0.0}; }
  static Family sym_dirichlet(double beta) {
    if (!(beta > 0.0)) throw DomainError("Family: Dirichlet requires beta > 0");
    return {FamilyKind::SymDirichlet, beta};
  }

  std::string name() const {
    std::ostringstream os;
    switch (kind) {
      case FamilyKind::Zipf: os << "zipf_" << param; break;
      case FamilyKind::Uniform: os << "uniform"; break;
      case FamilyKind::SymDirichlet: os << "dirichlet_" << param; break;
    }
    return os.str();
  }
};

enum class SamplingMode { Poisson, Fixed };

struct Scenario {
  Family family;
  std::int64_t cells = 0;
  std::int64_t nbar = 0;  // population size (sample included)
  std::int64_t n = 0;     // sample size
  int iterations = 1;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Fixed;

  double lambda() const { return static_cast<double>(nbar - n) / static_cast<double>(n); }

  void validate() const {
    if (cells < 1) throw DomainError("Scenario: requires cells >= 1");
    if (n < 1 || n >= nbar) throw DomainError("Scenario: requires 1 <= n < nbar");
    if (iterations < 1) throw DomainError("Scenario: requires iterations >= 1");
  }
};

/// Cell probabilities for one scenario. Zipf and Uniform are deterministic
/// in C; Dirichlet draws once from the symmetric Dirichlet.
inline std::vector<double> generate_probabilities(const Family& family, std::int64_t cells,
                                                  std::mt19937_64& rng) {
  if (cells < 1) throw DomainError("generate_probabilities: requires cells >= 1");
  std::vector<double> p(static_cast<std::size_t>(cells));
  switch (family.kind) {
    case FamilyKind::Uniform:
      for (auto& v : p) v = 1.0 / static_cast<double>(cells);
      return p;
    case FamilyKind::Zipf: {
      long double norm = 0.0L;
      for (std::int64_t j = 0; j < cells; ++j) {
        p[static_cast<std::size_t>(j)] =
            std::exp(-family.param * std::log(static_cast<double>(j + 1)));
        norm += p[static_cast<std::size_t>(j)];
      }
      for (auto& v : p) v = static_cast<double>(v / norm);
      return p;
    }
    case FamilyKind::SymDirichlet: {
      std::gamma_distribution<double> gamma(family.param, 1.0);
      long double norm = 0.0L;
      for (auto& v : p) {
        v = gamma(rng);
        norm += v;
      }
      if (!(norm > 0.0L)) throw ConvergenceError("generate_probabilities: degenerate Dirichlet draw");
      for (auto& v : p) v = static_cast<double>(v / norm);
      return p;
    }
  }
  throw DomainError("generate_probabilities: invalid family");
}

/// Per-cell sample and population counts for one iteration; population
/// includes the sample.
struct DrawnCounts {
  std::vector<std::int32_t> sample;
  std::vector<std::int32_t> population;
};

namespace sim_detail {

inline double canonical_uniform(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

}  // namespace sim_detail

/// Poisson mode realizes the abundance model directly: sample counts
/// Poiss(n p_j) plus independent unseen counts Poiss((nbar-n) p_j).
/// Fixed mode draws the population as nbar multinomial trials, then a
/// uniform subsample of exactly n records without replacement.
inline DrawnCounts draw_population_and_sample(std::span<const double> p, const Scenario& scenario,
                                              std::mt19937_64& rng) {
  scenario.validate();
  const std::size_t cells = p.size();
  DrawnCounts out;
  out.sample.assign(cells, 0);
  out.population.assign(cells, 0);

  if (scenario.mode == SamplingMode::Poisson) {
    std::poisson_distribution<std::int32_t> pois;
    using pparam = std::poisson_distribution<std::int32_t>::param_type;
    const double n = static_cast<double>(scenario.n);
    const double extra = static_cast<double>(scenario.nbar - scenario.n);
    for (std::size_t j = 0; j < cells; ++j) {
      const std::int32_t y = p[j] > 0.0 ? pois(rng, pparam(n * p[j])) : 0;
      const std::int32_t d = p[j] > 0.0 ? pois(rng, pparam(extra * p[j])) : 0;
      out.sample[j] = y;
      out.population[j] = y + d;
    }
    return out;
  }

  // conditional-binomial multinomial over the cells
  std::vector<long double> suffix(cells + 1, 0.0L);
  for (std::size_t j = cells; j-- > 0;) suffix[j] = suffix[j + 1] + p[j];
  std::binomial_distribution<std::int32_t> binom;
  using bparam = std::binomial_distribution<std::int32_t>::param_type;
  std::int64_t remaining = scenario.nbar;
  for (std::size_t j = 0; j < cells && remaining > 0; ++j) {
    if (j + 1 == cells || suffix[j + 1] <= 0.0L) {
      out.population[j] = static_cast<std::int32_t>(remaining);
      remaining = 0;
      break;
    }
    double cond = static_cast<double>(p[j] / suffix[j]);
    cond = std::min(1.0, std::max(0.0, cond));
    const std::int32_t y = binom(rng, bparam(static_cast<std::int32_t>(remaining), cond));
    out.population[j] = y;
    remaining -= y;
  }

  // uniform subsample of n of the nbar individuals (sequential selection)
  std::int64_t pop_left = scenario.nbar;
  std::int64_t need = scenario.n;
  for (std::size_t j = 0; j < cells && need > 0; ++j) {
    std::int32_t taken = 0;
    for (std::int32_t t = 0; t < out.population[j]; ++t) {
      if (sim_detail::canonical_uniform(rng) * static_cast<double>(pop_left) <
          static_cast<double>(need)) {
        ++taken;
        --need;
      }
      --pop_left;
      if (need == 0) break;
    }
    out.sample[j] = taken;
  }
  return out;
}

inline FrequencyProfile profile_from_count_vector(std::span<const std::int32_t> counts) {
  FrequencyProfile p;
  for (const std::int32_t c : counts) {
    if (c < 0) throw DomainError("profile_from_count_vector: negative count");
    if (c == 0) continue;
    p.z[c] += 1;
    p.n += c;
    p.k += 1;
  }
  return p;
}

inline std::int64_t true_tau1(const DrawnCounts& drawn) {
  std::int64_t t = 0;
  for (std::size_t j = 0; j < drawn.sample.size(); ++j)
    if (drawn.sample[j] == 1 && drawn.population[j] == 1) ++t;
  return t;
}

/// String-keyed view of one draw, for the generic paired-count checks.
inline PairedCounts to_paired_counts(const DrawnCounts& drawn) {
  PairedCounts pc;
  for (std::size_t j = 0; j < drawn.sample.size(); ++j) {
    const CellId id = "c" + std::to_string(j);
    if (drawn.sample[j] > 0) pc.sample.counts[id] = drawn.sample[j];
    if (drawn.population[j] > 0) pc.population.counts[id] = drawn.population[j];
  }
  return pc;
}

struct EstimatorStats {
  double mean = 0.0;
  double sd = 0.0;        // across iterations
  double err_mean = 0.0;  // mean(estimate - true tau1)
  double err_sd = 0.0;
  double mse = 0.0;       // mean squared error against true tau1
  int failures = 0;
  int count = 0;
};

struct SimulationReport {
  Scenario scenario;
  EstimatorStats true_stats;
  std::vector<std::pair<std::string, EstimatorStats>> estimators;  // fixed order
  double k_mean = 0.0;   // mean occupied cells = mean Zbar_1
  double z1_mean = 0.0;  // mean sample singletons

  const EstimatorStats* find(const std::string& name) const {
    for (const auto& [n, s] : estimators)
      if (n == name) return &s;
    return nullptr;
  }
};

namespace sim_detail {

struct IterationRow {
  double true_tau1 = 0.0;
  double k = 0.0;
  double z1 = 0.0;
  std::vector<std::optional<double>> values;
};

inline EstimatorStats reduce(const std::vector<IterationRow>& rows, std::size_t idx) {
  EstimatorStats s;
  NeumaierSum sum, sum_err;
  for (const auto& r : rows) {
    const auto& v = r.values[idx];
    if (!v.has_value()) {
      ++s.failures;
      continue;
    }
    ++s.count;
    sum.add(*v);
    sum_err.add(*v - r.true_tau1);
  }
  if (s.count == 0) return s;
  s.mean = sum.value() / s.count;
  s.err_mean = sum_err.value() / s.count;
  NeumaierSum var, var_err, mse;
  for (const auto& r : rows) {
    const auto& v = r.values[idx];
    if (!v.has_value()) continue;
    var.add((*v - s.mean) * (*v - s.mean));
    const double e = *v - r.true_tau1;
    var_err.add((e - s.err_mean) * (e - s.err_mean));
    mse.add(e * e);
  }
  s.sd = s.count > 1 ? std::sqrt(var.value() / (s.count - 1)) : 0.0;
  s.err_sd = s.count > 1 ? std::sqrt(var_err.value() / (s.count - 1)) : 0.0;
  s.mse = mse.value() / s.count;
  return s;
}

}  // namespace sim_detail

/// Run every applicable estimator over `iterations` independent draws.
/// Iteration i owns the RNG stream mix_seed(seed, i), so results do not
/// depend on the thread count, and aggregation runs in iteration order.
inline SimulationReport run_scenario(const Scenario& scenario, int threads = 1) {
  scenario.validate();
  const double lambda = scenario.lambda();

  std::mt19937_64 prob_rng(mix_seed(scenario.seed, 0x70726F62ULL));  // probability stream
  const std::vector<double> p = generate_probabilities(scenario.family, scenario.cells, prob_rng);

  std::vector<std::string> names;
  std::optional<SmoothingSpec> poisson_spec, binomial_spec;
  if (lambda < 1.0) {
    names.emplace_back("unbiased");
  } else {
    poisson_spec = SmoothingSpec::poisson(optimal_poisson_beta(lambda, static_cast<double>(scenario.n)));
    binomial_spec = SmoothingSpec::binomial2(
        lambda, optimal_binomial_x0(lambda, static_cast<double>(scenario.n)));
    names.emplace_back("binomial2");
    names.emplace_back("poisson");
  }
  names.emplace_back("naive");
  names.emplace_back("dirichlet");
  names.emplace_back("bethlehem");
  names.emplace_back("skinner");

  const double nbar = static_cast<double>(scenario.nbar);
  std::vector<sim_detail::IterationRow> rows(static_cast<std::size_t>(scenario.iterations));

  auto run_iteration = [&](int iter) {
    std::mt19937_64 rng(mix_seed(scenario.seed, static_cast<std::uint64_t>(iter)));
    const DrawnCounts drawn = draw_population_and_sample(p, scenario, rng);
    const FrequencyProfile profile = profile_from_count_vector(drawn.sample);

    sim_detail::IterationRow row;
    row.true_tau1 = static_cast<double>(true_tau1(drawn));
    row.k = static_cast<double>(profile.k);
    row.z1 = static_cast<double>(profile.z_at(1));
    row.values.reserve(names.size());

    auto attempt = [&](auto&& fn) {
      std::optional<double> v;
      try {
        v = fn();
      } catch (const std::exception&) {
      }
      row.values.push_back(v);
    };

    if (lambda < 1.0) {
      attempt([&] { return tau1_unbiased(profile, lambda); });
    } else {
      attempt([&] { return tau1_smoothed(profile, lambda, *binomial_spec); });
      attempt([&] { return tau1_smoothed(profile, lambda, *poisson_spec); });
    }
    attempt([&] { return tau1_naive(profile, nbar); });
    attempt([&] { return tau1_dirichlet(profile, nbar); });
    std::optional<PoissonGammaFit> fit;
    try {
      fit = fit_poisson_gamma(profile, nbar);
    } catch (const std::exception&) {
    }
    attempt([&]() -> double {
      if (!fit) throw ConvergenceError("fit failed");
      return tau1_bethlehem(profile, nbar, *fit);
    });
    attempt([&]() -> double {
      if (!fit) throw ConvergenceError("fit failed");
      return tau1_skinner(profile, nbar, *fit);
    });
    rows[static_cast<std::size_t>(iter)] = std::move(row);
  };

  const int workers = std::max(1, std::min(threads, scenario.iterations));
  if (workers == 1) {
    for (int i = 0; i < scenario.iterations; ++i) run_iteration(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < scenario.iterations; i = next.fetch_add(1))
          run_iteration(i);
      });
    for (auto& t : pool) t.join();
  }

  SimulationReport report;
  report.scenario = scenario;
  {
    NeumaierSum st, sk, sz;
    for (const auto& r : rows) {
      st.add(r.true_tau1);
      sk.add(r.k);
      sz.add(r.z1);
    }
    report.true_stats.count = scenario.iterations;
    report.true_stats.mean = st.value() / scenario.iterations;
    NeumaierSum var;
    for (const auto& r : rows)
      var.add((r.true_tau1 - report.true_stats.mean) * (r.true_tau1 - report.true_stats.mean));
    report.true_stats.sd =
        scenario.iterations > 1 ? std::sqrt(var.value() / (scenario.iterations - 1)) : 0.0;
    report.k_mean = sk.value() / scenario.iterations;
    report.z1_mean = sz.value() / scenario.iterations;
  }
  for (std::size_t e = 0; e < names.size(); ++e)
    report.estimators.emplace_back(names[e], sim_detail::reduce(rows, e));
  return report;
}

// ---- table presets ---------------------------------------------------------

/// The synthetic-table protocol: population 1.1e6 individuals of which 1e5
/// are sampled (lambda = 10), fixed-mode sampling, seven probability
/// families, 100 iterations. Table 1/2/3 differ in the cell count.
struct TableResult {
  int table = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  double scale = 1.0;
  std::vector<SimulationReport> columns;
};

inline TableResult reproduce_table(int which, std::uint64_t seed, int iterations = 100,
                                   double scale = 1.0, int threads = 1) {
  if (which < 1 || which > 3) throw DomainError("reproduce_table: table must be 1, 2 or 3");
  if (iterations < 1) throw DomainError("reproduce_table: iterations must be >= 1");
  if (!(scale > 0.0 && scale <= 1.0)) throw DomainError("reproduce_table: scale must be in (0, 1]");
  const std::int64_t cells_base = 300000LL * which;
  const auto scaled = [scale](std::int64_t v) {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(v) * scale));
  };

  const std::vector<Family> families = {Family::zipf(0.2),          Family::zipf(0.5),
                                        Family::zipf(0.8),          Family::zipf(1.0),
                                        Family::uniform(),          Family::sym_dirichlet(0.5),
                                        Family::sym_dirichlet(1.0)};
  TableResult out;
  out.table = which;
  out.seed = seed;
  out.iterations = iterations;
  out.scale = scale;
  for (std::size_t col = 0; col < families.size(); ++col) {
    Scenario s;
    s.family = families[col];
    s.cells = scaled(cells_base);
    s.nbar = scaled(1100000);
    s.n = scaled(100000);
    s.iterations = iterations;
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(which) * 16 + col);
    s.mode = SamplingMode::Fixed;
    out.columns.push_back(run_scenario(s, threads));
  }
  return out;
}

/// CSV in the table layout: one row per estimator, a mean and sd column per
/// scenario. The config header covers everything that determines the data,
/// so equal-seed runs are byte-identical regardless of thread count.
inline std::string table_to_csv(const TableResult& t) {
  std::ostringstream os;
  os << "# tau1risk simulate\n";
  os << "# config: table=" << t.table << " seed=" << t.seed << " iterations=" << t.iterations
     << " scale=" << fmt17(t.scale) << " mode=fixed";
  if (!t.columns.empty()) {
    const auto& s = t.columns.front().scenario;
    os << " cells=" << s.cells << " nbar=" << s.nbar << " n=" << s.n
       << " lambda=" << fmt17(s.lambda());
  }
  os << "\n";
  for (const auto& col : t.columns) {
    bool any = false;
    for (const auto& [name, st] : col.estimators) any = any || st.failures > 0;
    if (any) {
      os << "# failures " << col.scenario.family.name() << ":";
      for (const auto& [name, st] : col.estimators)
        if (st.failures > 0) os << " " << name << "=" << st.failures;
      os << "\n";
    }
  }
  os << "estimator";
  for (const auto& col : t.columns) {
    const std::string f = col.scenario.family.name();
    os << "," << f << "," << f << "_sd";
  }
  os << "\n";
  os << "true_tau1";
  for (const auto& col : t.columns)
    os << "," << fmt17(col.true_stats.mean) << "," << fmt17(col.true_stats.sd);
  os << "\n";
  const std::vector<std::string> order = {"binomial2", "poisson",   "naive",
                                          "dirichlet", "bethlehem", "skinner"};
  for (const auto& name : order) {
    os << name;
    for (const auto& col : t.columns) {
      const EstimatorStats* st = col.find(name);
      if (st == nullptr || st->count == 0)
        os << ",nan,nan";
      else
        os << "," << fmt17(st->mean) << "," << fmt17(st->sd);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace tau1

#endif  // TAU1_SIMULATION_HPP
