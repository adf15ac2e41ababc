#ifndef GCOVTEST_MONTECARLO_HPP
#define GCOVTEST_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcovtest/basis.hpp"
#include "gcovtest/bootstrap.hpp"
#include "gcovtest/distributions.hpp"
#include "gcovtest/gcov.hpp"
#include "gcovtest/models.hpp"
#include "gcovtest/nlsd.hpp"
#include "gcovtest/parallel.hpp"
#include "gcovtest/report.hpp"

namespace gcovtest {

/**
 * Statistic of replicate i computed by f(derive_seed(seed, i)); failed
 * replicates (library errors) are NaN.
 */
inline std::vector<double> mc_statistics(Index reps, std::uint64_t seed,
                                         const std::function<double(std::uint64_t)>& f,
                                         unsigned workers = 0) {
  std::vector<double> out(static_cast<std::size_t>(reps), std::numeric_limits<double>::quiet_NaN());
  parallel_for(
      out.size(),
      [&](std::size_t i) {
        try {
          out[i] = f(derive_seed(seed, i));
        } catch (const Error&) {
        }
      },
      workers);
  return out;
}

/** Fraction of finite statistics strictly above `critical`. */
inline RejectionRate rate_above(const std::vector<double>& stats, double critical) {
  Index rej = 0, valid = 0, fail = 0;
  for (double v : stats) {
    if (!std::isfinite(v)) {
      ++fail;
      continue;
    }
    ++valid;
    if (v > critical) ++rej;
  }
  return make_rate(rej, valid, fail);
}

/** Nearest-rank empirical quantile of the finite statistics. */
inline double empirical_quantile(std::vector<double> stats, double level) {
  stats.erase(std::remove_if(stats.begin(), stats.end(), [](double v) { return !std::isfinite(v); }),
              stats.end());
  if (stats.empty()) throw InsufficientSample("no finite statistics");
  std::sort(stats.begin(), stats.end());
  const auto n = static_cast<double>(stats.size());
  const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(level * n - 1e-9)));
  return stats[std::min(k, stats.size()) - 1];
}

// ---------------------------------------------------------------------------
// scenario kernels

/** NLSD statistic on y simulated from MAR(0,1) with coefficient gamma (gamma = 0: i.i.d.). */
inline std::vector<double> nlsd_statistics(const ErrorDistribution& dist, Index T, double gamma,
                                           const TransformSet& ts, Index H, Index reps,
                                           std::uint64_t seed, unsigned workers = 0) {
  const ModelSpec dgp = ModelSpec::mar({}, {gamma});
  return mc_statistics(
      reps, seed,
      [&](std::uint64_t s) {
        const Simulation sim = simulate(dgp, dist, T, s);
        return nlsd_statistic(sim.series.values(), ts, H);
      },
      workers);
}

/** GCov spec-test statistics n L(theta_hat) when fitting `fitted` to data from `dgp`. */
inline std::vector<double> gcov_statistics(const ModelSpec& dgp, const ModelSpec& fitted,
                                           const ErrorDistribution& dist, Index T,
                                           const TransformSet& ts, Index H, Index reps,
                                           std::uint64_t seed, const GcovOptions& opt = {},
                                           unsigned workers = 0) {
  return mc_statistics(
      reps, seed,
      [&](std::uint64_t s) {
        const Simulation sim = simulate(dgp, dist, T, s);
        const GcovFit fit = gcov_fit(fitted, sim.series, ts, H, opt);
        return static_cast<double>(fit.T) * fit.objective_min;
      },
      workers);
}

/** Many-transformation statistics z on data from `dgp`. */
inline std::vector<double> many_transform_z(const ModelSpec& dgp, const ModelSpec& fitted,
                                            const ErrorDistribution& dist, Index T, Index H,
                                            const ManyTransformConfig& cfg, Index reps,
                                            std::uint64_t seed, unsigned workers = 0) {
  return mc_statistics(
      reps, seed,
      [&](std::uint64_t s) {
        const Simulation sim = simulate(dgp, dist, T, s);
        return many_transform_test(fitted, sim.series, H, cfg).z;
      },
      workers);
}

// ---------------------------------------------------------------------------
// experiment configuration

/**
 * Monte Carlo experiment.  Text form: one `key = value` per line, `#`
 * comments, lists comma-separated.  Keys: scenario, dists, T, reps, S,
 * alpha, seed, H, transforms, psi, phi, gamma, delta, K, estimator,
 * t_weight, epsilon, reminimize, output.
 */
struct ExperimentConfig {
  std::string scenario = "nlsd-size";
  std::vector<std::string> dists{"uniform", "laplace", "t5"};
  std::vector<Index> T{100, 200, 500};
  Index reps = 1000;
  Index S = 100;
  double alpha = 0.05;
  std::uint64_t seed = 20240101;
  Index H = 1;
  std::string transforms = "identity,power:2";
  std::vector<double> psi{0.3, 0.7};
  double phi = 0.8;
  std::vector<double> gamma{0.3, 0.7};
  std::vector<double> delta{};
  std::vector<int> K{7, 8, 9};
  std::string estimator = "gcov";
  double t_weight = 0.01;
  std::optional<double> epsilon;  // unset: max(1e-8, K/T)
  bool reminimize = true;
  std::string output;
};

namespace detail {

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split(v, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    double d;
    if (!parse_double(t, d)) throw UsageError("bad number '" + t + "' in list");
    out.push_back(static_cast<T>(d));
  }
  return out;
}

inline std::vector<std::string> parse_words(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& item : split(v, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

}  // namespace detail

inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto num = [&] {
    double d;
    if (!detail::parse_double(value, d)) throw UsageError("bad value for '" + key + "'");
    return d;
  };
  if (key == "scenario") c.scenario = value;
  else if (key == "dists") c.dists = detail::parse_words(value);
  else if (key == "T") c.T = detail::parse_list<Index>(value);
  else if (key == "reps") c.reps = static_cast<Index>(num());
  else if (key == "S") c.S = static_cast<Index>(num());
  else if (key == "alpha") c.alpha = num();
  else if (key == "seed") {
    try {
      std::size_t pos = 0;
      c.seed = std::stoull(value, &pos);
      if (pos != value.size()) throw UsageError("bad seed");
    } catch (const std::logic_error&) {
      throw UsageError("bad value for 'seed'");
    }
  }
  else if (key == "H") c.H = static_cast<Index>(num());
  else if (key == "transforms") c.transforms = value;
  else if (key == "psi") c.psi = detail::parse_list<double>(value);
  else if (key == "phi") c.phi = num();
  else if (key == "gamma") c.gamma = detail::parse_list<double>(value);
  else if (key == "delta") c.delta = detail::parse_list<double>(value);
  else if (key == "K") c.K = detail::parse_list<int>(value);
  else if (key == "estimator") c.estimator = value;
  else if (key == "t_weight") c.t_weight = num();
  else if (key == "epsilon") c.epsilon = num();
  else if (key == "reminimize") c.reminimize = value == "true" || value == "1";
  else if (key == "output") c.output = value;
  else throw UsageError("unknown configuration key '" + key + "'");
}

inline ExperimentConfig parse_experiment(std::istream& in, ExperimentConfig c = {}) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("expected key = value, got '" + line + "'");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return c;
}

/**
 * Paper table presets: table1 (NLSD), table2 (GCov spec test),
 * table3b (AML bootstrap), table5 (many transformations), table9 (Cauchy).
 */
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "table1") {
    c.scenario = "nlsd-size-power";
    c.H = 1;
    c.reps = 5000;
    c.gamma = {0.3, 0.7};
  } else if (name == "table2") {
    c.scenario = "gcov-size-power";
    c.H = 3;
    c.reps = 5000;
    c.psi = {0.3, 0.7};
    c.phi = 0.8;
  } else if (name == "table3b") {
    c.scenario = "bootstrap-size-power";
    c.dists = {"t4", "t5", "t6"};
    c.H = 3;
    c.reps = 1000;
    c.S = 100;
    c.estimator = "aml";
  } else if (name == "table5") {
    c.scenario = "many-transform-size-power";
    c.dists = {"t5"};
    c.T = {500};
    c.H = 3;
    c.reps = 1000;
    c.K = {7, 8, 9};
  } else if (name == "table9") {
    c.scenario = "cauchy-suite";
    c.dists = {"cauchy"};
    c.T = {100, 200, 300, 400, 500};
    c.H = 3;
    c.reps = 5000;
    c.transforms = "identity,abs-power:0.5,log-abs";
  } else if (name == "figure2") {
    c.scenario = "nlsd-power-local";
    c.H = 1;
    c.reps = 5000;
    c.delta = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  } else if (name == "figure3") {
    c.scenario = "gcov-power-local";
    c.T = {500};
    c.H = 3;
    c.reps = 1000;
    c.delta = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  } else {
    throw UsageError("unknown preset '" + name + "'");
  }
  return c;
}

struct McCell {
  std::string row;
  std::string dist;
  Index T = 0;
  RejectionRate rate;
  double critical = 0.0;
  std::string kind;  // "size", "power (size-adjusted)", ...
};

struct McTable {
  ExperimentConfig config;
  std::vector<McCell> cells;
};

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

using CellCallback = std::function<void(const McTable&)>;

/**
 * Runs the configured scenario and returns one cell per (row, dist, T).
 * `on_cell`, when set, sees the partial table after every finished cell.
 */
inline McTable run_experiment(const ExperimentConfig& c, unsigned workers = 0,
                              const CellCallback& on_cell = {}) {
  McTable out;
  out.config = c;
  const TransformSet ts = parse_transform_set(c.transforms);
  const double K = static_cast<double>(ts.size());
  const ModelSpec mar01 = ModelSpec::mar_template(0, 1);
  std::uint64_t cell_id = 0;
  auto push = [&](McCell cell) {
    out.cells.push_back(std::move(cell));
    if (on_cell) on_cell(out);
  };
  auto next_seed = [&] { return derive_seed(c.seed, cell_id++); };

  for (const std::string& dname : c.dists) {
    const ErrorDistribution dist = parse_distribution(dname);
    for (Index T : c.T) {
      if (c.scenario == "nlsd-size-power" || c.scenario == "nlsd-size" ||
          c.scenario == "nlsd-power-fixed" || c.scenario == "nlsd-power-local") {
        const double df = K * K * static_cast<double>(c.H);
        const auto null = nlsd_statistics(dist, T, 0.0, ts, c.H, c.reps, next_seed(), workers);
        const double crit = chi2_quantile(df, 1.0 - c.alpha);
        const double adj = empirical_quantile(null, 1.0 - c.alpha);
        push({"gamma=0", dname, T, rate_above(null, crit), crit, "size"});
        const bool local = c.scenario == "nlsd-power-local";
        if (c.scenario != "nlsd-size")
          for (double g : local ? c.delta : c.gamma) {
            const double coef = local ? g / std::sqrt(static_cast<double>(T)) : g;
            const auto alt = nlsd_statistics(dist, T, coef, ts, c.H, c.reps, next_seed(), workers);
            push({(local ? "delta=" : "gamma=") + detail::fmt_num(g), dname, T,
                                 rate_above(alt, adj), adj, "power (size-adjusted)"});
          }
      } else if (c.scenario == "gcov-size-power" || c.scenario == "gcov-size" ||
                 c.scenario == "gcov-power-fixed" || c.scenario == "cauchy-suite" ||
                 c.scenario == "gcov-power-local") {
        const double df = K * K * static_cast<double>(c.H) - 1.0;
        const double crit = chi2_quantile(df, 1.0 - c.alpha);
        for (double psi : c.psi) {
          const auto null = gcov_statistics(ModelSpec::mar({}, {psi}), mar01, dist, T, ts, c.H,
                                            c.reps, next_seed(), {}, workers);
          push({"phi=0,psi=" + detail::fmt_num(psi), dname, T, rate_above(null, crit),
                               crit, "size"});
          if (c.scenario == "gcov-size") continue;
          const double adj = empirical_quantile(null, 1.0 - c.alpha);
          std::vector<double> phis{c.phi};
          if (c.scenario == "gcov-power-local") {
            phis.clear();
            for (double d : c.delta) phis.push_back(d / std::sqrt(static_cast<double>(T)));
          }
          for (double phi : phis) {
            const auto alt = gcov_statistics(ModelSpec::mar({phi}, {psi}), mar01, dist, T, ts,
                                             c.H, c.reps, next_seed(), {}, workers);
            push({"phi=" + detail::fmt_num(phi) + ",psi=" + detail::fmt_num(psi),
                                 dname, T, rate_above(alt, adj), adj, "power (size-adjusted)"});
          }
        }
      } else if (c.scenario == "bootstrap-size-power" || c.scenario == "bootstrap-size") {
        BootstrapConfig bc;
        bc.S = c.S;
        bc.estimator.kind = parse_estimator(c.estimator);
        for (double psi : c.psi) {
          const BootstrapStudy st = bootstrap_size_power_study(
              ModelSpec::mar({}, {psi}), ModelSpec::mar({c.phi}, {psi}), dist, T, ts, c.H, c.reps,
              c.alpha, bc, next_seed(), c.scenario == "bootstrap-size-power", workers);
          push({"phi=0,psi=" + detail::fmt_num(psi), dname, T, st.size, 0.0, "size"});
          if (c.scenario == "bootstrap-size-power")
            push({"phi=" + detail::fmt_num(c.phi) + ",psi=" + detail::fmt_num(psi),
                                 dname, T, st.power, 0.0, "power (bootstrap critical value)"});
        }
      } else if (c.scenario == "many-transform-size" || c.scenario == "many-transform-size-power") {
        const double crit = normal_quantile(1.0 - c.alpha);
        for (int k : c.K) {
          ManyTransformConfig mc;
          mc.grid = build_generators(k, std::vector<double>{c.t_weight}, SignMode::absolute_value, 1);
          mc.epsilon = c.epsilon;
          mc.reminimize = c.reminimize;
          for (double psi : c.psi) {
            const auto z = many_transform_z(ModelSpec::mar({}, {psi}), mar01, dist, T, c.H, mc,
                                            c.reps, next_seed(), workers);
            push({"K=" + std::to_string(k) + ",psi=" + detail::fmt_num(psi), dname, T,
                                 rate_above(z, crit), crit, "size"});
          }
        }
      } else {
        throw UsageError("unknown scenario '" + c.scenario + "'");
      }
    }
  }
  return out;
}

inline Json to_json(const McTable& t) {
  const ExperimentConfig& c = t.config;
  Json j;
  Json man;
  man["scenario"] = c.scenario;
  man["dists"] = c.dists;
  man["T"] = c.T;
  man["reps"] = c.reps;
  man["S"] = c.S;
  man["alpha"] = c.alpha;
  man["seed"] = c.seed;
  man["H"] = c.H;
  man["transforms"] = c.transforms;
  man["psi"] = c.psi;
  man["phi"] = c.phi;
  man["gamma"] = c.gamma;
  man["delta"] = c.delta;
  man["K"] = c.K;
  man["estimator"] = c.estimator;
  man["t_weight"] = c.t_weight;
  if (c.epsilon) man["epsilon"] = *c.epsilon;
  else man["epsilon"] = "max(1e-8, K/T)";
  man["reminimize"] = c.reminimize;
  man["seed_rule"] = "cell i uses derive_seed(seed, i); replicate r of a cell uses derive_seed(cell_seed, r)";
  j["manifest"] = man;
  Json cells = Json::array();
  for (const auto& cell : t.cells)
    cells.push_back({{"row", cell.row}, {"dist", cell.dist}, {"T", cell.T}, {"kind", cell.kind},
                     {"rate", cell.rate.rate}, {"se", cell.rate.se}, {"reps", cell.rate.reps},
                     {"failures", cell.rate.failures}, {"critical", cell.critical}});
  j["cells"] = cells;
  return j;
}

inline void write_csv(std::ostream& os, const McTable& t) {
  os << "row,kind,dist,T,rate,se,reps,failures,critical\n";
  for (const auto& c : t.cells)
    os << '"' << c.row << "\"," << c.kind << ',' << c.dist << ',' << c.T << ',' << c.rate.rate << ','
       << c.rate.se << ',' << c.rate.reps << ',' << c.rate.failures << ',' << c.critical << '\n';
}

}  // namespace gcovtest

#endif  // GCOVTEST_MONTECARLO_HPP
