#pragma once

// Declarative experiment runner: simulate, observe, decompose, and compare
// estimated spectra against analytic truth over several realizations.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rdmd/dmd.hpp"
#include "rdmd/observables.hpp"
#include "rdmd/rds_sim.hpp"
#include "rdmd/rng.hpp"
#include "rdmd/types.hpp"

namespace rdmd {

// --- spectrum matching -----------------------------------------------------------

struct MatchedPair {
  cplx truth;
  cplx estimate;
  double error = 0.0;
};

struct SpectrumComparison {
  std::vector<MatchedPair> pairs;  ///< in truth order
  std::vector<cplx> unmatched_estimates;
  double mean_error = 0.0;
  double max_error = 0.0;
  double mean_modulus_bias = 0.0;  ///< mean(|estimate| - |truth|) over pairs
};

namespace detail {

inline bool lex_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Shortest augmenting path with potentials, O(rows^2 cols).
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = n == 0 ? 0 : static_cast<int>(cost[0].size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Injective truth -> estimate matching minimizing the total absolute error.
/// Estimates are considered in lexicographic (re, im) order, which fixes ties.
inline SpectrumComparison match_spectra(const std::vector<cplx>& truth, const std::vector<cplx>& estimates) {
  require(!truth.empty(), "match_spectra: empty truth set");
  if (estimates.size() < truth.size()) {
    fail(ErrorKind::InvalidArgument, "match_spectra: " + std::to_string(estimates.size()) + " estimates for " +
                                         std::to_string(truth.size()) + " true eigenvalues");
  }
  std::vector<cplx> est = estimates;
  std::stable_sort(est.begin(), est.end(), detail::lex_less);

  std::vector<std::vector<double>> cost(truth.size(), std::vector<double>(est.size()));
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < est.size(); ++j) cost[i][j] = std::abs(truth[i] - est[j]);
  const auto assign = detail::min_cost_assignment(cost);

  SpectrumComparison out;
  std::vector<char> used(est.size(), 0);
  double sum = 0.0, bias = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto j = static_cast<std::size_t>(assign[i]);
    used[j] = 1;
    const double err = cost[i][j];
    out.pairs.push_back({truth[i], est[j], err});
    sum += err;
    bias += std::abs(est[j]) - std::abs(truth[i]);
    out.max_error = std::max(out.max_error, err);
  }
  for (std::size_t j = 0; j < est.size(); ++j)
    if (!used[j]) out.unmatched_estimates.push_back(est[j]);
  out.mean_error = sum / static_cast<double>(truth.size());
  out.mean_modulus_bias = bias / static_cast<double>(truth.size());
  return out;
}

// --- configuration ----------------------------------------------------------------

struct DictionarySpec {
  std::string preset = "RotationTrig";
  int K = 5;
};

struct DualSpec {
  int shift = 1;
  std::vector<std::string> augment;  ///< transform names; empty = identity
  int extra_shifts = 0;
};

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::Standard;
  DmdOptions options;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  SystemSpec system = RandomRotation{};
  std::int64_t n_samples = 10000;
  std::optional<std::int64_t> burn_in;  ///< default per system
  int realizations = 5;
  DictionarySpec dictionary;
  NoiseKind noise_kind = NoiseKind::None;
  double noise_scale = 0.0;
  std::optional<EmbeddingPlan> embedding;
  std::optional<DualSpec> dual;
  AlgorithmSpec algorithm;
  std::optional<AlgorithmSpec> baseline;  ///< optional second algorithm on identical data
  std::vector<ModeIndex> truth;
  std::uint64_t seed = 1;

  std::int64_t effective_burn_in() const { return burn_in ? *burn_in : default_burn_in(system); }
};

inline bool is_sum_preset(const std::string& p) {
  return p == "RotationSum" || p == "LinearSum" || p == "StuartLandauExpSum";
}

inline ObservableDict make_dictionary(const DictionarySpec& d, const SystemSpec& system) {
  if (d.preset == "RotationTrig") return presets::rotation_trig(d.K);
  if (d.preset == "RotationSum") return presets::rotation_sum(d.K);
  if (d.preset == "LinearState") return presets::linear_state(state_dim(system));
  if (d.preset == "LinearSum") return presets::linear_sum(state_dim(system));
  if (d.preset == "StuartLandauExp") return presets::stuart_landau_exp_dict(d.K);
  if (d.preset == "StuartLandauExpSum") return presets::stuart_landau_exp_sum(d.K);
  fail(ErrorKind::Config, "unknown dictionary preset '" + d.preset + "'");
}

inline void validate(const ExperimentConfig& cfg) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, "config: " + what);
  };
  check(cfg.realizations >= 1, "realizations must be >= 1");
  check(cfg.n_samples >= 2, "n_samples must be >= 2");
  check(!cfg.burn_in || *cfg.burn_in >= 0, "burn_in must be >= 0");
  check(cfg.noise_scale >= 0.0, "noise scale must be >= 0");
  check(!cfg.truth.empty(), "truth mode set must be nonempty");
  check(cfg.embedding.has_value() == is_sum_preset(cfg.dictionary.preset),
        "an embedding is required exactly when the dictionary is a scalar sum preset");
  if (cfg.embedding) check(cfg.embedding->delays >= 1 && cfg.embedding->dual_shift >= 0, "invalid embedding plan");
  if (cfg.dual) {
    check(cfg.dual->shift >= 0 && cfg.dual->extra_shifts >= 0, "invalid dual spec");
    for (const auto& a : cfg.dual->augment) {
      try {
        transform_by_name(a);
      } catch (const Error& e) {
        check(false, e.what());
      }
    }
  }
  try {
    validate(cfg.system);
    cfg.algorithm.options.validate();
    if (cfg.baseline) cfg.baseline->options.validate();
    const auto dict = make_dictionary(cfg.dictionary, cfg.system);
    check(dict.state_dim == 0 || dict.state_dim == state_dim(cfg.system),
          "dictionary does not match the system state dimension");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
}

// JSON <-> config

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline AlgorithmSpec algorithm_from_json(const nlohmann::json& j) {
  AlgorithmSpec a;
  a.algorithm = parse_algorithm(j.at("name").get<std::string>());
  if (j.contains("rank") && !j["rank"].is_null()) a.options.rank = j["rank"].get<int>();
  if (j.contains("energy_fraction") && !j["energy_fraction"].is_null())
    a.options.energy_fraction = j["energy_fraction"].get<double>();
  if (j.contains("pinv_rtol") && !j["pinv_rtol"].is_null()) a.options.pinv_rtol = j["pinv_rtol"].get<double>();
  a.options.eig_cond_limit = get_or(j, "eig_cond_limit", a.options.eig_cond_limit);
  return a;
}

inline nlohmann::json algorithm_to_json(const AlgorithmSpec& a) {
  nlohmann::json j = {{"name", algorithm_tag(a.algorithm)}, {"eig_cond_limit", a.options.eig_cond_limit}};
  if (a.options.rank) j["rank"] = *a.options.rank;
  if (a.options.energy_fraction) j["energy_fraction"] = *a.options.energy_fraction;
  if (a.options.pinv_rtol) j["pinv_rtol"] = *a.options.pinv_rtol;
  return j;
}

inline SystemSpec system_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "RandomRotation") {
    RandomRotation s;
    s.nu = get_or(j, "nu", s.nu);
    s.dyn_noise_halfwidth = get_or(j, "dyn_noise_halfwidth", s.dyn_noise_halfwidth);
    if (j.contains("initial_angle")) s.initial_angle = j["initial_angle"].get<double>();
    return s;
  }
  if (type == "NoisyLinear") {
    NoisyLinear s;
    if (j.contains("A")) {
      const auto rows = j["A"].get<std::vector<std::vector<double>>>();
      if (rows.empty()) fail(ErrorKind::Config, "config: NoisyLinear.A is empty");
      s.A.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) fail(ErrorKind::Config, "config: NoisyLinear.A is ragged");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          s.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    s.forcing_halfwidth = get_or(j, "forcing_halfwidth", s.forcing_halfwidth);
    if (j.contains("initial_state")) {
      const auto v = j["initial_state"].get<std::vector<double>>();
      s.initial_state = Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return s;
  }
  if (type == "StuartLandau") {
    StuartLandau s;
    s.gamma = get_or(j, "gamma", s.gamma);
    s.beta = get_or(j, "beta", s.beta);
    s.delta = get_or(j, "delta", s.delta);
    s.epsilon = get_or(j, "epsilon", s.epsilon);
    s.dt = get_or(j, "dt", s.dt);
    s.substeps = get_or(j, "substeps", s.substeps);
    s.safety_radius = get_or(j, "safety_radius", s.safety_radius);
    if (j.contains("initial_state")) {
      const auto v = j["initial_state"].get<std::vector<double>>();
      s.initial_state = Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return s;
  }
  fail(ErrorKind::Config, "config: unknown system type '" + type + "'");
}

inline nlohmann::json system_to_json(const SystemSpec& spec) {
  nlohmann::json j;
  j["type"] = system_name(spec);
  if (const auto* s = std::get_if<RandomRotation>(&spec)) {
    j["nu"] = s->nu;
    j["dyn_noise_halfwidth"] = s->dyn_noise_halfwidth;
    if (s->initial_angle) j["initial_angle"] = *s->initial_angle;
  } else if (const auto* s = std::get_if<NoisyLinear>(&spec)) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(s->A.rows()));
    for (Eigen::Index r = 0; r < s->A.rows(); ++r)
      for (Eigen::Index c = 0; c < s->A.cols(); ++c) rows[static_cast<std::size_t>(r)].push_back(s->A(r, c));
    j["A"] = rows;
    j["forcing_halfwidth"] = s->forcing_halfwidth;
    if (s->initial_state) j["initial_state"] = std::vector<double>(s->initial_state->begin(), s->initial_state->end());
  } else {
    const auto& sl = std::get<StuartLandau>(spec);
    j["gamma"] = sl.gamma;
    j["beta"] = sl.beta;
    j["delta"] = sl.delta;
    j["epsilon"] = sl.epsilon;
    j["dt"] = sl.dt;
    j["substeps"] = sl.substeps;
    j["safety_radius"] = sl.safety_radius;
    if (sl.initial_state)
      j["initial_state"] = std::vector<double>(sl.initial_state->begin(), sl.initial_state->end());
  }
  return j;
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "None") return NoiseKind::None;
  if (s == "UniformReal") return NoiseKind::UniformReal;
  if (s == "GaussianReal") return NoiseKind::GaussianReal;
  if (s == "ComplexGaussian") return NoiseKind::ComplexGaussian;
  fail(ErrorKind::Config, "config: unknown noise kind '" + s + "'");
}

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "None";
    case NoiseKind::UniformReal: return "UniformReal";
    case NoiseKind::GaussianReal: return "GaussianReal";
    case NoiseKind::ComplexGaussian: return "ComplexGaussian";
  }
  return "None";
}

inline std::vector<ModeIndex> truth_from_json(const nlohmann::json& j, const SystemSpec& system) {
  if (j.contains("symmetric")) return symmetric_modes(j["symmetric"].get<int>(), get_or(j, "l", 0));
  if (get_or(j, "all", false)) return all_linear_modes(state_dim(system));
  std::vector<ModeIndex> out;
  for (const auto& m : j.at("modes")) {
    if (m.is_array()) out.push_back({m.at(0).get<int>(), m.at(1).get<int>()});
    else out.push_back({0, m.get<int>()});
  }
  return out;
}

}  // namespace detail

/// Parse a configuration document. Schema: see README ("Experiment configs").
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.name = detail::get_or<std::string>(j, "name", "");
    cfg.description = detail::get_or<std::string>(j, "description", "");
    cfg.system = detail::system_from_json(j.at("system"));
    cfg.n_samples = j.at("n_samples").get<std::int64_t>();
    if (j.contains("burn_in") && !j["burn_in"].is_null()) cfg.burn_in = j["burn_in"].get<std::int64_t>();
    cfg.realizations = detail::get_or(j, "realizations", 5);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    const auto& d = j.at("dictionary");
    cfg.dictionary.preset = d.at("preset").get<std::string>();
    cfg.dictionary.K = detail::get_or(d, "K", cfg.dictionary.preset == "StuartLandauExp" ||
                                                      cfg.dictionary.preset == "StuartLandauExpSum"
                                                  ? 6
                                                  : (cfg.dictionary.preset == "RotationSum" ? 3 : 5));
    if (j.contains("noise")) {
      cfg.noise_kind = detail::noise_kind_from_string(detail::get_or<std::string>(j["noise"], "kind", "None"));
      cfg.noise_scale = detail::get_or(j["noise"], "scale", 0.0);
    }
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      cfg.embedding = EmbeddingPlan{j["embedding"].at("delays").get<int>(),
                                    detail::get_or(j["embedding"], "dual_shift", 0)};
    }
    if (j.contains("dual") && !j["dual"].is_null()) {
      DualSpec ds;
      ds.shift = detail::get_or(j["dual"], "shift", 1);
      ds.augment = detail::get_or(j["dual"], "augment", std::vector<std::string>{});
      ds.extra_shifts = detail::get_or(j["dual"], "extra_shifts", 0);
      cfg.dual = ds;
    }
    cfg.algorithm = detail::algorithm_from_json(j.at("algorithm"));
    if (j.contains("baseline") && !j["baseline"].is_null()) cfg.baseline = detail::algorithm_from_json(j["baseline"]);
    cfg.truth = detail::truth_from_json(j.at("truth"), cfg.system);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["description"] = cfg.description;
  j["system"] = detail::system_to_json(cfg.system);
  j["n_samples"] = cfg.n_samples;
  if (cfg.burn_in) j["burn_in"] = *cfg.burn_in;
  j["realizations"] = cfg.realizations;
  j["seed"] = cfg.seed;
  j["dictionary"] = {{"preset", cfg.dictionary.preset}, {"K", cfg.dictionary.K}};
  j["noise"] = {{"kind", detail::to_string(cfg.noise_kind)}, {"scale", cfg.noise_scale}};
  if (cfg.embedding) j["embedding"] = {{"delays", cfg.embedding->delays}, {"dual_shift", cfg.embedding->dual_shift}};
  if (cfg.dual)
    j["dual"] = {{"shift", cfg.dual->shift}, {"augment", cfg.dual->augment}, {"extra_shifts", cfg.dual->extra_shifts}};
  j["algorithm"] = detail::algorithm_to_json(cfg.algorithm);
  if (cfg.baseline) j["baseline"] = detail::algorithm_to_json(*cfg.baseline);
  auto modes = nlohmann::json::array();
  for (const auto& m : cfg.truth) modes.push_back({m.l, m.n});
  j["truth"] = {{"modes", modes}};
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Config, "cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

inline std::string config_digest(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(text)));
  return buf;
}

// --- running ----------------------------------------------------------------------

/// Seed of realization r; the dynamics and measurement streams are split from it by name.
inline std::uint64_t realization_seed(std::uint64_t base, int r) {
  return derive_seed(base, static_cast<std::uint64_t>(r));
}

struct DmdSummary {
  Algorithm algorithm = Algorithm::Standard;
  std::vector<cplx> eigenvalues;  ///< discrete-time, deterministic order
  std::vector<cplx> compared;     ///< values matched against truth (continuous if the truth is)
  std::vector<double> singular_values;
  Eigen::Index rank = 0;
  double eig_condition = 1.0;
  std::int64_t snapshot_count = 0;
  SpectrumComparison comparison;
};

struct RealizationReport {
  int index = 0;
  std::uint64_t seed = 0;
  DmdSummary primary;
  std::optional<DmdSummary> baseline;
};

struct Aggregate {
  double mean_error = 0.0;  ///< mean over realizations of mean_error
  double worst_max_error = 0.0;
  double mean_modulus_bias = 0.0;
};

struct RunReport {
  std::string name;
  std::string config_digest;
  nlohmann::json config;
  std::vector<cplx> truth;
  bool continuous_time = false;
  std::vector<RealizationReport> realizations;
  Aggregate primary;
  std::optional<Aggregate> baseline;
  double wall_time_seconds = 0.0;
};

namespace detail {

/// Run one algorithm on the observable series F according to the config's
/// embedding and dual settings.
inline DmdResult decompose(const ExperimentConfig& cfg, const AlgorithmSpec& spec, const SeriesMatrix& f) {
  const Algorithm alg = spec.algorithm;
  const DmdOptions& opts = spec.options;
  std::vector<NamedTransform> augment;
  if (cfg.dual)
    for (const auto& a : cfg.dual->augment) augment.push_back(transform_by_name(a));

  if (cfg.embedding) {
    const EmbeddingPlan plan = *cfg.embedding;
    if (needs_dual(alg) && cfg.dual) {
      auto e = hankel_embed(f, {plan.delays, 0});
      SeriesMatrix z = build_dual(f, cfg.dual->shift, augment, cfg.dual->extra_shifts);
      align(e.X, e.Y, &z);
      return run_dmd(alg, e.X, e.Y, &z, opts);
    }
    if (needs_dual(alg)) {
      // Structured route: moments straight from the series, no explicit Hankel matrices.
      const CrossMoments g = hankel_cross_moments(f, plan);
      DmdResult r = alg == Algorithm::NoiseResistant ? dmd_noise_resistant(g, opts) : dmd_noise_resistant_svd(g, opts);
      r.eigenfunction_samples = hankel_project(f, plan, r.eigenfunction_weights);
      return r;
    }
    if (alg == Algorithm::Svd) {
      const EmbeddingPlan gram_plan{plan.delays, 0};
      DmdResult r = dmd_svd_from_gram(hankel_cross_moments(f, gram_plan), opts);
      r.eigenfunction_samples = hankel_project(f, gram_plan, r.eigenfunction_weights);
      return r;
    }
    const auto e = hankel_embed(f, plan);
    return run_dmd(alg, e.X, e.Y, nullptr, opts);
  }

  auto e = hankel_embed(f, {1, 0});
  if (needs_dual(alg)) {
    const DualSpec ds = cfg.dual ? *cfg.dual : DualSpec{};
    SeriesMatrix z = build_dual(f, ds.shift, augment, ds.extra_shifts);
    align(e.X, e.Y, &z);
    return run_dmd(alg, e.X, e.Y, &z, opts);
  }
  return run_dmd(alg, e.X, e.Y, nullptr, opts);
}

inline DmdSummary summarize(const DmdResult& r, const TrueSpectrum& truth, double dt) {
  DmdSummary s;
  s.algorithm = r.algorithm;
  s.eigenvalues.assign(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  s.singular_values = r.singular_values;
  s.rank = r.rank;
  s.eig_condition = r.eig_condition;
  s.snapshot_count = r.snapshot_count;
  s.compared = truth.time_scale == TimeScale::ContinuousRate ? to_continuous_spectrum(r, dt).values : s.eigenvalues;
  s.comparison = match_spectra(truth.eigenvalues, s.compared);
  return s;
}

inline Aggregate aggregate(const std::vector<const SpectrumComparison*>& parts) {
  Aggregate a;
  for (const auto* c : parts) {
    a.mean_error += c->mean_error;
    a.mean_modulus_bias += c->mean_modulus_bias;
    a.worst_max_error = std::max(a.worst_max_error, c->max_error);
  }
  a.mean_error /= static_cast<double>(parts.size());
  a.mean_modulus_bias /= static_cast<double>(parts.size());
  return a;
}

}  // namespace detail

inline RealizationReport run_realization(const ExperimentConfig& cfg, int r) {
  RealizationReport rep;
  rep.index = r;
  rep.seed = realization_seed(cfg.seed, r);
  const Trajectory traj = simulate(cfg.system, cfg.n_samples, rep.seed, cfg.effective_burn_in());
  NoiseSpec noise{cfg.noise_kind, cfg.noise_scale, rep.seed};
  const SeriesMatrix f = evaluate(make_dictionary(cfg.dictionary, cfg.system), traj, noise);
  const TrueSpectrum truth = true_spectrum(cfg.system, cfg.truth);
  rep.primary = detail::summarize(detail::decompose(cfg, cfg.algorithm, f), truth, traj.dt);
  if (cfg.baseline) rep.baseline = detail::summarize(detail::decompose(cfg, *cfg.baseline, f), truth, traj.dt);
  return rep;
}

/// Runs every realization (up to `jobs` at once). Results are keyed by
/// realization index, so the report does not depend on scheduling.
inline RunReport run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.name = cfg.name;
  report.config = config_to_json(cfg);
  report.config_digest = config_digest(cfg);
  const TrueSpectrum truth = true_spectrum(cfg.system, cfg.truth);
  report.truth = truth.eigenvalues;
  report.continuous_time = truth.time_scale == TimeScale::ContinuousRate;

  const int n = cfg.realizations;
  report.realizations.resize(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < n; r = next++) {
      try {
        report.realizations[static_cast<std::size_t>(r)] = run_realization(cfg, r);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int r = 0; r < n; ++r) {
    if (!errors[static_cast<std::size_t>(r)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(r)]);
    } catch (const Error& e) {
      throw Error(e.kind(), "realization " + std::to_string(r) + ": " + e.what());
    }
  }

  std::vector<const SpectrumComparison*> prim, base;
  for (const auto& rr : report.realizations) {
    prim.push_back(&rr.primary.comparison);
    if (rr.baseline) base.push_back(&rr.baseline->comparison);
  }
  report.primary = detail::aggregate(prim);
  if (!base.empty()) report.baseline = detail::aggregate(base);
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct SweepPoint {
  std::int64_t n_samples = 0;
  double mean_error = 0.0;
};

/// Error curve over increasing sample counts with a common base seed.
inline std::vector<SweepPoint> convergence_sweep(const ExperimentConfig& cfg,
                                                 const std::vector<std::int64_t>& sample_counts, int jobs = 1) {
  require(!sample_counts.empty(), "convergence_sweep: no sample counts");
  require(std::is_sorted(sample_counts.begin(), sample_counts.end()) &&
              std::adjacent_find(sample_counts.begin(), sample_counts.end()) == sample_counts.end(),
          "convergence_sweep: sample counts must be strictly ascending");
  std::vector<SweepPoint> out;
  for (const auto n : sample_counts) {
    ExperimentConfig c = cfg;
    c.n_samples = n;
    out.push_back({n, run_experiment(c, jobs).primary.mean_error});
  }
  return out;
}

// --- report output -----------------------------------------------------------------

inline nlohmann::json complex_json(const std::vector<cplx>& v) {
  auto arr = nlohmann::json::array();
  for (const auto& z : v) arr.push_back({z.real(), z.imag()});
  return arr;
}

inline nlohmann::json to_json(const SpectrumComparison& c) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : c.pairs)
    pairs.push_back({{"truth", {p.truth.real(), p.truth.imag()}},
                     {"estimate", {p.estimate.real(), p.estimate.imag()}},
                     {"error", p.error}});
  return {{"pairs", pairs},
          {"unmatched_estimates", complex_json(c.unmatched_estimates)},
          {"mean_error", c.mean_error},
          {"max_error", c.max_error},
          {"mean_modulus_bias", c.mean_modulus_bias}};
}

inline nlohmann::json to_json(const DmdSummary& s) {
  return {{"algorithm", algorithm_tag(s.algorithm)},
          {"eigenvalues", complex_json(s.eigenvalues)},
          {"compared", complex_json(s.compared)},
          {"singular_values", s.singular_values},
          {"rank", s.rank},
          {"eig_condition", s.eig_condition},
          {"snapshot_count", s.snapshot_count},
          {"comparison", to_json(s.comparison)}};
}

inline nlohmann::json to_json(const Aggregate& a) {
  return {{"mean_error", a.mean_error},
          {"worst_max_error", a.worst_max_error},
          {"mean_modulus_bias", a.mean_modulus_bias}};
}

/// Report document; wall time is optional so reports can be compared byte-wise.
inline nlohmann::json to_json(const RunReport& r, bool include_wall_time = true) {
  nlohmann::json j;
  j["name"] = r.name;
  j["config_digest"] = r.config_digest;
  j["config"] = r.config;
  j["truth"] = complex_json(r.truth);
  j["time_scale"] = r.continuous_time ? "continuous" : "discrete";
  auto reals = nlohmann::json::array();
  for (const auto& rr : r.realizations) {
    nlohmann::json jr = {{"index", rr.index}, {"seed", rr.seed}, {"primary", to_json(rr.primary)}};
    if (rr.baseline) jr["baseline"] = to_json(*rr.baseline);
    reals.push_back(std::move(jr));
  }
  j["realizations"] = reals;
  j["aggregate"] = to_json(r.primary);
  if (r.baseline) j["baseline_aggregate"] = to_json(*r.baseline);
  if (include_wall_time) j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

inline void write_pairs_csv(std::ostream& os, const RunReport& r, bool baseline) {
  os << "realization,true_re,true_im,est_re,est_im,error\n";
  for (const auto& rr : r.realizations) {
    const DmdSummary* s = baseline ? (rr.baseline ? &*rr.baseline : nullptr) : &rr.primary;
    if (!s) continue;
    for (const auto& p : s->comparison.pairs) {
      os << rr.index << ',' << format_double(p.truth.real()) << ',' << format_double(p.truth.imag()) << ','
         << format_double(p.estimate.real()) << ',' << format_double(p.estimate.imag()) << ','
         << format_double(p.error) << '\n';
    }
  }
}

/// Writes report.json, pairs.csv and (with a baseline) baseline_pairs.csv.
inline void write_report(const std::filesystem::path& dir, const RunReport& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Format, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) fail(ErrorKind::Format, "cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("report.json");
    os << to_json(r).dump(2) << '\n';
  }
  {
    auto os = open("pairs.csv");
    write_pairs_csv(os, r, false);
  }
  if (r.baseline) {
    auto os = open("baseline_pairs.csv");
    write_pairs_csv(os, r, true);
  }
}

}  // namespace rdmd
