#pragma once

// Command-line front end. `run` is kept separate from main() so the test
// suite can drive it in-process with captured streams.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdmd/rdmd.hpp"

namespace rdmd::cli {

/// Stable exit codes; one per error class.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kInvalidArgument = 3,
  kRank = 4,
  kConditioning = 5,
  kNearDefective = 6,
  kIntegration = 7,
  kDomain = 8,
  kFormat = 9,
  kConfig = 10,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kInvalidArgument;
    case ErrorKind::Rank: return kRank;
    case ErrorKind::Conditioning: return kConditioning;
    case ErrorKind::NearDefective: return kNearDefective;
    case ErrorKind::Integration: return kIntegration;
    case ErrorKind::Domain: return kDomain;
    case ErrorKind::Format: return kFormat;
    case ErrorKind::Config: return kConfig;
  }
  return kInternal;
}

namespace detail {

/// Name of the pipeline stage currently executing, reported on failure.
struct Stage {
  std::string name = "argument handling";
  void operator()(std::string s) { name = std::move(s); }
};

inline std::string system_type(const std::string& flag) {
  if (flag == "rotation" || flag == "RandomRotation") return "RandomRotation";
  if (flag == "linear" || flag == "NoisyLinear") return "NoisyLinear";
  if (flag == "stuart-landau" || flag == "StuartLandau") return "StuartLandau";
  fail(ErrorKind::InvalidArgument, "unknown system '" + flag + "' (expected rotation, linear or stuart-landau)");
}

/// key=value with a number or a comma-separated list of numbers.
inline void apply_param(nlohmann::json& system, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::InvalidArgument, "--param expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const auto cells = rdmd::detail::split(kv.substr(eq + 1), ',');
  std::vector<double> values;
  try {
    for (const auto& c : cells) values.push_back(rdmd::detail::parse_double(c));
  } catch (const Error&) {
    fail(ErrorKind::InvalidArgument, "--param " + key + ": value is not numeric");
  }
  if (values.empty()) fail(ErrorKind::InvalidArgument, "--param " + key + ": missing value");
  if (key == "initial_state") {
    system[key] = values;
  } else if (values.size() == 1) {
    if (key == "substeps")
      system[key] = static_cast<int>(values[0]);
    else
      system[key] = values[0];
  } else {
    fail(ErrorKind::InvalidArgument, "--param " + key + ": expected a single number");
  }
}

inline const std::vector<std::string>& known_params(const std::string& type) {
  static const std::vector<std::string> rotation{"nu", "dyn_noise_halfwidth", "initial_angle"};
  static const std::vector<std::string> linear{"forcing_halfwidth", "initial_state"};
  static const std::vector<std::string> sl{"gamma", "beta",     "delta",         "epsilon",
                                           "dt",    "substeps", "safety_radius", "initial_state"};
  if (type == "RandomRotation") return rotation;
  if (type == "NoisyLinear") return linear;
  return sl;
}

inline ObservableDict dictionary_for(const std::string& preset, int k, Eigen::Index dim) {
  if (preset == "RotationTrig") return presets::rotation_trig(k);
  if (preset == "RotationSum") return presets::rotation_sum(k);
  if (preset == "LinearState") return presets::linear_state(dim);
  if (preset == "LinearSum") return presets::linear_sum(dim);
  if (preset == "StuartLandauExp") return presets::stuart_landau_exp_dict(k);
  if (preset == "StuartLandauExpSum") return presets::stuart_landau_exp_sum(k);
  fail(ErrorKind::InvalidArgument, "unknown dictionary '" + preset + "'");
}

inline NoiseKind noise_kind(const std::string& s) {
  if (s == "none" || s == "None") return NoiseKind::None;
  if (s == "uniform" || s == "UniformReal") return NoiseKind::UniformReal;
  if (s == "gaussian" || s == "GaussianReal") return NoiseKind::GaussianReal;
  if (s == "complex-gaussian" || s == "ComplexGaussian") return NoiseKind::ComplexGaussian;
  fail(ErrorKind::InvalidArgument, "unknown noise kind '" + s + "'");
}

/// A config path, the same path without ".json", or a preset name.
inline ExperimentConfig resolve_config(const std::string& ref) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(ref)) return load_config(ref);
  if (fs::is_regular_file(ref + ".json")) return load_config(ref + ".json");
  // Fall back to the built-in preset of that name (also for "presets/<name>").
  if (auto p = find_preset(fs::path(ref).filename().string())) return *p;
  fail(ErrorKind::Config, "no config file or preset named '" + ref + "'");
}

inline std::vector<cplx> complex_pairs_from_json(const nlohmann::json& arr, const std::string& what) {
  std::vector<cplx> out;
  if (!arr.is_array()) fail(ErrorKind::Format, what + ": expected an array of [re, im] pairs");
  for (const auto& e : arr) {
    if (e.is_number()) {
      out.emplace_back(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    } else {
      fail(ErrorKind::Format, what + ": entries must be numbers or [re, im] pairs");
    }
  }
  return out;
}

/// Spectrum file: a JSON array of [re, im], a JSON object with "eigenvalues"
/// (a dmd result) or "truth" (a report), or plain text with one "re,im" per line.
inline std::vector<cplx> read_spectrum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Format, "cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) fail(ErrorKind::Format, path + ": empty spectrum file");
  if (text[first] == '[' || text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, path + ": " + e.what());
    }
    if (j.is_object()) {
      if (j.contains("eigenvalues")) return complex_pairs_from_json(j["eigenvalues"], path);
      if (j.contains("truth")) return complex_pairs_from_json(j["truth"], path);
      fail(ErrorKind::Format, path + ": object has neither 'eigenvalues' nor 'truth'");
    }
    return complex_pairs_from_json(j, path);
  }
  std::vector<cplx> out;
  std::istringstream ls(text);
  std::string line;
  while (std::getline(ls, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = rdmd::detail::split(line, ',');
    if (cells.size() == 1)
      out.emplace_back(rdmd::detail::parse_double(cells[0]), 0.0);
    else if (cells.size() == 2)
      out.emplace_back(rdmd::detail::parse_double(cells[0]), rdmd::detail::parse_double(cells[1]));
    else
      fail(ErrorKind::Format, path + ": expected 're,im' per line, got '" + line + "'");
  }
  if (out.empty()) fail(ErrorKind::Format, path + ": no values");
  return out;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Format, "cannot open " + path + " for writing");
  os << text;
  if (!os) fail(ErrorKind::Format, "failed writing " + path);
}

inline std::string default_out_dir(const std::string& name) {
  const char* env = std::getenv("RDMD_OUT_DIR");
  const std::filesystem::path base = env && *env ? env : "rdmd-out";
  return (base / (name.empty() ? "experiment" : name)).string();
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dynamic mode decomposition for random dynamical systems", "rdmd"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a trajectory and write it as a columnar text file");
  std::string sim_system;
  std::int64_t sim_n = 0;
  std::uint64_t sim_seed = 1;
  std::optional<std::int64_t> sim_burn_in;
  std::vector<std::string> sim_params;
  std::string sim_out;
  sim->add_option("--system", sim_system, "rotation | linear | stuart-landau")->required();
  sim->add_option("--n", sim_n, "number of recorded samples")->required()->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  sim->add_option("--seed", sim_seed, "base seed");
  sim->add_option("--burn-in", sim_burn_in, "samples discarded before recording (default per system)");
  sim->add_option("--param", sim_params, "system parameter override key=value (repeatable)");
  sim->add_option("--out", sim_out, "output path ('-' or omitted: stdout)");

  // observe
  auto* obs = app.add_subcommand("observe", "evaluate an observable dictionary on a trajectory");
  std::string obs_in, obs_dict, obs_noise = "none", obs_out;
  int obs_k = 0;
  double obs_scale = 0.0;
  std::optional<std::uint64_t> obs_seed;
  obs->add_option("--in", obs_in, "trajectory file")->required();
  obs->add_option("--dictionary", obs_dict,
                  "RotationTrig | RotationSum | LinearState | LinearSum | StuartLandauExp | StuartLandauExpSum")
      ->required();
  obs->add_option("--K", obs_k, "dictionary order (default 5 for RotationTrig, 3 for RotationSum, 6 for Stuart-Landau)");
  obs->add_option("--noise", obs_noise, "none | uniform | gaussian | complex-gaussian");
  obs->add_option("--noise-scale", obs_scale, "half-width (uniform) or standard deviation")->check(CLI::NonNegativeNumber);
  obs->add_option("--seed", obs_seed, "noise seed (default: the trajectory seed)");
  obs->add_option("--out", obs_out, "output series path ('-' or omitted: stdout)");

  // dmd
  auto* dmd = app.add_subcommand("dmd", "run one decomposition on a stored series");
  std::string dmd_alg, dmd_in, dmd_dual, dmd_out;
  std::optional<int> dmd_dual_shift, dmd_rank;
  int dmd_delays = 1;
  std::optional<double> dmd_energy, dmd_rtol, dmd_dt;
  double dmd_cond = DmdOptions{}.eig_cond_limit;
  bool dmd_modes = false, dmd_eigfun = false;
  dmd->add_option("--algorithm", dmd_alg, "alg1 | alg2 | alg3 | alg4")->required();
  dmd->add_option("--in", dmd_in, "observable series file")->required();
  dmd->add_option("--dual", dmd_dual, "dual series file (alg3/alg4)");
  dmd->add_option("--dual-shift", dmd_dual_shift, "dual = the (delay-embedded) input lagged by this many samples (default 1)");
  dmd->add_option("--delays", dmd_delays, "delay-embedding depth k (rows per observable)")->check(CLI::PositiveNumber);
  dmd->add_option("--rank", dmd_rank, "truncation rank")->check(CLI::PositiveNumber);
  dmd->add_option("--energy", dmd_energy, "automatic rank by captured energy fraction in (0, 1]");
  dmd->add_option("--rtol", dmd_rtol, "relative pseudo-inverse tolerance");
  dmd->add_option("--cond-limit", dmd_cond, "largest admissible eigenvector condition number");
  dmd->add_option("--dt", dmd_dt, "sample spacing; adds the continuous-time spectrum")->check(CLI::PositiveNumber);
  dmd->add_flag("--modes", dmd_modes, "include the dynamic modes");
  dmd->add_flag("--eigenfunctions", dmd_eigfun, "include eigenfunction samples");
  dmd->add_option("--out", dmd_out, "result JSON path ('-' or omitted: stdout)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a preset or custom experiment");
  std::string exp_config, exp_out;
  int exp_jobs = 1;
  std::optional<int> exp_realizations;
  std::optional<std::int64_t> exp_n;
  std::optional<std::uint64_t> exp_seed;
  std::vector<std::int64_t> exp_sweep;
  exp->add_option("--config", exp_config, "config file, config path without .json, or preset name")->required();
  exp->add_option("--out", exp_out, "report directory (default $RDMD_OUT_DIR/<name>, else rdmd-out/<name>)");
  exp->add_option("--jobs", exp_jobs, "maximum concurrent realizations")->check(CLI::PositiveNumber);
  exp->add_option("--realizations", exp_realizations, "override the realization count")->check(CLI::PositiveNumber);
  exp->add_option("--n", exp_n, "override the sample count");
  exp->add_option("--seed", exp_seed, "override the base seed");
  exp->add_option("--sweep", exp_sweep, "sample counts for a convergence sweep (writes sweep.csv)")->delimiter(',');

  // compare
  auto* cmp = app.add_subcommand("compare", "match estimated eigenvalues against a reference spectrum");
  std::string cmp_truth, cmp_truth_config, cmp_est, cmp_out;
  std::optional<double> cmp_dt;
  auto* truth_opt = cmp->add_option("--truth", cmp_truth, "reference spectrum file");
  auto* truth_cfg_opt =
      cmp->add_option("--truth-config", cmp_truth_config, "take the reference spectrum from a config or preset");
  truth_opt->excludes(truth_cfg_opt);
  cmp->add_option("--estimates", cmp_est, "estimated spectrum file (dmd result JSON or 're,im' lines)")->required();
  cmp->add_option("--dt", cmp_dt, "convert discrete estimates to continuous time first")->check(CLI::PositiveNumber);
  cmp->add_option("--out", cmp_out, "comparison JSON path ('-' or omitted: stdout)");

  // presets
  auto* pre = app.add_subcommand("presets", "list the built-in experiment presets");
  std::string pre_write;
  pre->add_option("--write", pre_write, "write <name>.json for every preset into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  detail::Stage stage;
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (*sim) {
      stage("system configuration");
      nlohmann::json sys = {{"type", detail::system_type(sim_system)}};
      const auto& known = detail::known_params(sys["type"]);
      for (const auto& kv : sim_params) {
        detail::apply_param(sys, kv);
        const std::string key = kv.substr(0, kv.find('='));
        if (std::find(known.begin(), known.end(), key) == known.end())
          fail(ErrorKind::InvalidArgument, "unknown parameter '" + key + "' for " + sys["type"].get<std::string>());
      }
      SystemSpec spec;
      try {
        spec = rdmd::detail::system_from_json(sys);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidArgument, e.what());
      }
      stage("simulation");
      const Trajectory traj = simulate(spec, sim_n, sim_seed, sim_burn_in ? *sim_burn_in : default_burn_in(spec));
      stage("writing trajectory");
      std::ostringstream os;
      write_trajectory(os, traj);
      detail::emit(sim_out, os.str(), out);
      return kOk;
    }

    if (*obs) {
      stage("reading trajectory");
      const Trajectory traj = read_trajectory(obs_in);
      stage("observable evaluation");
      int k = obs_k;
      if (k == 0) k = obs_dict == "RotationTrig" ? 5 : obs_dict == "RotationSum" ? 3 : 6;
      const ObservableDict dict = detail::dictionary_for(obs_dict, k, traj.dim());
      const NoiseSpec noise{detail::noise_kind(obs_noise), obs_scale, obs_seed ? *obs_seed : traj.seed};
      const SeriesMatrix f = evaluate(dict, traj, noise);
      stage("writing series");
      std::ostringstream os;
      write_series(os, f);
      detail::emit(obs_out, os.str(), out);
      return kOk;
    }

    if (*dmd) {
      stage("options");
      const Algorithm alg = parse_algorithm(dmd_alg);
      DmdOptions opts;
      opts.rank = dmd_rank;
      opts.energy_fraction = dmd_energy;
      opts.pinv_rtol = dmd_rtol;
      opts.eig_cond_limit = dmd_cond;
      opts.validate();
      if (!needs_dual(alg) && (!dmd_dual.empty() || dmd_dual_shift))
        fail(ErrorKind::InvalidArgument, std::string(algorithm_tag(alg)) + " takes no dual");
      if (!dmd_dual.empty() && dmd_dual_shift)
        fail(ErrorKind::InvalidArgument, "--dual and --dual-shift are mutually exclusive");

      stage("reading series");
      const SeriesMatrix f = read_series(dmd_in);
      std::optional<SeriesMatrix> z;
      if (!dmd_dual.empty()) {
        stage("reading dual");
        z = read_series(dmd_dual);
      }

      stage("embedding");
      // Without an explicit dual, the dual is the Hankel matrix lagged by the dual shift.
      const bool lagged = needs_dual(alg) && !z;
      auto e = hankel_embed(f, {dmd_delays, lagged ? dmd_dual_shift.value_or(1) : 0});
      if (lagged) z = e.Z;
      if (z) align(e.X, e.Y, &*z);

      stage(std::string("decomposition (") + algorithm_tag(alg) + ")");
      const DmdResult r = run_dmd(alg, e.X, e.Y, z ? &*z : nullptr, opts);

      stage("writing result");
      nlohmann::json j = to_json(r, opts, dmd_modes, dmd_eigfun);
      j["input"] = {{"series", dmd_in}, {"label", f.label}, {"delays", dmd_delays}};
      if (!dmd_dual.empty())
        j["input"]["dual"] = dmd_dual;
      else if (needs_dual(alg))
        j["input"]["dual_shift"] = dmd_dual_shift.value_or(1);
      if (dmd_dt) {
        const auto cs = to_continuous_spectrum(r, *dmd_dt);
        j["dt"] = *dmd_dt;
        j["continuous_eigenvalues"] = complex_json(cs.values);
        j["possibly_aliased"] = cs.possibly_aliased;
      }
      detail::emit(dmd_out, j.dump(2) + "\n", out);
      return kOk;
    }

    if (*exp) {
      stage("configuration");
      ExperimentConfig cfg = detail::resolve_config(exp_config);
      if (exp_realizations) cfg.realizations = *exp_realizations;
      if (exp_n) cfg.n_samples = *exp_n;
      if (exp_seed) cfg.seed = *exp_seed;
      validate(cfg);
      const std::string dir = exp_out.empty() ? detail::default_out_dir(cfg.name) : exp_out;

      stage("experiment " + (cfg.name.empty() ? std::string("(unnamed)") : cfg.name));
      const RunReport report = run_experiment(cfg, exp_jobs);
      std::vector<SweepPoint> sweep;
      if (!exp_sweep.empty()) {
        stage("convergence sweep");
        sweep = convergence_sweep(cfg, exp_sweep, exp_jobs);
      }

      stage("writing report");
      write_report(dir, report);
      if (!sweep.empty()) {
        std::ostringstream os;
        os << "n_samples,mean_error\n";
        for (const auto& p : sweep) os << p.n_samples << ',' << format_double(p.mean_error) << '\n';
        detail::emit((std::filesystem::path(dir) / "sweep.csv").string(), os.str(), out);
      }
      out << report.name << ": " << algorithm_tag(cfg.algorithm.algorithm)
          << " mean error " << format_double(report.primary.mean_error) << ", worst max error "
          << format_double(report.primary.worst_max_error);
      if (report.baseline)
        out << "; baseline " << algorithm_tag(cfg.baseline->algorithm) << " mean error "
            << format_double(report.baseline->mean_error);
      out << "\nreport written to " << dir << '\n';
      return kOk;
    }

    if (*cmp) {
      stage("reading truth");
      std::vector<cplx> truth;
      if (!cmp_truth_config.empty()) {
        const ExperimentConfig cfg = detail::resolve_config(cmp_truth_config);
        truth = true_spectrum(cfg.system, cfg.truth).eigenvalues;
      } else if (!cmp_truth.empty()) {
        truth = detail::read_spectrum(cmp_truth);
      } else {
        fail(ErrorKind::InvalidArgument, "one of --truth or --truth-config is required");
      }
      stage("reading estimates");
      std::vector<cplx> est = detail::read_spectrum(cmp_est);
      if (cmp_dt) {
        CVector v(static_cast<Eigen::Index>(est.size()));
        for (std::size_t i = 0; i < est.size(); ++i) v[static_cast<Eigen::Index>(i)] = est[i];
        est = to_continuous_spectrum(v, *cmp_dt).values;
      }
      stage("matching");
      const SpectrumComparison c = match_spectra(truth, est);
      detail::emit(cmp_out, to_json(c).dump(2) + "\n", out);
      return kOk;
    }

    if (*pre) {
      stage("presets");
      const auto all = experiment_presets();
      for (const auto& p : all) out << p.name << "  " << p.description << '\n';
      if (!pre_write.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(pre_write, ec);
        if (ec) fail(ErrorKind::Format, "cannot create " + pre_write + ": " + ec.message());
        for (const auto& p : all)
          detail::emit((std::filesystem::path(pre_write) / (p.name + ".json")).string(), p.document.dump(2) + "\n",
                       out);
      }
      return kOk;
    }
  } catch (const Error& e) {
    err << "rdmd " << sub << ": " << stage.name << " failed [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "rdmd " << sub << ": " << stage.name << " failed [format]: " << e.what() << '\n';
    return kFormat;
  } catch (const std::exception& e) {
    err << "rdmd " << sub << ": " << stage.name << " failed [internal]: " << e.what() << '\n';
    return kInternal;
  }
  err << "rdmd: no subcommand\n";
  return kUsage;
}

}  // namespace rdmd::cli
