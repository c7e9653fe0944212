#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "rdmd/rdmd.hpp"

using namespace rdmd;

namespace {

/// Exhaustive oracle: minimum total |truth_i - est_sigma(i)| over all injections.
double brute_force_min(const std::vector<cplx>& truth, const std::vector<cplx>& est) {
  std::vector<int> idx(est.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(truth[i] - est[static_cast<std::size_t>(idx[i])]);
    best = std::min(best, total);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

ExperimentConfig base_config(const std::string& preset) {
  auto cfg = find_preset(preset);
  EXPECT_TRUE(cfg.has_value()) << preset;
  return *cfg;
}

ExperimentConfig deterministic_linear(std::int64_t n) {
  ExperimentConfig cfg;
  cfg.name = "deterministic-linear";
  NoisyLinear sys;
  sys.forcing_halfwidth = 0.0;
  sys.initial_state = RVector(4);
  *sys.initial_state << 1.0, -1.0, 0.5, 2.0;
  cfg.system = sys;
  cfg.n_samples = n;
  cfg.burn_in = 0;
  cfg.realizations = 1;
  cfg.dictionary = {"LinearState", 0};
  cfg.algorithm = {Algorithm::Standard, {}};
  cfg.truth = all_linear_modes(4);
  return cfg;
}

}  // namespace

// --- matching ---------------------------------------------------------------------------

TEST(MatchSpectra, Permutation) {
  const auto c = match_spectra({cplx(1), cplx(0, 1)}, {cplx(0, 1), cplx(1)});
  ASSERT_EQ(c.pairs.size(), 2u);
  EXPECT_EQ(c.pairs[0].error, 0.0);
  EXPECT_EQ(c.pairs[1].error, 0.0);
  EXPECT_EQ(c.pairs[0].estimate, cplx(1));
  EXPECT_TRUE(c.unmatched_estimates.empty());
}

TEST(MatchSpectra, NearestWithLeftover) {
  const auto c = match_spectra({cplx(1)}, {cplx(0.9), cplx(2)});
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].estimate, cplx(0.9));
  EXPECT_NEAR(c.pairs[0].error, 0.1, 1e-15);
  ASSERT_EQ(c.unmatched_estimates.size(), 1u);
  EXPECT_EQ(c.unmatched_estimates[0], cplx(2));
}

TEST(MatchSpectra, OptimalAgainstExhaustiveSearch) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> size(1, 6), extra(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const int nt = size(gen);
    const int ne = nt + extra(gen);
    std::vector<cplx> truth(nt), est(ne);
    for (auto& z : truth) z = {nd(gen), nd(gen)};
    for (auto& z : est) z = {nd(gen), nd(gen)};
    if (trial % 5 == 0) est[0] = est.back();  // duplicated estimates exercise ties
    const auto c = match_spectra(truth, est);
    double total = 0.0;
    for (const auto& p : c.pairs) total += p.error;
    EXPECT_NEAR(total, brute_force_min(truth, est), 1e-12) << "trial " << trial;
    // Injective, and every estimate is either matched or reported unmatched.
    EXPECT_EQ(c.pairs.size() + c.unmatched_estimates.size(), est.size());
    EXPECT_NEAR(c.mean_error, total / nt, 1e-15);
  }
}

TEST(MatchSpectra, ResultIndependentOfEstimateOrder) {
  std::vector<cplx> truth{cplx(0.0)}, est{cplx(1.0), cplx(-1.0), cplx(0, 1), cplx(0, -1)};
  const auto first = match_spectra(truth, est);
  std::sort(est.begin(), est.end(), [](cplx a, cplx b) { return a.imag() > b.imag(); });
  const auto second = match_spectra(truth, est);
  EXPECT_EQ(first.pairs[0].estimate, second.pairs[0].estimate);
  EXPECT_EQ(first.unmatched_estimates, second.unmatched_estimates);
}

TEST(MatchSpectra, StatisticsAndErrors) {
  const auto c = match_spectra({cplx(1), cplx(2)}, {cplx(1.5), cplx(2.25)});
  EXPECT_NEAR(c.mean_error, 0.375, 1e-15);
  EXPECT_NEAR(c.max_error, 0.5, 1e-15);
  EXPECT_NEAR(c.mean_modulus_bias, 0.375, 1e-15);
  EXPECT_THROW(match_spectra({}, {cplx(1)}), Error);
  EXPECT_THROW(match_spectra({cplx(1), cplx(2)}, {cplx(1)}), Error);
}

// --- configs ----------------------------------------------------------------------------

TEST(Config, PresetsCoverTheExperiments) {
  std::vector<std::string> names;
  for (const auto& p : experiment_presets()) names.push_back(p.name);
  for (const char* expected : {"rotation-measnoise", "rotation-hankel", "linear-measnoise", "linear-hankel",
                               "sl-measnoise", "sl-hankel"})
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  for (const auto& p : experiment_presets()) {
    const ExperimentConfig cfg = config_from_json(p.document);
    EXPECT_EQ(cfg.name, p.name);
    EXPECT_EQ(cfg.realizations, 5);
    EXPECT_NO_THROW(validate(cfg));
  }
}

TEST(Config, JsonRoundTrip) {
  for (const auto& p : experiment_presets()) {
    const ExperimentConfig cfg = config_from_json(p.document);
    const auto j = config_to_json(cfg);
    EXPECT_EQ(config_to_json(config_from_json(j)), j) << p.name;
    EXPECT_EQ(config_digest(config_from_json(j)), config_digest(cfg));
  }
}

TEST(Config, DigestsDiffer) {
  auto a = base_config("rotation-measnoise"), b = a;
  b.seed += 1;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Config, InvalidConfigsAreConfigErrors) {
  const auto good = experiment_presets().front().document;
  auto expect_config_error = [](nlohmann::json j, const char* what) {
    try {
      config_from_json(j);
      ADD_FAILURE() << "accepted: " << what;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << what;
    }
  };
  auto j = good;
  j["realizations"] = 0;
  expect_config_error(j, "zero realizations");
  j = good;
  j["dictionary"]["preset"] = "Nope";
  expect_config_error(j, "unknown dictionary");
  j = good;
  j["system"]["type"] = "Lorenz";
  expect_config_error(j, "unknown system");
  j = good;
  j["dictionary"] = {{"preset", "RotationSum"}};
  expect_config_error(j, "sum preset without embedding");
  j = good;
  j["embedding"] = {{"delays", 4}, {"dual_shift", 1}};
  expect_config_error(j, "embedding without sum preset");
  j = good;
  j["algorithm"] = {{"name", "alg9"}};
  expect_config_error(j, "unknown algorithm");
  j = good;
  j.erase("n_samples");
  expect_config_error(j, "missing n_samples");
  j = good;
  j["dual"]["augment"] = {"sqrt"};
  expect_config_error(j, "unknown transform");
  j = good;
  j["dictionary"] = {{"preset", "StuartLandauExp"}};
  expect_config_error(j, "dictionary dimension mismatch");
  j = good;
  j["truth"] = {{"modes", nlohmann::json::array()}};
  expect_config_error(j, "empty truth");
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "rdmd_test_config.json";
  {
    std::ofstream os(path);
    os << experiment_presets().front().document.dump(2);
  }
  EXPECT_EQ(config_digest(load_config(path.string())), config_digest(base_config("rotation-measnoise")));
  {
    std::ofstream os(path);
    os << "{ not json";
  }
  try {
    load_config(path.string());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  std::filesystem::remove(path);
}

// --- runs -------------------------------------------------------------------------------

TEST(RunExperiment, RotationWithoutMeasurementNoise) {
  auto cfg = base_config("rotation-measnoise");
  cfg.noise_kind = NoiseKind::None;
  cfg.noise_scale = 0.0;
  cfg.algorithm = {Algorithm::Standard, {}};
  cfg.baseline.reset();
  const RunReport r = run_experiment(cfg);
  ASSERT_EQ(r.realizations.size(), 5u);
  for (const auto& rr : r.realizations) EXPECT_LE(rr.primary.comparison.mean_error, 0.02) << rr.index;
}

TEST(RunExperiment, OneRealizationEqualsTheFirstOfFive) {
  auto cfg = base_config("rotation-measnoise");
  cfg.n_samples = 2000;
  const RunReport five = run_experiment(cfg);
  cfg.realizations = 1;
  const RunReport one = run_experiment(cfg);
  ASSERT_EQ(one.realizations.size(), 1u);
  EXPECT_EQ(to_json(one.realizations[0].primary), to_json(five.realizations[0].primary));
  EXPECT_EQ(to_json(*one.realizations[0].baseline), to_json(*five.realizations[0].baseline));
  EXPECT_EQ(one.realizations[0].seed, five.realizations[0].seed);
}

TEST(RunExperiment, ReproducibleAndIndependentOfConcurrency) {
  auto cfg = base_config("linear-measnoise");
  cfg.n_samples = 1000;
  const auto a = to_json(run_experiment(cfg, 1), false);
  const auto b = to_json(run_experiment(cfg, 1), false);
  const auto c = to_json(run_experiment(cfg, 4), false);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(RunExperiment, AggregatesRecomputableFromParts) {
  auto cfg = base_config("rotation-measnoise");
  cfg.n_samples = 2000;
  const RunReport r = run_experiment(cfg);
  double mean = 0.0, worst = 0.0, bias = 0.0;
  for (const auto& rr : r.realizations) {
    mean += rr.primary.comparison.mean_error;
    worst = std::max(worst, rr.primary.comparison.max_error);
    bias += rr.primary.comparison.mean_modulus_bias;
    EXPECT_EQ(rr.primary.comparison.pairs.size(), 10u);
    EXPECT_EQ(rr.primary.algorithm, Algorithm::NoiseResistant);
    EXPECT_EQ(rr.baseline->algorithm, Algorithm::Standard);
  }
  EXPECT_NEAR(r.primary.mean_error, mean / 5, 1e-15);
  EXPECT_EQ(r.primary.worst_max_error, worst);
  EXPECT_NEAR(r.primary.mean_modulus_bias, bias / 5, 1e-15);
  EXPECT_EQ(r.config_digest, config_digest(cfg));
}

TEST(RunExperiment, DeterministicLinearIsExactForAnyLength) {
  for (std::int64_t n : {8, 20, 200, 2000}) {
    const RunReport r = run_experiment(deterministic_linear(n));
    EXPECT_LE(r.primary.worst_max_error, 1e-8) << "n = " << n;
  }
  const auto sweep = convergence_sweep(deterministic_linear(8), {8, 50, 500});
  for (const auto& p : sweep) EXPECT_LE(p.mean_error, 1e-8);
}

TEST(RunExperiment, StructuredAndExplicitHankelRoutesAgree) {
  auto structured = base_config("rotation-hankel");
  structured.n_samples = 3000;
  structured.realizations = 1;
  structured.baseline.reset();
  auto explicit_dual = structured;
  // A dual of shift s - k + 1 with k - 1 extra shifts is the Hankel dual f(t-s .. t-s+k-1).
  explicit_dual.dual = DualSpec{1, {}, 23};
  const auto a = run_experiment(structured).realizations[0].primary.eigenvalues;
  const auto b = run_experiment(explicit_dual).realizations[0].primary.eigenvalues;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-8);
}

TEST(RunExperiment, GramAndMaterializedAlgorithmTwoAgree) {
  auto cfg = base_config("rotation-hankel");
  cfg.n_samples = 3000;
  cfg.realizations = 1;
  cfg.algorithm = {Algorithm::Svd, {}};
  cfg.algorithm.options.rank = 6;
  cfg.baseline.reset();
  const auto gram = run_experiment(cfg).realizations[0].primary.eigenvalues;
  const Trajectory t = simulate(cfg.system, cfg.n_samples, realization_seed(cfg.seed, 0), cfg.effective_burn_in());
  const SeriesMatrix f = evaluate(make_dictionary(cfg.dictionary, cfg.system), t,
                                  NoiseSpec{cfg.noise_kind, cfg.noise_scale, realization_seed(cfg.seed, 0)});
  const auto e = hankel_embed(f, {cfg.embedding->delays, 0});
  const DmdResult direct = dmd_svd(e.X.values, e.Y.values, cfg.algorithm.options);
  for (std::size_t i = 0; i < gram.size(); ++i) EXPECT_LT(std::abs(gram[i] - direct.eigenvalues[static_cast<Eigen::Index>(i)]), 1e-8);
}

TEST(RunExperiment, ContinuousTimeComparisonForStuartLandau) {
  auto cfg = base_config("sl-measnoise");
  cfg.n_samples = 5000;
  cfg.realizations = 1;
  cfg.baseline.reset();
  const RunReport r = run_experiment(cfg);
  EXPECT_TRUE(r.continuous_time);
  const auto& s = r.realizations[0].primary;
  ASSERT_EQ(s.compared.size(), s.eigenvalues.size());
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    EXPECT_LT(std::abs(s.compared[i] - std::log(s.eigenvalues[i]) / 0.05), 1e-12);
}

TEST(RunExperiment, ErrorsNameTheRealization) {
  auto cfg = base_config("rotation-measnoise");
  cfg.n_samples = 500;
  cfg.algorithm = {Algorithm::Svd, {}};
  cfg.algorithm.options.rank = 99;
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Rank);
    EXPECT_EQ(std::string(e.what()).rfind("realization 0: ", 0), 0u) << e.what();
  }
}

TEST(ConvergenceSweep, RotationErrorDecreasesWithSamples) {
  auto cfg = base_config("rotation-measnoise");
  cfg.baseline.reset();
  const auto sweep = convergence_sweep(cfg, {1000, 10000, 100000});
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_GE(sweep[0].mean_error, sweep[1].mean_error);
  EXPECT_GE(sweep[1].mean_error, sweep[2].mean_error);
}

TEST(ConvergenceSweep, SinglePointEqualsRunExperiment) {
  auto cfg = base_config("linear-measnoise");
  cfg.n_samples = 1000;
  const auto sweep = convergence_sweep(cfg, {1000});
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0].mean_error, run_experiment(cfg).primary.mean_error);
  EXPECT_THROW(convergence_sweep(cfg, {2000, 1000}), Error);
  EXPECT_THROW(convergence_sweep(cfg, {}), Error);
}

TEST(Report, WritesJsonAndCsv) {
  auto cfg = base_config("rotation-measnoise");
  cfg.n_samples = 1000;
  cfg.realizations = 2;
  const RunReport r = run_experiment(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "rdmd_test_report";
  std::filesystem::remove_all(dir);
  write_report(dir, r);
  std::ifstream js(dir / "report.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["name"], "rotation-measnoise");
  EXPECT_EQ(j["realizations"].size(), 2u);
  EXPECT_EQ(j["time_scale"], "discrete");
  EXPECT_TRUE(j.contains("baseline_aggregate"));
  std::ifstream csv(dir / "pairs.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "realization,true_re,true_im,est_re,est_im,error");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 20);
  EXPECT_TRUE(std::filesystem::exists(dir / "baseline_pairs.csv"));
  std::filesystem::remove_all(dir);
}
