#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rdmd/observables.hpp"

using namespace rdmd;

namespace {

Trajectory single_state(std::vector<double> x) {
  Trajectory t;
  t.states = Eigen::Map<RVector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return t;
}

SeriesMatrix ramp(int n, std::int64_t t_start = 0) {
  SeriesMatrix s;
  s.values.resize(1, n);
  for (int i = 0; i < n; ++i) s.values(0, i) = static_cast<double>(i);
  s.t_start = t_start;
  return s;
}

CMatrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

SeriesMatrix random_series(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed, "test-series");
  SeriesMatrix s;
  s.values.resize(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) s.values(r, c) = {rng.normal(), rng.normal()};
  s.t_start = 5;
  return s;
}

}  // namespace

// --- dictionaries ------------------------------------------------------------------

TEST(Evaluate, RotationTrigAtZero) {
  const auto f = evaluate(presets::rotation_trig(1), single_state({0.0}), NoiseSpec::none());
  ASSERT_EQ(f.rows(), 2);
  EXPECT_EQ(f.values(0, 0), cplx(0.0));
  EXPECT_EQ(f.values(1, 0), cplx(1.0));
}

TEST(Evaluate, RotationTrigOrdersSinesThenCosines) {
  const double x = 0.3;
  const auto f = evaluate(presets::rotation_trig(5), single_state({x}), NoiseSpec::none());
  ASSERT_EQ(f.rows(), 10);
  for (int k = 1; k <= 5; ++k) {
    EXPECT_DOUBLE_EQ(f.values(k - 1, 0).real(), std::sin(k * x));
    EXPECT_DOUBLE_EQ(f.values(k + 4, 0).real(), std::cos(k * x));
  }
}

TEST(Evaluate, LinearStateIsIdentity) {
  const auto f = evaluate(presets::linear_state(4), single_state({1, 2, 3, 4}), NoiseSpec::none());
  for (int i = 0; i < 4; ++i) EXPECT_EQ(f.values(i, 0), cplx(i + 1.0));
  const auto s = evaluate(presets::linear_sum(4), single_state({1, 2, 3, 4}), NoiseSpec::none());
  EXPECT_EQ(s.values(0, 0), cplx(10.0));
}

TEST(Evaluate, RotationSum) {
  const double x = 1.1;
  const auto f = evaluate(presets::rotation_sum(), single_state({x}), NoiseSpec::none());
  EXPECT_NEAR(f.values(0, 0).real(), std::sin(x) + std::sin(2 * x) + std::sin(3 * x), 1e-15);
}

TEST(Evaluate, StuartLandauExpAtHalfRadius) {
  EXPECT_LT(std::abs(presets::stuart_landau_exp(std::array{0.5, 0.0}, 1) - cplx(1.0)), 1e-15);
  // theta = pi/2, r = 1: e^{i k (pi/2 - log 2)}
  const cplx v = presets::stuart_landau_exp(std::array{0.0, 1.0}, -2);
  EXPECT_LT(std::abs(v - std::polar(1.0, -2 * (std::numbers::pi / 2 - std::log(2.0)))), 1e-14);
}

TEST(Evaluate, StuartLandauDictOrderAndSum) {
  const auto xy = single_state({0.3, -0.6});
  const auto f = evaluate(presets::stuart_landau_exp_dict(6), xy, NoiseSpec::none());
  const auto s = evaluate(presets::stuart_landau_exp_sum(6), xy, NoiseSpec::none());
  ASSERT_EQ(f.rows(), 12);
  cplx sum = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const std::array<double, 2> p{0.3, -0.6};
    EXPECT_LT(std::abs(f.values(2 * (k - 1), 0) - presets::stuart_landau_exp(p, k)), 1e-15);
    EXPECT_LT(std::abs(f.values(2 * (k - 1) + 1, 0) - presets::stuart_landau_exp(p, -k)), 1e-15);
    sum += f.values(2 * (k - 1), 0) + f.values(2 * (k - 1) + 1, 0);
  }
  EXPECT_LT(std::abs(s.values(0, 0) - sum), 1e-13);
}

TEST(Evaluate, StuartLandauExpRejectsOrigin) {
  try {
    evaluate(presets::stuart_landau_exp_dict(1), single_state({0.0, 0.0}), NoiseSpec::none());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Evaluate, DimensionMismatchIsRejected) {
  EXPECT_THROW(evaluate(presets::linear_state(4), single_state({1.0, 2.0}), NoiseSpec::none()), Error);
}

TEST(Dictionary, NamesAreUnique) {
  for (const auto& d : {presets::rotation_trig(5), presets::linear_state(4), presets::stuart_landau_exp_dict(6)})
    EXPECT_NO_THROW(d.validate());
  ObservableDict dup = presets::rotation_trig(1);
  dup.entries.push_back(dup.entries.front());
  EXPECT_THROW(dup.validate(), Error);
}

// --- measurement noise ---------------------------------------------------------------

TEST(Noise, UniformIsZeroMean) {
  Rng rng(2024, "measurement");
  const NoiseSpec spec = NoiseSpec::uniform(0.5, 0);
  double sum = 0.0, max_abs = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const cplx e = draw_noise(spec, rng);
    ASSERT_EQ(e.imag(), 0.0);
    sum += e.real();
    max_abs = std::max(max_abs, std::abs(e.real()));
  }
  EXPECT_LT(std::abs(sum / draws), 0.002);
  EXPECT_LE(max_abs, 0.5);
}

TEST(Noise, ComplexGaussianHasQuarterVariancePerComponent) {
  Rng rng(7, "measurement");
  const NoiseSpec spec = NoiseSpec::complex_gaussian(0.5, 0);
  double sre = 0, sim = 0, sre2 = 0, sim2 = 0, cross = 0;
  const int draws = 400000;
  for (int i = 0; i < draws; ++i) {
    const cplx e = draw_noise(spec, rng);
    sre += e.real();
    sim += e.imag();
    sre2 += e.real() * e.real();
    sim2 += e.imag() * e.imag();
    cross += e.real() * e.imag();
  }
  const double tol = 5 * 0.25 * std::sqrt(2.0 / draws);
  EXPECT_NEAR(sre2 / draws, 0.25, tol);
  EXPECT_NEAR(sim2 / draws, 0.25, tol);
  EXPECT_NEAR(cross / draws, 0.0, tol);
  EXPECT_NEAR(sre / draws, 0.0, 5 * 0.5 / std::sqrt(draws));
  EXPECT_NEAR(sim / draws, 0.0, 5 * 0.5 / std::sqrt(draws));
}

TEST(Noise, MeanOfInjectedNoiseWithinThreeSigma) {
  Trajectory t;
  t.states = RMatrix::Zero(4, 20000);
  const NoiseSpec spec = NoiseSpec::gaussian(1.0, 99);
  const auto f = evaluate(presets::linear_state(4), t, spec);
  const double mean = f.values.real().mean();
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(f.values.size())));
}

TEST(Noise, ChangingTheNoiseSeedKeepsTheNoiselessPart) {
  Trajectory t;
  t.states = RMatrix::Random(1, 500) * 3.0;
  const auto dict = presets::rotation_trig(3);
  const auto clean = evaluate(dict, t, NoiseSpec::none());
  const auto a = evaluate(dict, t, NoiseSpec::uniform(0.5, 1));
  const auto b = evaluate(dict, t, NoiseSpec::uniform(0.5, 2));
  EXPECT_GT((a.values - b.values).norm(), 1.0);
  // The noise is additive, so subtracting it recovers the same clean evaluation.
  const CMatrix ea = a.values - clean.values, eb = b.values - clean.values;
  EXPECT_LE(ea.cwiseAbs().maxCoeff(), 0.5 + 1e-12);
  EXPECT_LE(eb.cwiseAbs().maxCoeff(), 0.5 + 1e-12);
  EXPECT_LT(((a.values - ea) - clean.values).norm(), 1e-12);
  // Same seed, same values.
  EXPECT_EQ(evaluate(dict, t, NoiseSpec::uniform(0.5, 1)).values, a.values);
}

TEST(Noise, IndependentAcrossComponents) {
  Trajectory t;
  t.states = RMatrix::Zero(4, 50000);
  const auto f = evaluate(presets::linear_state(4), t, NoiseSpec::uniform(0.5, 3));
  const RMatrix e = f.values.real();
  const RMatrix cov = e * e.transpose() / static_cast<double>(e.cols());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(cov(i, j), i == j ? 1.0 / 12 : 0.0, 5 * (1.0 / 12) / std::sqrt(static_cast<double>(e.cols())));
}

// --- Hankel embedding ----------------------------------------------------------------

TEST(HankelEmbed, NoShift) {
  const auto e = hankel_embed(ramp(5), {2, 0});
  EXPECT_EQ(e.X.values, rows_of({{0, 1, 2}, {1, 2, 3}}));
  EXPECT_EQ(e.Y.values, rows_of({{1, 2, 3}, {2, 3, 4}}));
  EXPECT_EQ(e.Z.values, e.X.values);
  EXPECT_EQ(e.X.t_start, 0);
}

TEST(HankelEmbed, ShiftTwo) {
  const auto e = hankel_embed(ramp(5), {2, 2});
  EXPECT_EQ(e.X.values, rows_of({{2}, {3}}));
  EXPECT_EQ(e.Y.values, rows_of({{3}, {4}}));
  EXPECT_EQ(e.Z.values, rows_of({{0}, {1}}));
  EXPECT_EQ(e.X.t_start, 2);
  EXPECT_EQ(e.Z.t_start, 2);
}

TEST(HankelEmbed, SingleDelayIsTheShiftPair) {
  const auto f = random_series(3, 40, 1);
  const auto e = hankel_embed(f, {1, 0});
  EXPECT_EQ(e.X.values, f.values.leftCols(39));
  EXPECT_EQ(e.Y.values, f.values.rightCols(39));
}

TEST(HankelEmbed, IndexContractOnMultiRowSeries) {
  const auto f = random_series(2, 60, 2);
  for (int k : {1, 3, 7}) {
    for (int s : {0, 1, k - 1, k}) {
      const auto e = hankel_embed(f, {k, s});
      const std::int64_t m = 60 - k - s;
      ASSERT_EQ(e.X.cols(), m);
      ASSERT_EQ(e.X.rows(), 2 * k);
      for (std::int64_t c = 0; c < m; ++c) {
        const std::int64_t t = s + c;
        for (int r = 0; r < 2; ++r) {
          for (int i = 0; i < k; ++i) {
            ASSERT_EQ(e.X.values(r * k + i, c), f.values(r, t + i));
            ASSERT_EQ(e.Y.values(r * k + i, c), f.values(r, t + i + 1));
            ASSERT_EQ(e.Z.values(r * k + i, c), f.values(r, t - s + i));
          }
        }
        if (c + 1 < m) ASSERT_EQ(e.Y.values.col(c), e.X.values.col(c + 1));
      }
      EXPECT_EQ(e.X.t_start, f.t_start + s);
    }
  }
}

TEST(HankelEmbed, TooShortSeriesIsRejected) {
  EXPECT_THROW(hankel_embed(ramp(4), {2, 2}), Error);
  EXPECT_NO_THROW(hankel_embed(ramp(5), {2, 2}));
}

// --- duals ---------------------------------------------------------------------------

TEST(BuildDual, ShiftOneIsTheLaggedSeries) {
  const auto f = random_series(3, 30, 4);
  const auto z = build_dual(f, 1);
  EXPECT_EQ(z.t_start, f.t_start + 1);
  EXPECT_EQ(z.values, f.values);  // column t of Z holds f(t-1)
}

TEST(BuildDual, AugmentedDualRowsAndOrder) {
  const auto f = random_series(1, 200, 5);
  const std::vector<NamedTransform> aug{transform_by_name("id"), transform_by_name("square"),
                                        transform_by_name("cube")};
  const int shift = 1, extra = 42;
  const auto z = build_dual(f, shift, aug, extra);
  ASSERT_EQ(z.rows(), 129);
  EXPECT_EQ(z.t_start, f.t_start + shift + extra);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const std::int64_t t = z.t_start + c - f.t_start;  // relative time index
    for (int j = extra; j >= 0; --j) {
      const Eigen::Index block = 3 * (extra - j);
      const cplx v = f.values(0, t - shift - j);
      ASSERT_EQ(z.values(block, c), v);
      ASSERT_EQ(z.values(block + 1, c), v * v);
      ASSERT_EQ(z.values(block + 2, c), v * v * v);
    }
  }
}

TEST(BuildDual, ConstantSeriesGivesPowersOfTheConstant) {
  SeriesMatrix f;
  f.values = CMatrix::Constant(1, 80, cplx(1.5));
  const auto z = build_dual(f, 3, {transform_by_name("id"), transform_by_name("square"), transform_by_name("cube")}, 5);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) {
    const cplx v = z.values(i);
    EXPECT_TRUE(v == cplx(1.5) || v == cplx(2.25) || v == cplx(3.375));
  }
}

TEST(BuildDual, RejectsUnknownTransformAndShortSeries) {
  EXPECT_THROW(transform_by_name("sqrt"), Error);
  EXPECT_THROW(build_dual(ramp(5), 1, {}, 5), Error);
}

TEST(Align, TrimsToTheCommonRange) {
  const auto f = random_series(2, 100, 6);
  auto e = hankel_embed(f, {3, 0});
  auto z = build_dual(f, 4, {}, 2);
  align(e.X, e.Y, &z);
  EXPECT_EQ(e.X.t_start, f.t_start + 6);
  EXPECT_EQ(e.X.cols(), z.cols());
  EXPECT_EQ(e.X.t_start, z.t_start);
  EXPECT_EQ(e.X.t_end(), f.t_start + 97);
  // Column t of Z holds f(t-4-2), f(t-4-1), f(t-4) for each row.
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const std::int64_t t = e.X.t_start + c - f.t_start;
    EXPECT_EQ(z.values(0, c), f.values(0, t - 6));
    EXPECT_EQ(z.values(5, c), f.values(1, t - 4));
    EXPECT_EQ(e.X.values(0, c), f.values(0, t));
  }
}

// --- structured Hankel moments ------------------------------------------------------

TEST(HankelMoments, MatchExplicitProducts) {
  const auto f = random_series(2, 300, 8);
  for (const EmbeddingPlan plan : {EmbeddingPlan{1, 0}, EmbeddingPlan{5, 0}, EmbeddingPlan{5, 4}, EmbeddingPlan{7, 7}}) {
    const auto e = hankel_embed(f, plan);
    const double m = static_cast<double>(e.X.cols());
    const CMatrix g0 = e.X.values * e.Z.values.adjoint() / m;
    const CMatrix g1 = e.Y.values * e.Z.values.adjoint() / m;
    const auto g = hankel_cross_moments(f, plan);
    EXPECT_EQ(g.count, e.X.cols());
    EXPECT_EQ(g.t_start, e.X.t_start);
    EXPECT_LT((g.G0 - g0).norm(), 1e-12 * g0.norm()) << plan.delays << "," << plan.dual_shift;
    EXPECT_LT((g.G1 - g1).norm(), 1e-12 * g1.norm());
  }
}

TEST(HankelMoments, ProjectionMatchesExplicitProduct) {
  const auto f = random_series(1, 5000, 9);
  const EmbeddingPlan plan{12, 3};
  const auto e = hankel_embed(f, plan);
  const CMatrix w = random_series(4, 12, 10).values;
  const CMatrix explicit_product = w * e.X.values;
  EXPECT_LT((hankel_project(f, plan, w) - explicit_product).norm(), 1e-12 * explicit_product.norm());
}

// --- series file ---------------------------------------------------------------------

TEST(SeriesFile, RoundTripIsExact) {
  auto s = random_series(3, 50, 11);
  s.label = "noisy trig / K=5";
  std::stringstream ss;
  write_series(ss, s);
  const auto back = read_series(ss);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.t_start, s.t_start);
  EXPECT_EQ(back.label, s.label);
}

TEST(SeriesFile, MalformedInputIsAFormatError) {
  for (const std::string text : {"nope\n", "# rdmd-series rows=2 cols=1 t_start=0 label=x\n1,0\n",
                                 "# rdmd-series rows=1 cols=2 t_start=0 label=x\n1,0\n",
                                 "# rdmd-series rows=1 cols=1 t_start=0 label=x\n1\n",
                                 "# rdmd-series rows=1 cols=1 t_start=0 label=x\n1,zz\n"}) {
    std::istringstream is(text);
    try {
      read_series(is);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Format);
    }
  }
}
