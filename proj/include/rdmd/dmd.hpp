#pragma once

// The four DMD variants: standard (Y X^+), SVD based, noise resistant
// (cross moments against a dual observable) and its SVD implementation.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdmd/linalg.hpp"
#include "rdmd/observables.hpp"
#include "rdmd/types.hpp"

namespace rdmd {

enum class Algorithm { Standard, Svd, NoiseResistant, NoiseResistantSvd };

inline const char* algorithm_tag(Algorithm a) {
  switch (a) {
    case Algorithm::Standard: return "alg1";
    case Algorithm::Svd: return "alg2";
    case Algorithm::NoiseResistant: return "alg3";
    case Algorithm::NoiseResistantSvd: return "alg4";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& tag) {
  if (tag == "alg1" || tag == "standard") return Algorithm::Standard;
  if (tag == "alg2" || tag == "svd") return Algorithm::Svd;
  if (tag == "alg3" || tag == "noise-resistant") return Algorithm::NoiseResistant;
  if (tag == "alg4" || tag == "noise-resistant-svd") return Algorithm::NoiseResistantSvd;
  fail(ErrorKind::InvalidArgument, "unknown algorithm '" + tag + "' (expected alg1..alg4)");
}

inline bool needs_dual(Algorithm a) { return a == Algorithm::NoiseResistant || a == Algorithm::NoiseResistantSvd; }

struct DmdOptions {
  std::optional<int> rank;                ///< explicit truncation rank (Alg 2/4)
  std::optional<double> energy_fraction;  ///< Auto rank: smallest k capturing this share of sum sigma^2
  std::optional<double> pinv_rtol;        ///< default max(rows, cols) * eps
  double eig_cond_limit = 1e10;

  void validate() const {
    if (rank) require(*rank >= 1, "DmdOptions: rank must be >= 1");
    if (energy_fraction)
      require(*energy_fraction > 0.0 && *energy_fraction <= 1.0, "DmdOptions: energy_fraction must be in (0, 1]");
    if (pinv_rtol) require(*pinv_rtol >= 0.0, "DmdOptions: pinv_rtol must be >= 0");
    require(eig_cond_limit > 0.0, "DmdOptions: eig_cond_limit must be > 0");
  }

  double rtol_for(Eigen::Index rows, Eigen::Index cols) const {
    return pinv_rtol ? *pinv_rtol : default_rtol(rows, cols);
  }
};

struct DmdResult {
  Algorithm algorithm = Algorithm::Standard;
  CMatrix op;                     ///< C (Alg 1/3) or A (Alg 2/4)
  CVector eigenvalues;            ///< dynamic eigenvalues, deterministic order
  CMatrix modes;                  ///< one column per dynamic mode v_i
  CMatrix eigenfunction_weights;  ///< P with phi_hat = P X
  CMatrix eigenfunction_samples;  ///< one row per phi_hat_i (empty if X was not available)
  std::vector<double> singular_values;
  Eigen::Index rank = 0;
  double eig_condition = 1.0;
  std::int64_t snapshot_count = 0;
};

namespace detail {

inline Eigen::Index choose_rank(const Svd& svd, const DmdOptions& opts, double rtol, const char* what) {
  const Eigen::Index numerical = svd.numerical_rank(rtol);
  if (numerical == 0) fail(ErrorKind::Rank, std::string(what) + ": matrix is numerically zero");
  if (opts.rank) {
    const Eigen::Index k = *opts.rank;
    if (k > numerical) {
      std::ostringstream msg;
      msg << what << ": rank " << k << " exceeds the numerical rank; largest admissible rank is " << numerical;
      throw RankError(msg.str(), numerical);
    }
    return k;
  }
  if (opts.energy_fraction) {
    const double total = svd.sigma.head(numerical).squaredNorm();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < numerical; ++k) {
      acc += svd.sigma[k] * svd.sigma[k];
      if (acc >= *opts.energy_fraction * total) return k + 1;
    }
  }
  return numerical;
}

inline std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

inline void check_pair(const CMatrix& x, const CMatrix& y) {
  require(x.size() > 0, "DMD: empty data matrix");
  require(x.rows() == y.rows() && x.cols() == y.cols(), "DMD: X and Y must have the same shape");
}

}  // namespace detail

/// Standard DMD: C = Y X^+, phi_hat_i = w_i^T X.
inline DmdResult dmd_standard(const CMatrix& x, const CMatrix& y, const DmdOptions& opts = {}) {
  opts.validate();
  detail::check_pair(x, y);
  DmdResult out;
  out.algorithm = Algorithm::Standard;
  out.op = y * pseudo_inverse(x, opts.rtol_for(x.rows(), x.cols()));
  const auto eig = eig_left_right(out.op, opts.eig_cond_limit);
  out.eigenvalues = eig.values;
  out.modes = eig.right;
  out.eigenfunction_weights = eig.left;
  out.eigenfunction_samples = eig.left * x;
  out.rank = out.op.rows();
  out.eig_condition = eig.condition;
  out.snapshot_count = x.cols();
  return out;
}

/// SVD based DMD: X ~ W_k S_k V_k^*, A = S_k^{-1} W_k^* Y V_k, modes W_k S_k u_i,
/// phi_hat_i = w_i^T V_k^*.
inline DmdResult dmd_svd(const CMatrix& x, const CMatrix& y, const DmdOptions& opts = {}) {
  opts.validate();
  detail::check_pair(x, y);
  const Svd svd = thin_svd(x);
  const Eigen::Index k = detail::choose_rank(svd, opts, opts.rtol_for(x.rows(), x.cols()), "dmd_svd");
  const auto wk = svd.U.leftCols(k);
  const auto vk = svd.V.leftCols(k);
  const RVector s = svd.sigma.head(k);
  const RVector s_inv = s.cwiseInverse();

  DmdResult out;
  out.algorithm = Algorithm::Svd;
  out.op = s_inv.asDiagonal() * (wk.adjoint() * y * vk);
  const auto eig = eig_left_right(out.op, opts.eig_cond_limit);
  out.eigenvalues = eig.values;
  out.modes = wk * s.asDiagonal() * eig.right;
  out.eigenfunction_weights = eig.left * s_inv.asDiagonal() * wk.adjoint();
  out.eigenfunction_samples = eig.left * vk.adjoint();
  out.singular_values = detail::to_std(svd.sigma);
  out.rank = k;
  out.eig_condition = eig.condition;
  out.snapshot_count = x.cols();
  return out;
}

/// SVD based DMD from Gram moments G0 = (1/n) X X^*, G1 = (1/n) Y X^*.
/// X = W S V^* gives G0 = W (S^2 / n) W^*, so W and S follow from the
/// eigendecomposition of G0 and A = S^{-1} W^* Y V = S^{-1} W^* (n G1) W S^{-1}.
/// Squaring the singular values halves the usable precision; intended for
/// tall Hankel embeddings that are too large to materialize.
inline DmdResult dmd_svd_from_gram(const CrossMoments& gram, const DmdOptions& opts = {}) {
  opts.validate();
  require(gram.G0.size() > 0 && gram.G0.rows() == gram.G0.cols(), "dmd_svd_from_gram: G0 must be square");
  require(gram.G1.rows() == gram.G0.rows() && gram.G1.cols() == gram.G0.cols(), "dmd_svd_from_gram: shape mismatch");
  const auto n = static_cast<double>(gram.count);
  const CMatrix herm = 0.5 * (gram.G0 + gram.G0.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  const Eigen::Index dim = herm.rows();
  Svd svd;
  svd.U.resize(dim, dim);
  svd.sigma.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {  // eigenvalues ascending -> reverse
    const Eigen::Index src = dim - 1 - i;
    svd.U.col(i) = es.eigenvectors().col(src);
    svd.sigma[i] = std::sqrt(std::max(es.eigenvalues()[src], 0.0) * n);
  }
  // sigma^2 carries the squared rounding error, so the cutoff is on sigma^2.
  const double rtol = std::sqrt(opts.rtol_for(dim, dim));
  const Eigen::Index k = detail::choose_rank(svd, opts, rtol, "dmd_svd_from_gram");
  const auto wk = svd.U.leftCols(k);
  const RVector s = svd.sigma.head(k);
  const RVector s_inv = s.cwiseInverse();

  DmdResult out;
  out.algorithm = Algorithm::Svd;
  out.op = s_inv.asDiagonal() * (wk.adjoint() * (n * gram.G1) * wk) * s_inv.asDiagonal();
  const auto eig = eig_left_right(out.op, opts.eig_cond_limit);
  out.eigenvalues = eig.values;
  out.modes = wk * s.asDiagonal() * eig.right;
  out.eigenfunction_weights = eig.left * s_inv.asDiagonal() * wk.adjoint();
  out.singular_values = detail::to_std(svd.sigma);
  out.rank = k;
  out.eig_condition = eig.condition;
  out.snapshot_count = gram.count;
  return out;
}

/// Cross moments G0 = (1/n) X Z^*, G1 = (1/n) Y Z^*.
inline CrossMoments cross_moments(const CMatrix& x, const CMatrix& y, const CMatrix& z) {
  detail::check_pair(x, y);
  require(z.cols() == x.cols(), "DMD: Z must have as many columns as X");
  require(z.rows() >= x.rows(), "DMD: dual observable Z needs at least as many rows as X");
  CrossMoments g;
  const double inv = 1.0 / static_cast<double>(x.cols());
  g.G0.noalias() = x * z.adjoint();
  g.G0 *= inv;
  g.G1.noalias() = y * z.adjoint();
  g.G1 *= inv;
  g.count = x.cols();
  return g;
}

/// Noise resistant DMD from precomputed cross moments: C = G1 G0^+.
/// eigenfunction_samples is left empty; phi_hat = eigenfunction_weights * X.
inline DmdResult dmd_noise_resistant(const CrossMoments& g, const DmdOptions& opts = {}) {
  opts.validate();
  require(g.G0.size() > 0 && g.G0.rows() == g.G1.rows() && g.G0.cols() == g.G1.cols(),
          "dmd_noise_resistant: inconsistent moment shapes");
  const double rtol = opts.rtol_for(g.G0.rows(), g.G0.cols());
  const Svd svd = thin_svd(g.G0);
  const Eigen::Index r = svd.numerical_rank(rtol);
  if (r < g.G0.rows()) {
    std::ostringstream msg;
    msg << "dmd_noise_resistant: G0 has numerical rank " << r << " < " << g.G0.rows()
        << " observables; use the SVD variant (alg4) with a truncated rank or augment the dual observable";
    fail(ErrorKind::Conditioning, msg.str());
  }
  const RVector inv = svd.sigma.head(r).cwiseInverse();
  const CMatrix g0_pinv = svd.V.leftCols(r) * inv.asDiagonal() * svd.U.leftCols(r).adjoint();

  DmdResult out;
  out.algorithm = Algorithm::NoiseResistant;
  out.op = g.G1 * g0_pinv;
  const auto eig = eig_left_right(out.op, opts.eig_cond_limit);
  out.eigenvalues = eig.values;
  out.modes = eig.right;
  out.eigenfunction_weights = eig.left;
  out.rank = out.op.rows();
  out.eig_condition = eig.condition;
  out.snapshot_count = g.count;
  return out;
}

/// SVD implemented noise resistant DMD: G0 ~ W_k S_k V_k^*,
/// A = S_k^{-1} W_k^* G1 V_k, modes W_k S_k u_i, phi_hat_i = w_i S_k^{-1} W_k^* X.
inline DmdResult dmd_noise_resistant_svd(const CrossMoments& g, const DmdOptions& opts = {}) {
  opts.validate();
  require(g.G0.size() > 0 && g.G0.rows() == g.G1.rows() && g.G0.cols() == g.G1.cols(),
          "dmd_noise_resistant_svd: inconsistent moment shapes");
  const Svd svd = thin_svd(g.G0);
  const Eigen::Index k =
      detail::choose_rank(svd, opts, opts.rtol_for(g.G0.rows(), g.G0.cols()), "dmd_noise_resistant_svd");
  const auto wk = svd.U.leftCols(k);
  const auto vk = svd.V.leftCols(k);
  const RVector s = svd.sigma.head(k);
  const RVector s_inv = s.cwiseInverse();

  DmdResult out;
  out.algorithm = Algorithm::NoiseResistantSvd;
  out.op = s_inv.asDiagonal() * (wk.adjoint() * g.G1 * vk);
  const auto eig = eig_left_right(out.op, opts.eig_cond_limit);
  out.eigenvalues = eig.values;
  out.modes = wk * s.asDiagonal() * eig.right;
  out.eigenfunction_weights = eig.left * s_inv.asDiagonal() * wk.adjoint();
  out.singular_values = detail::to_std(svd.sigma);
  out.rank = k;
  out.eig_condition = eig.condition;
  out.snapshot_count = g.count;
  return out;
}

inline DmdResult dmd_noise_resistant(const CMatrix& x, const CMatrix& y, const CMatrix& z,
                                     const DmdOptions& opts = {}) {
  DmdResult out = dmd_noise_resistant(cross_moments(x, y, z), opts);
  out.eigenfunction_samples = out.eigenfunction_weights * x;
  return out;
}

inline DmdResult dmd_noise_resistant_svd(const CMatrix& x, const CMatrix& y, const CMatrix& z,
                                         const DmdOptions& opts = {}) {
  DmdResult out = dmd_noise_resistant_svd(cross_moments(x, y, z), opts);
  out.eigenfunction_samples = out.eigenfunction_weights * x;
  return out;
}

// SeriesMatrix front ends check that X, Y, Z describe the same time indices.

inline void require_aligned(const SeriesMatrix& x, const SeriesMatrix& y, const SeriesMatrix* z = nullptr) {
  require(x.t_start == y.t_start && x.cols() == y.cols(), "DMD: X and Y are not aligned");
  if (z) require(z->t_start == x.t_start && z->cols() == x.cols(), "DMD: Z is not aligned with X");
}

inline DmdResult run_dmd(Algorithm alg, const SeriesMatrix& x, const SeriesMatrix& y, const SeriesMatrix* z,
                         const DmdOptions& opts) {
  require_aligned(x, y, z);
  switch (alg) {
    case Algorithm::Standard: return dmd_standard(x.values, y.values, opts);
    case Algorithm::Svd: return dmd_svd(x.values, y.values, opts);
    case Algorithm::NoiseResistant:
      require(z != nullptr, "alg3 requires a dual observable");
      return dmd_noise_resistant(x.values, y.values, z->values, opts);
    case Algorithm::NoiseResistantSvd:
      require(z != nullptr, "alg4 requires a dual observable");
      return dmd_noise_resistant_svd(x.values, y.values, z->values, opts);
  }
  fail(ErrorKind::InvalidArgument, "unknown algorithm");
}

/// Rescale each eigenfunction row to unit empirical RMS.
inline CMatrix normalized_eigenfunctions(const DmdResult& r) {
  CMatrix out = r.eigenfunction_samples;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double rms = out.row(i).norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(out.cols(), 1)));
    if (rms > 0.0) out.row(i) /= rms;
  }
  return out;
}

struct ContinuousSpectrum {
  std::vector<cplx> values;
  std::vector<bool> possibly_aliased;  ///< |Im| within 5% of pi / dt
};

/// log(lambda) / dt on the principal branch.
inline ContinuousSpectrum to_continuous_spectrum(const CVector& eigenvalues, double dt) {
  require(dt > 0.0, "to_continuous_spectrum: dt must be > 0");
  ContinuousSpectrum out;
  const double nyquist = std::numbers::pi / dt;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] == cplx(0.0)) fail(ErrorKind::InvalidArgument, "to_continuous_spectrum: zero eigenvalue");
    const cplx mu = std::log(eigenvalues[i]) / dt;
    out.values.push_back(mu);
    out.possibly_aliased.push_back(std::abs(std::abs(mu.imag()) - nyquist) <= 0.05 * nyquist);
  }
  return out;
}

inline ContinuousSpectrum to_continuous_spectrum(const DmdResult& r, double dt) {
  return to_continuous_spectrum(r.eigenvalues, dt);
}

// --- JSON export ----------------------------------------------------------------

inline nlohmann::json complex_list_json(const CVector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v[i].real(), v[i].imag()});
  return arr;
}

inline nlohmann::json complex_matrix_json(const CMatrix& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"re", re}, {"im", im}};
}

inline nlohmann::json options_json(const DmdOptions& o) {
  nlohmann::json j;
  j["rank"] = o.rank ? nlohmann::json(*o.rank) : nlohmann::json(nullptr);
  j["energy_fraction"] = o.energy_fraction ? nlohmann::json(*o.energy_fraction) : nlohmann::json(nullptr);
  j["pinv_rtol"] = o.pinv_rtol ? nlohmann::json(*o.pinv_rtol) : nlohmann::json(nullptr);
  j["eig_cond_limit"] = o.eig_cond_limit;
  return j;
}

inline nlohmann::json to_json(const DmdResult& r, const DmdOptions& opts, bool include_modes = false,
                              bool include_eigenfunctions = false) {
  nlohmann::json j;
  j["algorithm"] = algorithm_tag(r.algorithm);
  j["options"] = options_json(opts);
  j["rank"] = r.rank;
  j["snapshot_count"] = r.snapshot_count;
  j["eig_condition"] = r.eig_condition;
  j["eigenvalues"] = complex_list_json(r.eigenvalues);
  j["singular_values"] = r.singular_values;
  if (include_modes) j["modes"] = complex_matrix_json(r.modes);
  if (include_eigenfunctions && r.eigenfunction_samples.size() > 0)
    j["eigenfunction_samples"] = complex_matrix_json(r.eigenfunction_samples);
  return j;
}

}  // namespace rdmd
