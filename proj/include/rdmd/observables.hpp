#pragma once

// Snapshot matrices: observable dictionaries, i.i.d. measurement noise,
// time-delay (Hankel) embeddings and dual observables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rdmd/rds_sim.hpp"
#include "rdmd/rng.hpp"
#include "rdmd/types.hpp"

namespace rdmd {

struct Observable {
  std::string name;
  bool complex_valued = false;
  std::function<cplx(std::span<const double>)> fn;
};

struct ObservableDict {
  std::string preset;
  std::vector<Observable> entries;
  Eigen::Index state_dim = 0;  ///< required state dimension; 0 accepts any

  Eigen::Index size() const { return static_cast<Eigen::Index>(entries.size()); }

  void validate() const {
    require(!entries.empty(), "observable dictionary must have at least one entry");
    std::set<std::string> names;
    for (const auto& e : entries) {
      require(static_cast<bool>(e.fn), "observable '" + e.name + "' has no function");
      require(names.insert(e.name).second, "duplicate observable name '" + e.name + "'");
    }
  }
};

namespace presets {

/// sin(kx) for k = 1..K followed by cos(kx) for k = 1..K.
inline ObservableDict rotation_trig(int max_k) {
  require(max_k >= 1, "rotation_trig: K must be >= 1");
  ObservableDict d{"RotationTrig", {}, 1};
  for (int k = 1; k <= max_k; ++k)
    d.entries.push_back({"sin" + std::to_string(k) + "x", false,
                         [k](std::span<const double> x) { return cplx(std::sin(k * x[0]), 0.0); }});
  for (int k = 1; k <= max_k; ++k)
    d.entries.push_back({"cos" + std::to_string(k) + "x", false,
                         [k](std::span<const double> x) { return cplx(std::cos(k * x[0]), 0.0); }});
  return d;
}

/// sin x + sin 2x + ... + sin Kx (K = 3 by default).
inline ObservableDict rotation_sum(int max_k = 3) {
  require(max_k >= 1, "rotation_sum: K must be >= 1");
  ObservableDict d{"RotationSum", {}, 1};
  d.entries.push_back({"sum_sin", false, [max_k](std::span<const double> x) {
                         double s = 0.0;
                         for (int k = 1; k <= max_k; ++k) s += std::sin(k * x[0]);
                         return cplx(s, 0.0);
                       }});
  return d;
}

inline ObservableDict linear_state(Eigen::Index dim) {
  require(dim >= 1, "linear_state: dim must be >= 1");
  ObservableDict d{"LinearState", {}, dim};
  for (Eigen::Index i = 0; i < dim; ++i)
    d.entries.push_back({"x" + std::to_string(i + 1), false,
                         [i](std::span<const double> x) { return cplx(x[static_cast<std::size_t>(i)], 0.0); }});
  return d;
}

inline ObservableDict linear_sum(Eigen::Index dim) {
  require(dim >= 1, "linear_sum: dim must be >= 1");
  ObservableDict d{"LinearSum", {}, dim};
  d.entries.push_back({"sum_x", false, [](std::span<const double> x) {
                         double s = 0.0;
                         for (double v : x) s += v;
                         return cplx(s, 0.0);
                       }});
  return d;
}

/// Phase observable e^{ik(theta - log(2r))} from Cartesian (x, y).
inline cplx stuart_landau_exp(std::span<const double> xy, int k) {
  const double r = std::hypot(xy[0], xy[1]);
  if (!(r > 0.0)) fail(ErrorKind::Domain, "StuartLandauExp: state with r <= 0");
  const double theta = std::atan2(xy[1], xy[0]);
  return std::polar(1.0, k * (theta - std::log(2.0 * r)));
}

/// f_1, f_{-1}, f_2, f_{-2}, ..., f_K, f_{-K}.
inline ObservableDict stuart_landau_exp_dict(int max_k) {
  require(max_k >= 1, "StuartLandauExp: K must be >= 1");
  ObservableDict d{"StuartLandauExp", {}, 2};
  for (int k = 1; k <= max_k; ++k) {
    for (int sign : {1, -1}) {
      const int kk = sign * k;
      d.entries.push_back({"f" + std::to_string(kk), true,
                           [kk](std::span<const double> x) { return stuart_landau_exp(x, kk); }});
    }
  }
  return d;
}

/// sum_{k=1..K} (f_k + f_{-k}).
inline ObservableDict stuart_landau_exp_sum(int max_k = 6) {
  require(max_k >= 1, "StuartLandauExpSum: K must be >= 1");
  ObservableDict d{"StuartLandauExpSum", {}, 2};
  d.entries.push_back({"sum_f", true, [max_k](std::span<const double> x) {
                         cplx s = 0.0;
                         for (int k = 1; k <= max_k; ++k) s += stuart_landau_exp(x, k) + stuart_landau_exp(x, -k);
                         return s;
                       }});
  return d;
}

}  // namespace presets

// --- measurement noise --------------------------------------------------------

enum class NoiseKind { None, UniformReal, GaussianReal, ComplexGaussian };

/// i.i.d. measurement noise. `scale` is the half-width for UniformReal and the
/// standard deviation (per component for ComplexGaussian) otherwise.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double scale = 0.0;
  std::uint64_t seed = 0;
  std::string stream = "measurement";

  static NoiseSpec none() { return {}; }
  static NoiseSpec uniform(double halfwidth, std::uint64_t seed) { return {NoiseKind::UniformReal, halfwidth, seed}; }
  static NoiseSpec gaussian(double std, std::uint64_t seed) { return {NoiseKind::GaussianReal, std, seed}; }
  static NoiseSpec complex_gaussian(double std, std::uint64_t seed) {
    return {NoiseKind::ComplexGaussian, std, seed};
  }
};

/// Complex snapshot matrix, one column per time index starting at t_start.
struct SeriesMatrix {
  CMatrix values;
  std::int64_t t_start = 0;
  std::string label;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::int64_t t_end() const { return t_start + values.cols(); }  ///< exclusive
};

/// Draws one noise sample.
inline cplx draw_noise(const NoiseSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::UniformReal: return {rng.uniform(-spec.scale, spec.scale), 0.0};
    case NoiseKind::GaussianReal: return {rng.normal(0.0, spec.scale), 0.0};
    case NoiseKind::ComplexGaussian: {
      const double re = rng.normal(0.0, spec.scale);
      const double im = rng.normal(0.0, spec.scale);
      return {re, im};
    }
  }
  return 0.0;
}

/// Entry (i, t) = f_i(x_t) + e_{i,t}, with e drawn from the noise spec's own
/// stream (never the trajectory's dynamics stream).
inline SeriesMatrix evaluate(const ObservableDict& dict, const Trajectory& traj, const NoiseSpec& noise) {
  dict.validate();
  require(noise.scale >= 0.0, "noise scale must be >= 0");
  require(dict.state_dim == 0 || dict.state_dim == traj.dim(),
          "dictionary " + dict.preset + " expects state dimension " + std::to_string(dict.state_dim) + ", got " +
              std::to_string(traj.dim()));
  SeriesMatrix out;
  out.values.resize(dict.size(), traj.size());
  out.label = dict.preset;
  Rng rng(noise.seed, noise.stream);
  const auto dim = static_cast<std::size_t>(traj.dim());
  for (Eigen::Index t = 0; t < traj.size(); ++t) {
    const std::span<const double> x(traj.states.col(t).data(), dim);
    for (Eigen::Index i = 0; i < dict.size(); ++i) {
      cplx v = dict.entries[static_cast<std::size_t>(i)].fn(x);
      if (noise.kind != NoiseKind::None) v += draw_noise(noise, rng);
      out.values(i, t) = v;
    }
  }
  return out;
}

// --- embeddings ------------------------------------------------------------------

/// k delays per row and a dual shift s into the past.
struct EmbeddingPlan {
  int delays = 1;
  int dual_shift = 0;

  /// m = N - k - s for a source of length N.
  std::int64_t column_count(std::int64_t source_length) const { return source_length - delays - dual_shift; }
};

struct DataMatrices {
  SeriesMatrix X, Y, Z;
};

/// Delay embedding with the index contract: columns t = s .. s+m-1 (relative
/// to the source), X(t) = f(t..t+k-1), Y(t) = f(t+1..t+k), Z(t) = f(t-s..t-s+k-1).
/// Multi-row input stacks the k delays of each row (row r occupies rows r*k .. r*k+k-1).
inline DataMatrices hankel_embed(const SeriesMatrix& series, const EmbeddingPlan& plan) {
  require(plan.delays >= 1, "hankel_embed: delays must be >= 1");
  require(plan.dual_shift >= 0, "hankel_embed: dual shift must be >= 0");
  const std::int64_t n = series.cols();
  const std::int64_t m = plan.column_count(n);
  if (m < 1) {
    fail(ErrorKind::InvalidArgument, "hankel_embed: series length " + std::to_string(n) + " < k + s + 1 = " +
                                         std::to_string(plan.delays + plan.dual_shift + 1));
  }
  const Eigen::Index k = plan.delays;
  const Eigen::Index s = plan.dual_shift;
  const Eigen::Index rows = series.rows() * k;
  DataMatrices out;
  out.X.values.resize(rows, m);
  out.Y.values.resize(rows, m);
  out.Z.values.resize(rows, m);
  for (Eigen::Index r = 0; r < series.rows(); ++r) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index row = r * k + i;
      out.X.values.row(row) = series.values.row(r).segment(s + i, m);
      out.Y.values.row(row) = series.values.row(r).segment(s + i + 1, m);
      out.Z.values.row(row) = series.values.row(r).segment(i, m);
    }
  }
  const std::int64_t t0 = series.t_start + s;
  out.X.t_start = out.Y.t_start = out.Z.t_start = t0;
  out.X.label = series.label + "/X";
  out.Y.label = series.label + "/Y";
  out.Z.label = series.label + "/Z";
  return out;
}

/// Scalar transform applied to dual entries (identity, powers, ...).
struct NamedTransform {
  std::string name;
  std::function<cplx(cplx)> fn;
};

inline NamedTransform transform_by_name(const std::string& name) {
  if (name == "id" || name == "identity") return {"id", [](cplx v) { return v; }};
  if (name == "square") return {"square", [](cplx v) { return v * v; }};
  if (name == "cube") return {"cube", [](cplx v) { return v * v * v; }};
  if (name == "conj") return {"conj", [](cplx v) { return std::conj(v); }};
  fail(ErrorKind::InvalidArgument, "unknown dual transform '" + name + "' (expected id, square, cube, conj)");
}

/// Dual observable Z whose column t stacks phi(f(t - shift - j)) for
/// j = extra_shifts .. 0 (oldest first), each source row and each transform.
/// Columns cover every t for which all of these samples exist.
inline SeriesMatrix build_dual(const SeriesMatrix& series_f, int shift, const std::vector<NamedTransform>& augment,
                               int extra_shifts) {
  require(shift >= 0, "build_dual: shift must be >= 0");
  require(extra_shifts >= 0, "build_dual: extra_shifts must be >= 0");
  const std::vector<NamedTransform> transforms = augment.empty() ? std::vector{transform_by_name("id")} : augment;
  const std::int64_t n = series_f.cols();
  const std::int64_t m = n - extra_shifts;
  if (m < 1) {
    fail(ErrorKind::InvalidArgument, "build_dual: series length " + std::to_string(n) + " too short for " +
                                         std::to_string(extra_shifts) + " extra shifts");
  }
  const auto nt = static_cast<Eigen::Index>(transforms.size());
  SeriesMatrix out;
  out.values.resize(series_f.rows() * nt * (extra_shifts + 1), m);
  Eigen::Index row = 0;
  for (int j = extra_shifts; j >= 0; --j) {
    // column c corresponds to t = shift + extra_shifts + c and reads f(t - shift - j)
    const Eigen::Index offset = extra_shifts - j;
    for (Eigen::Index r = 0; r < series_f.rows(); ++r) {
      for (const auto& tr : transforms) {
        for (Eigen::Index c = 0; c < m; ++c) out.values(row, c) = tr.fn(series_f.values(r, offset + c));
        ++row;
      }
    }
  }
  out.t_start = series_f.t_start + shift + extra_shifts;
  out.label = series_f.label + "/dual(shift=" + std::to_string(shift) + ")";
  return out;
}

inline SeriesMatrix build_dual(const SeriesMatrix& series_f, int shift) { return build_dual(series_f, shift, {}, 0); }

inline SeriesMatrix trim(const SeriesMatrix& s, std::int64_t t_begin, std::int64_t t_end) {
  require(t_begin >= s.t_start && t_end <= s.t_end() && t_begin < t_end, "trim: range outside series");
  SeriesMatrix out;
  out.values = s.values.middleCols(t_begin - s.t_start, t_end - t_begin);
  out.t_start = t_begin;
  out.label = s.label;
  return out;
}

/// Restrict X, Y (and Z when present) to their common time range.
inline void align(SeriesMatrix& x, SeriesMatrix& y, SeriesMatrix* z = nullptr) {
  require(x.t_start == y.t_start && x.cols() == y.cols(), "align: X and Y must share their time range");
  std::int64_t lo = x.t_start;
  std::int64_t hi = x.t_end();
  if (z) {
    lo = std::max(lo, z->t_start);
    hi = std::min(hi, z->t_end());
  }
  if (lo >= hi) fail(ErrorKind::InvalidArgument, "align: X, Y and Z share no common time range");
  x = trim(x, lo, hi);
  y = trim(y, lo, hi);
  if (z) *z = trim(*z, lo, hi);
}

/// Cross moments G0 = (1/m) X Z^*, G1 = (1/m) Y Z^* of a Hankel embedding,
/// computed from the source series without forming X, Y, Z. Uses the shift
/// recurrence S[i+1][j+1] = S[i][j] - f(s+i) f(j)^* + f(s+m+i) f(m+j)^*.
struct CrossMoments {
  CMatrix G0;
  CMatrix G1;
  std::int64_t count = 0;  ///< number of snapshot columns averaged
  std::int64_t t_start = 0;
};

inline CrossMoments hankel_cross_moments(const SeriesMatrix& series, const EmbeddingPlan& plan) {
  require(plan.delays >= 1 && plan.dual_shift >= 0, "hankel_cross_moments: invalid plan");
  const std::int64_t n = series.cols();
  const std::int64_t m = plan.column_count(n);
  if (m < 1) fail(ErrorKind::InvalidArgument, "hankel_cross_moments: series shorter than k + s + 1");
  const Eigen::Index k = plan.delays;
  const Eigen::Index s = plan.dual_shift;
  const Eigen::Index nr = series.rows();

  CrossMoments out;
  out.G0.resize(nr * k, nr * k);
  out.G1.resize(nr * k, nr * k);
  out.count = m;
  out.t_start = series.t_start + s;

  std::vector<CVector> rows(static_cast<std::size_t>(nr));
  for (Eigen::Index r = 0; r < nr; ++r) rows[static_cast<std::size_t>(r)] = series.values.row(r).transpose();

  CMatrix sums(k + 1, k);
  for (Eigen::Index a = 0; a < nr; ++a) {
    const CVector& fa = rows[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < nr; ++b) {
      const CVector& fb = rows[static_cast<std::size_t>(b)];
      // S[i][j] = sum_{c<m} fa(s+c+i) conj(fb(c+j)), i = 0..k, j = 0..k-1
      for (Eigen::Index j = 0; j < k; ++j) sums(0, j) = fb.segment(j, m).dot(fa.segment(s, m));
      for (Eigen::Index i = 1; i <= k; ++i) sums(i, 0) = fb.segment(0, m).dot(fa.segment(s + i, m));
      for (Eigen::Index i = 1; i <= k; ++i) {
        for (Eigen::Index j = 1; j < k; ++j) {
          sums(i, j) = sums(i - 1, j - 1) - fa[s + i - 1] * std::conj(fb[j - 1]) +
                       fa[s + m + i - 1] * std::conj(fb[m + j - 1]);
        }
      }
      const double inv = 1.0 / static_cast<double>(m);
      out.G0.block(a * k, b * k, k, k) = sums.topRows(k) * inv;
      out.G1.block(a * k, b * k, k, k) = sums.bottomRows(k) * inv;
    }
  }
  return out;
}

/// weights * X for the Hankel X of `plan`, without forming X.
inline CMatrix hankel_project(const SeriesMatrix& series, const EmbeddingPlan& plan, const CMatrix& weights) {
  const std::int64_t m = plan.column_count(series.cols());
  if (m < 1) fail(ErrorKind::InvalidArgument, "hankel_project: series shorter than k + s + 1");
  const Eigen::Index k = plan.delays;
  const Eigen::Index s = plan.dual_shift;
  require(weights.cols() == series.rows() * k, "hankel_project: weight width must equal embedded row count");
  std::vector<CVector> rows(static_cast<std::size_t>(series.rows()));
  for (Eigen::Index r = 0; r < series.rows(); ++r) rows[static_cast<std::size_t>(r)] = series.values.row(r).transpose();
  // Materialize X one block of columns at a time and multiply.
  constexpr Eigen::Index block = 2048;
  CMatrix out(weights.rows(), m);
  CMatrix chunk(series.rows() * k, std::min<Eigen::Index>(block, m));
  for (Eigen::Index c0 = 0; c0 < m; c0 += block) {
    const Eigen::Index b = std::min<Eigen::Index>(block, m - c0);
    for (Eigen::Index c = 0; c < b; ++c)
      for (Eigen::Index r = 0; r < series.rows(); ++r)
        chunk.col(c).segment(r * k, k) = rows[static_cast<std::size_t>(r)].segment(s + c0 + c, k);
    out.middleCols(c0, b).noalias() = weights * chunk.leftCols(b);
  }
  return out;
}

// --- series file ----------------------------------------------------------------
//
//   # rdmd-series rows=<r> cols=<c> t_start=<t> label=<text to end of line>
//   re,im re,im ...     one line per time index (snapshot), r entries

inline void write_series(std::ostream& os, const SeriesMatrix& s) {
  os << "# rdmd-series rows=" << s.rows() << " cols=" << s.cols() << " t_start=" << s.t_start << " label=" << s.label
     << '\n';
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      if (r) os << ' ';
      os << format_double(s.values(r, c).real()) << ',' << format_double(s.values(r, c).imag());
    }
    os << '\n';
  }
}

inline void write_series(const std::string& path, const SeriesMatrix& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Format, "cannot open " + path + " for writing");
  write_series(os, s);
  if (!os) fail(ErrorKind::Format, "failed writing " + path);
}

inline SeriesMatrix read_series(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# rdmd-series", 0) != 0)
    fail(ErrorKind::Format, "series file must start with '# rdmd-series'");
  const auto label_pos = header.find(" label=");
  SeriesMatrix s;
  if (label_pos != std::string::npos) s.label = header.substr(label_pos + 7);
  const std::string fields = header.substr(0, label_pos);
  const auto rows = detail::parse_int(detail::header_field(fields, "rows"));
  const auto cols = detail::parse_int(detail::header_field(fields, "cols"));
  s.t_start = detail::parse_int(detail::header_field(fields, "t_start"));
  if (rows < 1 || cols < 1) fail(ErrorKind::Format, "series header: rows and cols must be >= 1");
  s.values.resize(rows, cols);
  std::string line;
  for (std::int64_t c = 0; c < cols; ++c) {
    if (!std::getline(is, line)) fail(ErrorKind::Format, "series file truncated at column " + std::to_string(c));
    std::istringstream ls(line);
    std::string cell;
    std::int64_t r = 0;
    while (ls >> cell) {
      if (r >= rows) fail(ErrorKind::Format, "series line " + std::to_string(c) + " has too many entries");
      const auto comma = cell.find(',');
      if (comma == std::string::npos) fail(ErrorKind::Format, "series entry '" + cell + "' is not 're,im'");
      s.values(r, c) = {detail::parse_double(cell.substr(0, comma)), detail::parse_double(cell.substr(comma + 1))};
      ++r;
    }
    if (r != rows) fail(ErrorKind::Format, "series line " + std::to_string(c) + " has too few entries");
  }
  return s;
}

inline SeriesMatrix read_series(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Format, "cannot open " + path);
  return read_series(is);
}

}  // namespace rdmd
