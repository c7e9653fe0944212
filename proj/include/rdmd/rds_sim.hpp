#pragma once

// Random dynamical systems: seeded simulators and analytic stochastic Koopman
// spectra used as ground truth.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rdmd/linalg.hpp"
#include "rdmd/rng.hpp"
#include "rdmd/types.hpp"

namespace rdmd {

/// x_{t+1} = x_t + nu + pi_t (mod 2 pi), pi_t ~ U[-h, h].
struct RandomRotation {
  double nu = 0.5;
  double dyn_noise_halfwidth = 0.5;
  std::optional<double> initial_angle;  ///< default: uniform on [0, 2 pi)
};

/// x_{t+1} = A x_t + b_t with b_t uniform on [-h, h]^d.
struct NoisyLinear {
  RMatrix A = default_matrix();
  double forcing_halfwidth = 0.5;
  std::optional<RVector> initial_state;  ///< default: zero vector

  static RMatrix default_matrix() {
    RMatrix a(4, 4);
    a << 0.75, 0.5, 0.1, 2.0,
         0.0, 0.2, 0.8, 1.0,
         0.0, -0.8, 0.2, 0.5,
         0.0, 0.0, 0.0, -0.85;
    return a;
  }
};

/// Stochastic Stuart-Landau oscillator, integrated in Cartesian form:
///   dx = [(delta - r^2) x - (gamma - beta r^2) y] dt + eps dW_x
///   dy = [(gamma - beta r^2) x + (delta - r^2) y] dt + eps dW_y
struct StuartLandau {
  double gamma = 1.0;
  double beta = 1.0;
  double delta = 0.5;
  double epsilon = 0.05;
  double dt = 0.05;       ///< spacing of recorded samples
  int substeps = 1;       ///< Euler-Maruyama steps per recorded sample
  double safety_radius = 1e3;
  std::optional<RVector> initial_state;  ///< default: (sqrt(delta), 0)
};

using SystemSpec = std::variant<RandomRotation, NoisyLinear, StuartLandau>;

inline const char* system_name(const SystemSpec& spec) {
  return std::visit(
      [](const auto& s) -> const char* {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomRotation>) return "RandomRotation";
        else if constexpr (std::is_same_v<T, NoisyLinear>) return "NoisyLinear";
        else return "StuartLandau";
      },
      spec);
}

inline void validate(const SystemSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomRotation>) {
          require(s.dyn_noise_halfwidth >= 0.0, "RandomRotation: dyn_noise_halfwidth must be >= 0");
          require(std::isfinite(s.nu), "RandomRotation: nu must be finite");
        } else if constexpr (std::is_same_v<T, NoisyLinear>) {
          require(s.A.rows() == s.A.cols() && s.A.rows() > 0, "NoisyLinear: A must be square and nonempty");
          require(s.forcing_halfwidth >= 0.0, "NoisyLinear: forcing_halfwidth must be >= 0");
          if (s.initial_state) require(s.initial_state->size() == s.A.rows(), "NoisyLinear: initial_state dimension");
        } else {
          require(s.epsilon >= 0.0, "StuartLandau: epsilon must be >= 0");
          require(s.dt > 0.0, "StuartLandau: dt must be > 0");
          require(s.substeps >= 1, "StuartLandau: substeps must be >= 1");
          require(s.safety_radius > 0.0, "StuartLandau: safety_radius must be > 0");
          if (s.initial_state) require(s.initial_state->size() == 2, "StuartLandau: initial_state must be 2-d");
        }
      },
      spec);
}

inline Eigen::Index state_dim(const SystemSpec& spec) {
  if (const auto* lin = std::get_if<NoisyLinear>(&spec)) return lin->A.rows();
  if (std::holds_alternative<StuartLandau>(spec)) return 2;
  return 1;
}

/// Model-time spacing between recorded samples.
inline double sample_dt(const SystemSpec& spec) {
  if (const auto* sl = std::get_if<StuartLandau>(&spec)) return sl->dt;
  return 1.0;
}

inline std::int64_t default_burn_in(const SystemSpec& spec) {
  if (std::holds_alternative<StuartLandau>(spec)) return 1000;
  return 0;
}

struct Trajectory {
  RMatrix states;  ///< one column per recorded sample
  double dt = 1.0;
  std::uint64_t seed = 0;
  std::int64_t burn_in_dropped = 0;

  Eigen::Index dim() const { return states.rows(); }
  Eigen::Index size() const { return states.cols(); }
};

inline double wrap_angle(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = x - two_pi * std::floor(x / two_pi);
  if (y >= two_pi) y = 0.0;
  return y;
}

namespace detail {

inline Trajectory simulate_rotation(const RandomRotation& s, std::int64_t n, std::uint64_t seed, std::int64_t burn_in) {
  Rng init(seed, "initial-condition");
  Rng dyn(seed, "dynamics");
  const double h = s.dyn_noise_halfwidth;
  double x = s.initial_angle ? wrap_angle(*s.initial_angle) : init.uniform(0.0, 2.0 * std::numbers::pi);
  auto step = [&] { x = wrap_angle(x + s.nu + (h > 0.0 ? dyn.uniform(-h, h) : 0.0)); };
  for (std::int64_t t = 0; t < burn_in; ++t) step();
  Trajectory out;
  out.states.resize(1, n);
  for (std::int64_t t = 0; t < n; ++t) {
    if (t > 0) step();
    out.states(0, t) = x;
  }
  return out;
}

inline Trajectory simulate_linear(const NoisyLinear& s, std::int64_t n, std::uint64_t seed, std::int64_t burn_in) {
  Rng dyn(seed, "dynamics");
  const Eigen::Index d = s.A.rows();
  const double h = s.forcing_halfwidth;
  RVector x = s.initial_state ? *s.initial_state : RVector::Zero(d);
  RVector next(d);
  auto step = [&] {
    next.noalias() = s.A * x;
    if (h > 0.0)
      for (Eigen::Index i = 0; i < d; ++i) next[i] += dyn.uniform(-h, h);
    x = next;
  };
  for (std::int64_t t = 0; t < burn_in; ++t) step();
  Trajectory out;
  out.states.resize(d, n);
  for (std::int64_t t = 0; t < n; ++t) {
    if (t > 0) step();
    out.states.col(t) = x;
  }
  return out;
}

inline Trajectory simulate_stuart_landau(const StuartLandau& s, std::int64_t n, std::uint64_t seed,
                                         std::int64_t burn_in) {
  Rng dyn(seed, "dynamics");
  const double h = s.dt / s.substeps;
  const double amp = s.epsilon * std::sqrt(h);
  double x = s.initial_state ? (*s.initial_state)[0] : std::sqrt(std::max(s.delta, 0.0));
  double y = s.initial_state ? (*s.initial_state)[1] : 0.0;
  std::int64_t recorded = -burn_in;  // index of the sample being produced

  auto step = [&] {
    for (int k = 0; k < s.substeps; ++k) {
      const double r2 = x * x + y * y;
      const double radial = s.delta - r2;
      const double angular = s.gamma - s.beta * r2;
      const double dx = (radial * x - angular * y) * h;
      const double dy = (angular * x + radial * y) * h;
      const double wx = amp > 0.0 ? amp * dyn.normal() : 0.0;
      const double wy = amp > 0.0 ? amp * dyn.normal() : 0.0;
      x += dx + wx;
      y += dy + wy;
    }
    if (!std::isfinite(x) || !std::isfinite(y) || std::hypot(x, y) > s.safety_radius) {
      std::ostringstream msg;
      msg << "Stuart-Landau integration diverged at sample " << recorded << " (|state| > " << s.safety_radius
          << ")";
      throw IntegrationError(msg.str(), recorded);
    }
  };

  for (; recorded < 0; ++recorded) step();
  Trajectory out;
  out.states.resize(2, n);
  for (std::int64_t t = 0; t < n; ++t) {
    recorded = t;
    if (t > 0) step();
    out.states(0, t) = x;
    out.states(1, t) = y;
  }
  return out;
}

}  // namespace detail

/// Simulate n_samples recorded states after discarding burn_in samples.
/// Identical arguments give bit-identical trajectories.
inline Trajectory simulate(const SystemSpec& spec, std::int64_t n_samples, std::uint64_t seed, std::int64_t burn_in) {
  require(n_samples >= 2, "simulate: n_samples must be >= 2");
  require(burn_in >= 0, "simulate: burn_in must be >= 0");
  validate(spec);
  Trajectory out = std::visit(
      [&](const auto& s) -> Trajectory {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomRotation>) return detail::simulate_rotation(s, n_samples, seed, burn_in);
        else if constexpr (std::is_same_v<T, NoisyLinear>) return detail::simulate_linear(s, n_samples, seed, burn_in);
        else return detail::simulate_stuart_landau(s, n_samples, seed, burn_in);
      },
      spec);
  out.dt = sample_dt(spec);
  out.seed = seed;
  out.burn_in_dropped = burn_in;
  return out;
}

// --- analytic spectra -------------------------------------------------------

enum class TimeScale { DiscreteUnitStep, ContinuousRate };

/// (l, n) for Stuart-Landau; rotation uses n only; linear uses n as a 1-based
/// index into the ordered eigenvalues of A.
struct ModeIndex {
  int l = 0;
  int n = 0;
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

struct TrueSpectrum {
  std::vector<cplx> eigenvalues;
  TimeScale time_scale = TimeScale::DiscreteUnitStep;
  std::string validity_note;
};

/// Rotation eigenvalue E[exp(i n (nu + pi))] for pi ~ U[-h, h].
inline cplx rotation_eigenvalue(const RandomRotation& s, int n) {
  const double nh = n * s.dyn_noise_halfwidth;
  const double damping = nh == 0.0 ? 1.0 : std::sin(nh) / nh;
  return std::polar(damping, n * s.nu);
}

/// Small-noise stochastic Koopman eigenvalue lambda_{l,n} (continuous time).
inline cplx stuart_landau_eigenvalue(const StuartLandau& s, int l, int n) {
  const double omega0 = s.gamma - s.beta * s.delta;
  if (l == 0) {
    const double re = -static_cast<double>(n) * n * s.epsilon * s.epsilon * (1.0 + s.beta * s.beta) / (2.0 * s.delta);
    return {re, n * omega0};
  }
  return {-2.0 * l * s.delta, n * omega0};
}

inline CVector linear_eigenvalues(const RMatrix& a) {
  Eigen::EigenSolver<RMatrix> solver(a, false);
  if (solver.info() != Eigen::Success) fail(ErrorKind::InvalidArgument, "linear_eigenvalues: solver failed");
  return sorted_spectrum(solver.eigenvalues());
}

inline TrueSpectrum true_spectrum(const SystemSpec& spec, const std::vector<ModeIndex>& index_set) {
  require(!index_set.empty(), "true_spectrum: empty index set");
  validate(spec);
  TrueSpectrum out;
  if (const auto* rot = std::get_if<RandomRotation>(&spec)) {
    for (const auto& m : index_set) out.eigenvalues.push_back(rotation_eigenvalue(*rot, m.n));
    out.validity_note = "exact: lambda_n = exp(i n nu) E[exp(i n pi)]";
  } else if (const auto* lin = std::get_if<NoisyLinear>(&spec)) {
    const CVector ev = linear_eigenvalues(lin->A);
    for (const auto& m : index_set) {
      require(m.n >= 1 && m.n <= ev.size(), "true_spectrum: linear mode index out of range");
      out.eigenvalues.push_back(ev[m.n - 1]);
    }
    out.validity_note = "exact: eigenvalues of A (zero-mean forcing)";
  } else {
    const auto& sl = std::get<StuartLandau>(spec);
    require(sl.delta > 0.0, "true_spectrum: Stuart-Landau formula requires delta > 0");
    for (const auto& m : index_set) {
      require(m.l >= 0, "true_spectrum: Stuart-Landau l must be >= 0");
      out.eigenvalues.push_back(stuart_landau_eigenvalue(sl, m.l, m.n));
    }
    out.time_scale = TimeScale::ContinuousRate;
    out.validity_note = "small-noise expansion: O(eps^4) error for l = 0, O(eps^2) for l > 0";
  }
  return out;
}

/// Convenience index sets.
inline std::vector<ModeIndex> symmetric_modes(int max_n, int l = 0) {
  std::vector<ModeIndex> out;
  for (int n = 1; n <= max_n; ++n) {
    out.push_back({l, n});
    out.push_back({l, -n});
  }
  return out;
}

inline std::vector<ModeIndex> all_linear_modes(Eigen::Index dim) {
  std::vector<ModeIndex> out;
  for (int i = 1; i <= dim; ++i) out.push_back({0, i});
  return out;
}

// --- trajectory file ----------------------------------------------------------
//
//   # rdmd-trajectory dt=<dt> seed=<seed> dim=<d> burn_in=<b> samples=<n>
//   x_0,x_1,...        one row per sample, 17 significant digits

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  os << "# rdmd-trajectory dt=" << format_double(traj.dt) << " seed=" << traj.seed << " dim=" << traj.dim()
     << " burn_in=" << traj.burn_in_dropped << " samples=" << traj.size() << '\n';
  for (Eigen::Index t = 0; t < traj.size(); ++t) {
    for (Eigen::Index i = 0; i < traj.dim(); ++i) {
      if (i) os << ',';
      os << format_double(traj.states(i, t));
    }
    os << '\n';
  }
}

inline void write_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Format, "cannot open " + path + " for writing");
  write_trajectory(os, traj);
  if (!os) fail(ErrorKind::Format, "failed writing " + path);
}

namespace detail {

inline std::string header_field(const std::string& header, const std::string& key) {
  std::istringstream is(header);
  std::string tok;
  while (is >> tok)
    if (tok.rfind(key + "=", 0) == 0) return tok.substr(key.size() + 1);
  fail(ErrorKind::Format, "missing header field '" + key + "'");
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::Format, "not a number: '" + s + "'");
  }
  if (used != s.size()) fail(ErrorKind::Format, "trailing characters in number: '" + s + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::Format, "not an integer: '" + s + "'");
  }
  if (used != s.size()) fail(ErrorKind::Format, "trailing characters in integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

inline Trajectory read_trajectory(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# rdmd-trajectory", 0) != 0)
    fail(ErrorKind::Format, "trajectory file must start with '# rdmd-trajectory'");
  Trajectory traj;
  traj.dt = detail::parse_double(detail::header_field(header, "dt"));
  try {
    traj.seed = std::stoull(detail::header_field(header, "seed"));
  } catch (const std::logic_error&) {
    fail(ErrorKind::Format, "trajectory header: seed is not an unsigned integer");
  }
  const auto dim = detail::parse_int(detail::header_field(header, "dim"));
  traj.burn_in_dropped = detail::parse_int(detail::header_field(header, "burn_in"));
  const auto n = detail::parse_int(detail::header_field(header, "samples"));
  if (dim < 1 || n < 2) fail(ErrorKind::Format, "trajectory header: dim >= 1 and samples >= 2 required");
  traj.states.resize(dim, n);
  std::string line;
  for (std::int64_t t = 0; t < n; ++t) {
    if (!std::getline(is, line)) fail(ErrorKind::Format, "trajectory file truncated at sample " + std::to_string(t));
    const auto cells = detail::split(line, ',');
    if (static_cast<std::int64_t>(cells.size()) != dim)
      fail(ErrorKind::Format, "trajectory row " + std::to_string(t) + " has wrong width");
    for (std::int64_t i = 0; i < dim; ++i) traj.states(i, t) = detail::parse_double(cells[static_cast<std::size_t>(i)]);
  }
  return traj;
}

inline Trajectory read_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Format, "cannot open " + path);
  return read_trajectory(is);
}

}  // namespace rdmd
