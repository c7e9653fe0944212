#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rdmd {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Error categories. The CLI maps each one to a stable exit code.
enum class ErrorKind {
  InvalidArgument,  // precondition violated by the caller
  Rank,             // requested rank exceeds the numerical rank
  Conditioning,     // a moment matrix is numerically rank deficient
  NearDefective,    // eigenvector matrix too ill-conditioned to invert
  Integration,      // SDE integration left the safety region
  Domain,           // observable evaluated outside its domain
  Format,           // malformed input file
  Config,           // invalid experiment configuration
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::NearDefective: return "near-defective";
    case ErrorKind::Integration: return "integration";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Format: return "format";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class RankError : public Error {
 public:
  RankError(const std::string& what, Eigen::Index largest_admissible)
      : Error(ErrorKind::Rank, what), largest_admissible_(largest_admissible) {}
  Eigen::Index largest_admissible() const noexcept { return largest_admissible_; }

 private:
  Eigen::Index largest_admissible_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, std::int64_t step)
      : Error(ErrorKind::Integration, what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace rdmd
