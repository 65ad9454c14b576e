#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tensekit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// scene file is malformed or semantically invalid
struct SceneError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// argument outside the mathematical domain of an operation
struct DomainError : Error {
  using Error::Error;
};

// constraint Jacobian lost row rank (singular point of the variety)
struct RankDeficient : Error {
  using Error::Error;
};

// a guarded vector norm fell below the degeneracy threshold
struct DegenerateConfiguration : Error {
  using Error::Error;
};

// path tracking hit an ill-conditioned Jacobian; t is the failing parameter
struct SingularJacobian : Error {
  double t;
  SingularJacobian(const std::string& msg, double at) : Error(msg), t(at) {}
};

// corrector or subdivision budget exhausted; t is the failing parameter
struct NoConvergence : Error {
  double t;
  NoConvergence(const std::string& msg, double at) : Error(msg), t(at) {}
};

struct MaxIterations : Error {
  using Error::Error;
};

// 64-bit FNV-1a, used to fingerprint scene files in trace metadata
std::uint64_t fnv1a(const std::string& data);

// verbosity from TENSEKIT_LOG: quiet (default), info, debug
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// shortest round-trippable decimal for a double
std::string format_double(double v);

}  // namespace tensekit
