#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace drc {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

enum class ErrorCode {
  DimensionMismatch,
  EmptySupport,
  NegativeRadius,
  InvalidArgument,
  Infeasible,
  MaxIters,
  UnsupportedGFun,
  UnsupportedLoss,
  SlackResidual,
  InfeasibleSamplePlacement,
  MissingPairing,
  EmptyCutSet,
  LengthMismatch,
  IndexOutOfRange,
  SyntaxError,
  SchemaError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace drc
