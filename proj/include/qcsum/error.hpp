#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qcsum {

/// Machine-readable failure categories. The CLI prints these names verbatim.
enum class ErrorCode {
  InvalidArgument,
  LengthMismatch,
  UnknownFamily,
  NonFiniteValue,
  InvalidMesh,
  ClusterOverlap,
  VariableRadius,
  SingularSystem,
  NewtonDivergence,
  LossOfConvexity,
  IllPosed,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::ClusterOverlap: return "ClusterOverlap";
    case ErrorCode::VariableRadius: return "VariableRadius";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::LossOfConvexity: return "LossOfConvexity";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace detail
}  // namespace qcsum
