#include "onlab/error.hpp"

namespace onlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::UnsupportedNorm: return "UnsupportedNorm";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::ZeroJacobianProduct: return "ZeroJacobianProduct";
    case ErrorKind::NpHardCombination: return "NpHardCombination";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InvalidKind: return "InvalidKind";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace onlab
