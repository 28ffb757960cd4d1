#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onlab {

enum class ErrorKind {
  ZeroVector,
  UnsupportedNorm,
  ConvergenceFailure,
  DimensionMismatch,
  GeometryError,
  ZeroJacobianProduct,
  NpHardCombination,
  NonFiniteLoss,
  RankDeficient,
  InvalidKind,
  ConfigError,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require_dims(std::size_t got, std::size_t want, std::string_view what) {
  if (got != want) {
    fail(ErrorKind::DimensionMismatch,
         std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
             std::to_string(got));
  }
}

}  // namespace onlab
