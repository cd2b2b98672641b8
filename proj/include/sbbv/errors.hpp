#pragma once

#include <stdexcept>
#include <string>

namespace sbbv {

// Typed failures. Each carries an actionable message; the CLI maps them
// to exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MalformedOperand : Error {
  using Error::Error;
};
struct EmptyTrace : Error {
  using Error::Error;
};
struct IdOutOfRange : Error {
  using Error::Error;
};
struct AllPadded : Error {
  using Error::Error;
};
struct MissingBBE : Error {
  using Error::Error;
};
struct EmptySet : Error {
  using Error::Error;
};
struct SetTooLarge : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct MissingRepresentativeCPI : Error {
  using Error::Error;
};
struct MatchNotInPool : Error {
  using Error::Error;
};
struct BudgetInfeasible : Error {
  using Error::Error;
};
struct ConfigInvalid : Error {
  using Error::Error;
};
struct MissingArtifact : Error {
  using Error::Error;
};
struct HashMismatch : Error {
  using Error::Error;
};

}  // namespace sbbv
