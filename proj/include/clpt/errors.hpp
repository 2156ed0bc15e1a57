#pragma once

#include <stdexcept>
#include <string>

namespace clpt {

// Invalid user-supplied configuration or malformed input file.
// The CLI maps this family to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operands with incompatible dimensions (protocol lengths, sample counts).
struct ShapeMismatch : ConfigError {
  using ConfigError::ConfigError;
};

// The static Hamiltonian has a (near-)degenerate lowest level, so "the"
// ground state is ill-defined. Gap threshold lives at the call site.
struct DegenerateGroundState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An analysis op was asked for statistics it cannot form (too few runs,
// empty component after exclusion, lost component tracking).
struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientRuns : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct EmptyAfterExclusion : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct TrackingLost : AnalysisError {
  using AnalysisError::AnalysisError;
};

// Cluster structure survived every beta in a scan; no collapse scale exists.
// Callers that treat this as a warning catch it and carry on.
struct NoCollapse : AnalysisError {
  using AnalysisError::AnalysisError;
};

// Filesystem/serialization failure. Maps to exit code 3 in the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace clpt
