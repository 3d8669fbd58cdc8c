#pragma once

#include <stdexcept>
#include <string>

namespace morphkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values: non-positive epsilon, empty radius list, ...
struct ParameterError : Error {
  using Error::Error;
};

// Inputs violating a documented invariant: non-finite coordinates,
// face index out of range, size mismatches.
struct ValidationError : Error {
  using Error::Error;
};

// Malformed file contents. Carries the 1-based line number when known
// (0 for binary payloads).
class FormatError : public Error {
public:
  FormatError(const std::string& path, long line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

struct IoError : Error {
  using Error::Error;
};

// Geometric configurations with no defined answer: collinear landmark
// sets, meshes without faces, empty crops.
struct DegenerateInputError : Error {
  using Error::Error;
};

// Missing or inconsistent dataset entries (e.g. an expression sample
// without a neutral counterpart).
struct DataError : Error {
  using Error::Error;
};

// Normal equations that cannot be factorized or solved.
struct SolverError : Error {
  using Error::Error;
};

// A stage input file that does not exist. The CLI maps this to its own
// exit code, distinct from in-stage failures.
struct MissingInputError : Error {
  using Error::Error;
};

}  // namespace morphkit
