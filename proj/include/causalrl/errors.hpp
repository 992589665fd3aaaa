#pragma once

#include <stdexcept>
#include <string>

namespace causalrl {

/// A feasibility-constrained problem (linear program, interval credal set)
/// admits no solution.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear program's objective is unbounded in the requested direction.
class UnboundedError : public std::runtime_error {
  public:
    explicit UnboundedError(const std::string& what) : std::runtime_error(what) {}
};

/// A combinatorial enumeration would exceed its configured cap.
class EnumerationLimitError : public std::runtime_error {
  public:
    explicit EnumerationLimitError(const std::string& what) : std::runtime_error(what) {}
};

/// A file could not be opened, read, or written.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace causalrl
