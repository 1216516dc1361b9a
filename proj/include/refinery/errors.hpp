#pragma once

#include <stdexcept>
#include <string>

namespace refinery {

enum class ErrorKind {
    DanglingEndpoint,
    DuplicateId,
    ParseError,
    InvariantViolation,
    LayoutMismatch,
    InvalidSchedule,
    BudgetExceeded,
    LpInfeasible,
    IoError,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

}  // namespace refinery
