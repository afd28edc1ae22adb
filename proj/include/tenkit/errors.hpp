#pragma once

#include <stdexcept>
#include <string>

namespace tenkit {

// Error categories map onto the CLI exit-code contract:
//   kFormat     -> exit 1 (I/O or format problems)
//   kInfeasible -> exit 2 (infeasible spec / unsupported combination)
//   kMismatch   -> exit 3 (comparison mismatch)
enum class ErrorCategory { kFormat = 1, kInfeasible = 2, kMismatch = 3 };

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorCategory cat, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)), cat_(cat) {}
  const std::string& kind() const { return kind_; }
  ErrorCategory category() const { return cat_; }

 private:
  std::string kind_;
  ErrorCategory cat_;
};

#define TENKIT_ERROR(Name, Cat)                                       \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& msg) : Error(#Name, Cat, msg) {} \
  }

// I/O and serialization.
TENKIT_ERROR(FormatError, ErrorCategory::kFormat);
TENKIT_ERROR(IndexError, ErrorCategory::kFormat);
TENKIT_ERROR(BoundsError, ErrorCategory::kFormat);
TENKIT_ERROR(DuplicateError, ErrorCategory::kFormat);
TENKIT_ERROR(ParseError, ErrorCategory::kFormat);

// Argument and domain checks.
TENKIT_ERROR(ArityError, ErrorCategory::kInfeasible);
TENKIT_ERROR(DomainError, ErrorCategory::kInfeasible);
TENKIT_ERROR(EmptyDomainError, ErrorCategory::kInfeasible);
TENKIT_ERROR(NonPositiveCountError, ErrorCategory::kInfeasible);
TENKIT_ERROR(CapacityError, ErrorCategory::kInfeasible);
TENKIT_ERROR(OverflowError, ErrorCategory::kInfeasible);

// Extraction.
TENKIT_ERROR(UnsupportedOrderError, ErrorCategory::kInfeasible);
TENKIT_ERROR(UnsupportedCombination, ErrorCategory::kInfeasible);
TENKIT_ERROR(OracleCapError, ErrorCategory::kInfeasible);
TENKIT_ERROR(GroupingMemoryError, ErrorCategory::kInfeasible);

// Generation.
TENKIT_ERROR(EmptySpecError, ErrorCategory::kInfeasible);
TENKIT_ERROR(InfeasibleSpecError, ErrorCategory::kInfeasible);
TENKIT_ERROR(IncompleteFeatureError, ErrorCategory::kInfeasible);

#undef TENKIT_ERROR

}  // namespace tenkit
