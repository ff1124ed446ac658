#ifndef SMOOTHRL_ERRORS_HPP_
#define SMOOTHRL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace smoothrl {

// Caller passed arguments that break an operation's precondition
// (dimension mismatch, out-of-range time, episode not done, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

class TrajectoryTooShort : public std::invalid_argument {
 public:
  explicit TrajectoryTooShort(const std::string& what)
      : std::invalid_argument("trajectory too short: " + what) {}
};

class EmptyTrajectory : public std::invalid_argument {
 public:
  EmptyTrajectory() : std::invalid_argument("empty trajectory") {}
};

class InfeasibleDemonstration : public std::invalid_argument {
 public:
  explicit InfeasibleDemonstration(const std::string& what)
      : std::invalid_argument("infeasible demonstration: " + what) {}
};

class EpisodeFinished : public std::logic_error {
 public:
  EpisodeFinished() : std::logic_error("episode finished") {}
};

// Non-finite values appeared in a network output, loss or gradient.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what)
      : std::runtime_error("numerical failure: " + what) {}
};

// Squashed action lies at or beyond the open action range, so its
// pre-squash preimage (and hence its density) is undefined.
class BoundaryAction : public std::domain_error {
 public:
  explicit BoundaryAction(const std::string& what)
      : std::domain_error("boundary action: " + what) {}
};

// Malformed file or configuration input.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smoothrl

#endif  // SMOOTHRL_ERRORS_HPP_
