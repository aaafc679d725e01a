#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace platoon {

using Vec = Eigen::VectorXd;

/// Scenario or parameter rejected before any stepping happened.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Two consecutive vehicles are coincident (the barrier has diverged).
class CollisionError : public std::domain_error {
 public:
  CollisionError(const std::string& what, int follower_index)
      : std::domain_error(what), follower_index_(follower_index) {}
  /// Index k of the follower in the offending pair (k-1, k); -1 if unknown.
  int follower_index() const noexcept { return follower_index_; }

 private:
  int follower_index_ = -1;
};

/// A state or derivative went non-finite during integration.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int agent_index)
      : std::runtime_error(what), agent_index_(agent_index) {}
  int agent_index() const noexcept { return agent_index_; }

 private:
  int agent_index_ = -1;
};

/// Step-halving guard ran out of depth near the barrier.
class StiffnessError : public DivergenceError {
 public:
  StiffnessError(const std::string& what, int agent_index, double gap)
      : DivergenceError(what, agent_index), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_ = 0.0;
};

}  // namespace platoon
