#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdv {

/// Invalid or inconsistent scenario input. Carries every failure found.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}
  explicit ConfigError(const std::string& problem) : ConfigError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s;
    for (const auto& m : p) {
      if (!s.empty()) s += "; ";
      s += m;
    }
    return s;
  }
  std::vector<std::string> problems_;
};

/// The consensus law does not render the relative closed loop Hurwitz.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigensolver failure, non-finite state, or similar numerical breakdown.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step = 0, double time = 0.0)
      : std::runtime_error(what), step_(step), time_(time) {}
  std::size_t step() const { return step_; }
  double time() const { return time_; }

 private:
  std::size_t step_;
  double time_;
};

}  // namespace rdv
