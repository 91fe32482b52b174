#pragma once

#include <stdexcept>
#include <string>

namespace fluxcz {

// Raised when a basis or cutoff cannot reach the requested tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_delta)
      : std::runtime_error(what), last_delta_(last_delta) {}
  double last_delta() const { return last_delta_; }

 private:
  double last_delta_;
};

class CutoffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flux outside the region where the coupler has a positive Josephson energy.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double drift)
      : std::runtime_error(what), drift_(drift) {}
  double drift() const { return drift_; }

 private:
  double drift_;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fluxcz
