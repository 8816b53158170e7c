#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace cguide {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Score field s(x, t) -> R^d. All composed guidance fields share this type.
using ScoreField = std::function<Vector(const Vector& x, double t)>;

// Error taxonomy. Each maps onto one CLI exit code (usage/config = 1,
// numeric = 2) in tools/.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace cguide
