#pragma once

#include <cmath>

namespace cguide {

/// Binary generative classifier in log space:
///   p+ q+^g / (p+ q+^g + p- q-^g),  q+- = exp(log_pos), exp(log_neg).
/// Returns log of that probability and of its complement.
struct ClassifierLogits {
  double log_pos;  // log p(c | x)
  double log_neg;  // log (1 - p(c | x))
};

inline ClassifierLogits classifier_logits(double log_pos, double log_neg, double gamma,
                                          double prior_pos, double prior_neg) {
  const double a = std::log(prior_pos) + gamma * log_pos;
  const double b = std::log(prior_neg) + gamma * log_neg;
  const double m = std::max(a, b);
  const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
  return {a - lse, b - lse};
}

}  // namespace cguide
