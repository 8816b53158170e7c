#pragma once

#include "cguide/types.hpp"

#include <cmath>
#include <functional>

namespace testutil {

// Central 5-point finite-difference gradient.
inline cguide::Vector fd_gradient(const std::function<double(const cguide::Vector&)>& f, const cguide::Vector& x,
                                  double h = 1e-3) {
  cguide::Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    cguide::Vector e = cguide::Vector::Zero(x.size());
    e[i] = h;
    g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h);
  }
  return g;
}

inline cguide::Vector vec(std::initializer_list<double> v) {
  cguide::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// log N(x; m, v) in one dimension, written out independently of the library.
inline double log_normal_1d(double x, double m, double v) {
  return -0.5 * std::log(2 * M_PI * v) - (x - m) * (x - m) / (2 * v);
}

}  // namespace testutil
