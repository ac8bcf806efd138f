#pragma once

#include "pcbf/types.hpp"

namespace pcbf {

/// Conservative linear motion plan xdot = f(x) = -grad P(x) with
/// P(x) = (x - x*)^T Q (x - x*).
struct LinearDS {
  Vec attractor;
  Mat gain;  // Q, symmetric positive definite [1/s]

  static LinearDS isotropic(const Vec& attractor, double gain);

  std::size_t dim() const { return static_cast<std::size_t>(attractor.size()); }
  void validate() const;
};

/// f(x) = -2 Q (x - x*).
Vec eval_ds(const LinearDS& plan, const Vec& x);

/// P(x) = (x - x*)^T Q (x - x*).
double potential(const LinearDS& plan, const Vec& x);

}  // namespace pcbf
