#pragma once

#include <functional>

#include <Eigen/Core>

namespace scan {

struct NelderMeadOptions {
  double tolerance = 1e-9;   // stop once best and worst vertex values differ by less
  int max_evaluations = 500;
  Eigen::VectorXd initial_step;  // per-coordinate simplex edge; defaults to 0.1
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free unconstrained minimisation (Nelder-Mead downhill simplex
/// with the standard reflection/expansion/contraction/shrink coefficients).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace scan
