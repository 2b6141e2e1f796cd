#pragma once

#include <Eigen/Dense>
#include <functional>

namespace fxlab {

// Derivative-free simplex minimizer. Good enough for the handful of
// low-dimensional likelihood fits in this project.
struct NelderMeadResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  int evaluations = 0;
  bool converged = false;
};

NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& initial_step,
    int max_evaluations = 2000, double f_tolerance = 1e-10);

// P(T <= t) for Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

}  // namespace fxlab
