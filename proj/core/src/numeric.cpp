#include "fxlab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "fxlab/error.hpp"

namespace fxlab {

NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& initial_step,
    int max_evaluations, double f_tolerance) {
  const int n = int(x0.size());
  if (initial_step.size() != n) throw Error("nelder_mead: step size mismatch");

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  std::vector<Eigen::VectorXd> pts(std::size_t(n) + 1, x0);
  std::vector<double> vals(std::size_t(n) + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };

  for (int i = 1; i <= n; ++i) pts[std::size_t(i)](i - 1) += initial_step(i - 1);
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(pts.size());
  bool converged = false;
  while (evals < max_evaluations) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vals[std::size_t(a)] < vals[std::size_t(b)]; });
    const int best = order.front(), worst = order.back();
    const int second_worst = order[order.size() - 2];

    if (std::abs(vals[std::size_t(worst)] - vals[std::size_t(best)]) <
        f_tolerance * (std::abs(vals[std::size_t(best)]) + f_tolerance)) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i : order) {
      if (i != worst) centroid += pts[std::size_t(i)];
    }
    centroid /= double(n);

    Eigen::VectorXd reflected = centroid + alpha * (centroid - pts[std::size_t(worst)]);
    double fr = eval(reflected);
    if (fr < vals[std::size_t(best)]) {
      Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      double fe = eval(expanded);
      if (fe < fr) {
        pts[std::size_t(worst)] = expanded;
        vals[std::size_t(worst)] = fe;
      } else {
        pts[std::size_t(worst)] = reflected;
        vals[std::size_t(worst)] = fr;
      }
    } else if (fr < vals[std::size_t(second_worst)]) {
      pts[std::size_t(worst)] = reflected;
      vals[std::size_t(worst)] = fr;
    } else {
      Eigen::VectorXd contracted =
          centroid + rho * (pts[std::size_t(worst)] - centroid);
      double fc = eval(contracted);
      if (fc < vals[std::size_t(worst)]) {
        pts[std::size_t(worst)] = contracted;
        vals[std::size_t(worst)] = fc;
      } else {
        for (int i : order) {
          if (i == best) continue;
          pts[std::size_t(i)] =
              pts[std::size_t(best)] +
              sigma * (pts[std::size_t(i)] - pts[std::size_t(best)]);
          vals[std::size_t(i)] = eval(pts[std::size_t(i)]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] < vals[best]) best = i;
  }
  return {pts[best], vals[best], evals, converged};
}

double student_t_cdf(double t, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::cdf(dist, t);
}

}  // namespace fxlab
