#include "fxlab/metaheuristics.hpp"

#include <algorithm>
#include <cmath>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"

namespace fxlab {

void SearchSpace::validate() const {
  if (dims.empty()) throw Error("search space: no dimensions");
  for (const auto& d : dims) {
    if (!(d.lower < d.upper))
      throw Error("search space: dimension '" + d.name + "' needs lower < upper");
    if (d.kind == DimKind::log_continuous && !(d.lower > 0))
      throw Error("search space: log dimension '" + d.name + "' needs lower > 0");
  }
}

double SearchSpace::internal_lower(int j) const {
  const auto& d = dims[static_cast<std::size_t>(j)];
  return d.kind == DimKind::log_continuous ? std::log(d.lower) : d.lower;
}

double SearchSpace::internal_upper(int j) const {
  const auto& d = dims[static_cast<std::size_t>(j)];
  return d.kind == DimKind::log_continuous ? std::log(d.upper) : d.upper;
}

double SearchSpace::clamp(int j, double x) const {
  return std::clamp(x, internal_lower(j), internal_upper(j));
}

Eigen::VectorXd SearchSpace::sample(Rng& rng) const {
  Eigen::VectorXd x(size());
  for (int j = 0; j < size(); ++j)
    x(j) = rng.uniform(internal_lower(j), internal_upper(j));
  return x;
}

std::vector<double> SearchSpace::decode(const Eigen::VectorXd& internal) const {
  if (internal.size() != size()) throw Error("decode: dimension mismatch");
  std::vector<double> out(dims.size());
  for (int j = 0; j < size(); ++j) {
    double x = clamp(j, internal(j));
    switch (dims[static_cast<std::size_t>(j)].kind) {
      case DimKind::integer:
        x = std::round(x);
        x = std::clamp(x, std::ceil(dims[static_cast<std::size_t>(j)].lower),
                       std::floor(dims[static_cast<std::size_t>(j)].upper));
        break;
      case DimKind::log_continuous:
        x = std::exp(x);
        break;
      case DimKind::continuous:
        break;
    }
    out[static_cast<std::size_t>(j)] = x;
  }
  return out;
}

std::string to_string(Algo a) {
  switch (a) {
    case Algo::pso: return "pso";
    case Algo::ga: return "ga";
    case Algo::cs: return "cs";
    case Algo::woa: return "woa";
    case Algo::bat: return "bat";
  }
  return "pso";
}

Algo algo_from_string(const std::string& s) {
  if (s == "pso") return Algo::pso;
  if (s == "ga") return Algo::ga;
  if (s == "cs") return Algo::cs;
  if (s == "woa") return Algo::woa;
  if (s == "bat") return Algo::bat;
  throw Error("unknown optimizer '" + s + "' (expected pso|ga|cs|woa|bat)");
}

void pso_step(Swarm& swarm, const SearchSpace& space,
              const std::function<double()>& u01) {
  const auto n = swarm.x.rows();
  const int d = space.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double r1 = u01();
      const double r2 = u01();
      double v = swarm.w * swarm.v(i, j) +
                 swarm.c1 * r1 * (swarm.p_best(i, j) - swarm.x(i, j)) +
                 swarm.c2 * r2 * (swarm.g_best(j) - swarm.x(i, j));
      const double v_max = 0.2 * (space.internal_upper(j) - space.internal_lower(j));
      v = std::clamp(v, -v_max, v_max);
      swarm.v(i, j) = v;
      swarm.x(i, j) = space.clamp(j, swarm.x(i, j) + v);
    }
  }
}

double levy_step(double beta, Rng& rng) {
  const double num = std::tgamma(1.0 + beta) * std::sin(M_PI * beta / 2.0);
  const double den =
      std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
  const double sigma_u = std::pow(num / den, 1.0 / beta);
  const double u = rng.gaussian() * sigma_u;
  const double v = rng.gaussian();
  return u / std::pow(std::abs(v), 1.0 / beta);
}

// size-2 tournament on current fitness
static Eigen::Index tournament(const Population& pop, Rng& rng) {
  const auto n = pop.x.rows();
  const auto a = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
  const auto b = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
  return pop.f(a) <= pop.f(b) ? a : b;
}

static Eigen::MatrixXd ga_step(const Population& pop, const SearchSpace& space,
                               const OptimizeOptions& opts, Rng& rng) {
  const auto n = pop.x.rows();
  const int d = space.size();
  Eigen::MatrixXd next(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd child;
    if (rng.u01() < opts.ga_crossover) {
      const auto pa = tournament(pop, rng);
      const auto pb = tournament(pop, rng);
      child.resize(d);
      for (int j = 0; j < d; ++j) {  // BLX-0.5 blend
        const double lo = std::min(pop.x(pa, j), pop.x(pb, j));
        const double hi = std::max(pop.x(pa, j), pop.x(pb, j));
        const double spread = hi - lo;
        child(j) = rng.uniform(lo - 0.5 * spread, hi + 0.5 * spread);
      }
    } else {
      child = pop.x.row(i);  // slot keeps its incumbent
    }
    for (int j = 0; j < d; ++j) {
      if (rng.u01() < opts.ga_mutation) {
        const double range = space.internal_upper(j) - space.internal_lower(j);
        child(j) += rng.gaussian() * opts.ga_mutation_sigma * range;
      }
      child(j) = space.clamp(j, child(j));
    }
    next.row(i) = child;
  }
  return next;
}

static Eigen::MatrixXd cs_step(const Population& pop, const SearchSpace& space,
                               const OptimizeOptions& opts, Rng& rng) {
  const auto n = pop.x.rows();
  const int d = space.size();
  Eigen::Index best_i = 0;
  pop.f.minCoeff(&best_i);
  Eigen::MatrixXd next(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double step = opts.cs_step_scale * levy_step(opts.cs_levy_beta, rng) *
                          (pop.x(i, j) - pop.best(j));
      next(i, j) = space.clamp(j, pop.x(i, j) + step);
    }
  }
  // abandon a fraction of the non-best nests outright
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == best_i) continue;
    if (rng.u01() < opts.cs_abandon)
      for (int j = 0; j < d; ++j)
        next(i, j) = rng.uniform(space.internal_lower(j), space.internal_upper(j));
  }
  return next;
}

static Eigen::MatrixXd woa_step(const Population& pop, const SearchSpace& space,
                                const OptimizeOptions& opts, Rng& rng) {
  const auto n = pop.x.rows();
  const int d = space.size();
  const double frac = pop.max_iterations > 1
                          ? static_cast<double>(pop.iteration - 1) /
                                static_cast<double>(pop.max_iterations - 1)
                          : 1.0;
  const double a = 2.0 * (1.0 - frac);  // shrinks 2 -> 0 over the run
  Eigen::MatrixXd next(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double A = 2.0 * a * rng.u01() - a;
    const double C = 2.0 * rng.u01();
    const double p = rng.u01();
    if (p < 0.5) {
      if (std::abs(A) < 1.0) {
        for (int j = 0; j < d; ++j) {
          const double dist = std::abs(C * pop.best(j) - pop.x(i, j));
          next(i, j) = pop.best(j) - A * dist;
        }
      } else {  // explore around a random whale
        const auto r = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
        for (int j = 0; j < d; ++j) {
          const double dist = std::abs(C * pop.x(r, j) - pop.x(i, j));
          next(i, j) = pop.x(r, j) - A * dist;
        }
      }
    } else {  // logarithmic spiral toward the best
      const double l = rng.uniform(-1.0, 1.0);
      for (int j = 0; j < d; ++j) {
        const double dist = std::abs(pop.best(j) - pop.x(i, j));
        next(i, j) = dist * std::exp(opts.woa_spiral_b * l) *
                         std::cos(2.0 * M_PI * l) +
                     pop.best(j);
      }
    }
    for (int j = 0; j < d; ++j) next(i, j) = space.clamp(j, next(i, j));
  }
  return next;
}

static Eigen::MatrixXd bat_step(Population& pop, const SearchSpace& space,
                                const OptimizeOptions& opts, Rng& rng) {
  const auto n = pop.x.rows();
  const int d = space.size();
  const double mean_loudness = pop.loudness.mean();
  Eigen::MatrixXd next(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double freq =
        opts.bat_f_min + (opts.bat_f_max - opts.bat_f_min) * rng.u01();
    for (int j = 0; j < d; ++j) {
      pop.v(i, j) += (pop.x(i, j) - pop.best(j)) * freq;
      next(i, j) = pop.x(i, j) + pop.v(i, j);
    }
    if (rng.u01() > pop.pulse_rate(i)) {
      // local walk around the incumbent, scaled by range and loudness
      for (int j = 0; j < d; ++j) {
        const double range = space.internal_upper(j) - space.internal_lower(j);
        next(i, j) = pop.best(j) + 0.05 * mean_loudness * range * rng.gaussian();
      }
    }
    for (int j = 0; j < d; ++j) next(i, j) = space.clamp(j, next(i, j));
  }
  return next;
}

Eigen::MatrixXd variant_step(Population& pop, Algo algo, const SearchSpace& space,
                             const OptimizeOptions& opts, Rng& rng) {
  switch (algo) {
    case Algo::ga: return ga_step(pop, space, opts, rng);
    case Algo::cs: return cs_step(pop, space, opts, rng);
    case Algo::woa: return woa_step(pop, space, opts, rng);
    case Algo::bat: return bat_step(pop, space, opts, rng);
    case Algo::pso: break;
  }
  throw Error("variant_step: pso uses pso_step");
}

OptimizeResult optimize(const Objective& objective, const SearchSpace& space,
                        Algo algo, const OptimizeOptions& opts,
                        std::uint64_t seed) {
  space.validate();
  if (opts.population < 1) throw Error("optimize: population must be >= 1");
  if (opts.iterations < 1) throw Error("optimize: iterations must be >= 1");

  Rng rng(seed);
  const int n = opts.population;
  const int d = space.size();

  OptimizeResult result;
  result.best_fitness = std::numeric_limits<double>::infinity();
  CsvBuilder log;
  {
    std::vector<std::string> head = {"iteration", "best_fitness"};
    for (const auto& dim : space.dims) head.push_back(dim.name);
    log.row(head);
  }

  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = space.sample(rng).transpose();

  auto evaluate = [&](const Eigen::MatrixXd& points, int iteration) {
    Eigen::VectorXd f(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const auto decoded = space.decode(points.row(i).transpose());
      const std::uint64_t eval_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
      double fit;
      try {
        fit = objective(decoded, eval_seed);
        if (std::isnan(fit)) throw Error("objective returned NaN");
      } catch (const std::exception& e) {
        fit = std::numeric_limits<double>::infinity();
        ++result.objective_errors;
        result.error_log.push_back("iteration " + std::to_string(iteration) +
                                   " member " + std::to_string(i) + ": " + e.what());
      }
      f(i) = fit;
      if (fit < result.best_fitness) {
        result.best_fitness = fit;
        result.best_internal = points.row(i).transpose();
      }
    }
    return f;
  };

  auto log_iteration = [&](int iteration) {
    std::vector<std::string> cells = {std::to_string(iteration),
                                      fmt_g(result.best_fitness)};
    if (result.best_internal.size() == d)
      for (double v : space.decode(result.best_internal)) cells.push_back(fmt_g(v));
    else
      for (int j = 0; j < d; ++j) cells.push_back("");
    log.row(cells);
    result.history.push_back(result.best_fitness);
  };

  Eigen::VectorXd f = evaluate(x, 1);
  log_iteration(1);

  if (algo == Algo::pso) {
    Swarm swarm;
    swarm.x = x;
    swarm.v = Eigen::MatrixXd::Zero(n, d);
    swarm.p_best = x;
    swarm.p_best_f = f;
    swarm.w = opts.w;
    swarm.c1 = opts.c1;
    swarm.c2 = opts.c2;
    Eigen::Index g = 0;
    swarm.p_best_f.minCoeff(&g);
    swarm.g_best = swarm.p_best.row(g).transpose();
    swarm.g_best_f = swarm.p_best_f(g);

    for (int iter = 2; iter <= opts.iterations; ++iter) {
      pso_step(swarm, space, [&rng] { return rng.u01(); });
      Eigen::VectorXd fx = evaluate(swarm.x, iter);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (fx(i) < swarm.p_best_f(i)) {
          swarm.p_best_f(i) = fx(i);
          swarm.p_best.row(i) = swarm.x.row(i);
        }
        if (swarm.p_best_f(i) < swarm.g_best_f) {
          swarm.g_best_f = swarm.p_best_f(i);
          swarm.g_best = swarm.p_best.row(i).transpose();
        }
      }
      log_iteration(iter);
    }
  } else {
    Population pop;
    pop.x = x;
    pop.f = f;
    pop.v = Eigen::MatrixXd::Zero(n, d);
    pop.loudness = Eigen::VectorXd::Constant(n, opts.bat_loudness);
    pop.pulse_rate = Eigen::VectorXd::Constant(n, opts.bat_pulse);
    pop.best = result.best_internal;
    pop.best_f = result.best_fitness;
    pop.max_iterations = std::max(1, opts.iterations - 1);

    for (int iter = 2; iter <= opts.iterations; ++iter) {
      pop.iteration = iter - 1;
      Eigen::MatrixXd cand = variant_step(pop, algo, space, opts, rng);
      Eigen::VectorXd fc = evaluate(cand, iter);
      switch (algo) {
        case Algo::ga: {
          Eigen::VectorXd prev_best = pop.best;
          const double prev_best_f = pop.best_f;
          pop.x = cand;
          pop.f = fc;
          if (opts.ga_elitism && prev_best_f < pop.f.minCoeff()) {
            Eigen::Index worst = 0;
            pop.f.maxCoeff(&worst);
            pop.x.row(worst) = prev_best.transpose();
            pop.f(worst) = prev_best_f;
          }
          break;
        }
        case Algo::cs:
          for (Eigen::Index i = 0; i < n; ++i)
            if (fc(i) < pop.f(i)) {
              pop.f(i) = fc(i);
              pop.x.row(i) = cand.row(i);
            }
          break;
        case Algo::woa:
          pop.x = cand;
          pop.f = fc;
          break;
        case Algo::bat:
          for (Eigen::Index i = 0; i < n; ++i) {
            if (rng.u01() < pop.loudness(i) && fc(i) <= pop.f(i)) {
              pop.f(i) = fc(i);
              pop.x.row(i) = cand.row(i);
              pop.loudness(i) *= opts.bat_alpha;
              pop.pulse_rate(i) =
                  opts.bat_pulse *
                  (1.0 - std::exp(-opts.bat_gamma * pop.iteration));
            }
          }
          break;
        case Algo::pso: break;
      }
      if (result.best_fitness < pop.best_f) {
        pop.best_f = result.best_fitness;
        pop.best = result.best_internal;
      }
      log_iteration(iter);
    }
  }

  if (result.best_internal.size() != d)
    throw Error("optimize: every objective evaluation failed");
  result.best_point = space.decode(result.best_internal);
  result.run_log_csv = log.body();
  return result;
}

}  // namespace fxlab
