#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fxlab/rng.hpp"

namespace fxlab {

enum class DimKind { integer, continuous, log_continuous };

struct Dimension {
  std::string name;
  DimKind kind = DimKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
};

// Box search space. Positions are kept in internal coordinates: log dims
// live in log space, integer dims stay continuous and round only when a
// point is decoded for evaluation.
struct SearchSpace {
  std::vector<Dimension> dims;

  void validate() const;
  int size() const { return static_cast<int>(dims.size()); }
  double internal_lower(int j) const;
  double internal_upper(int j) const;
  double clamp(int j, double x) const;
  Eigen::VectorXd sample(Rng& rng) const;
  std::vector<double> decode(const Eigen::VectorXd& internal) const;
};

enum class Algo { pso, ga, cs, woa, bat };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

struct Swarm {
  Eigen::MatrixXd x;       // particles x dims, internal coordinates
  Eigen::MatrixXd v;
  Eigen::MatrixXd p_best;
  Eigen::VectorXd p_best_f;
  Eigen::VectorXd g_best;
  double g_best_f = 0.0;
  double w = 0.729;
  double c1 = 1.49445;
  double c2 = 1.49445;
};

// One velocity/position update: V' = w V + c1 r1 (Pbest - X) + c2 r2
// (Pgbest - X); X' = X + V'. r1, r2 are drawn per particle per dimension
// from `u01`; velocity is clamped to +-20% of each dimension's range and
// positions to the box. Bests are not touched (they move after the next
// evaluation).
void pso_step(Swarm& swarm, const SearchSpace& space,
              const std::function<double()>& u01);

struct OptimizeOptions {
  int population = 20;
  int iterations = 30;
  // PSO
  double w = 0.729;
  double c1 = 1.49445;
  double c2 = 1.49445;
  // GA
  double ga_crossover = 0.9;
  double ga_mutation = 0.1;
  double ga_mutation_sigma = 0.1;  // fraction of dimension range
  bool ga_elitism = true;
  // CS
  double cs_abandon = 0.25;
  double cs_levy_beta = 1.5;
  double cs_step_scale = 0.3;  // Levy flight scale relative to best-distance
  // WOA
  double woa_spiral_b = 1.0;
  // BAT
  double bat_f_min = 0.0;
  double bat_f_max = 2.0;
  double bat_loudness = 0.9;
  double bat_pulse = 0.5;
  double bat_alpha = 0.9;
  double bat_gamma = 0.9;
};

// Population state shared by the GA/CS/WOA/BAT updates.
struct Population {
  Eigen::MatrixXd x;  // members x dims, internal coordinates
  Eigen::VectorXd f;  // fitness of x
  Eigen::MatrixXd v;  // BAT velocities
  Eigen::VectorXd loudness;
  Eigen::VectorXd pulse_rate;
  Eigen::VectorXd best;  // incumbent position
  double best_f = 0.0;
  int iteration = 1;       // current generation, 1-based
  int max_iterations = 1;  // schedule horizon (WOA/BAT)
};

// One generation of candidate positions under the named canonical update.
// BAT velocity state advances in place; acceptance (greedy for CS,
// loudness-gated for BAT, generational for GA/WOA) happens in `optimize`
// once the candidates are evaluated.
Eigen::MatrixXd variant_step(Population& pop, Algo algo,
                             const SearchSpace& space,
                             const OptimizeOptions& opts, Rng& rng);

// Objective receives the decoded point and a deterministic evaluation seed.
using Objective =
    std::function<double(const std::vector<double>& point, std::uint64_t seed)>;

struct OptimizeResult {
  std::vector<double> best_point;  // decoded
  Eigen::VectorXd best_internal;
  double best_fitness = 0.0;
  std::vector<double> history;  // incumbent fitness per iteration
  int objective_errors = 0;
  std::vector<std::string> error_log;
  std::string run_log_csv;  // iteration, best_fitness, <one column per dim>
};

// Minimizes the objective. Iteration 1 evaluates the initial population;
// each later iteration applies one update step and re-evaluates. A throwing
// objective scores +inf for that member and the run continues. Fixed seed
// gives an identical trajectory.
OptimizeResult optimize(const Objective& objective, const SearchSpace& space,
                        Algo algo, const OptimizeOptions& opts,
                        std::uint64_t seed);

// Mantegna's algorithm for symmetric Levy-stable steps (used by CS).
double levy_step(double beta, Rng& rng);

}  // namespace fxlab
