#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "swarmxai/common.hpp"

namespace swarmxai {

/// Swarm parameters. Defaults: ten particles, thirty iterations, initial
/// velocities in [-1, 1], constriction 0.729 with acceleration draws in
/// [0, 2.05], ring half-width 1, positions clamped to [0, 10].
struct SwarmConfig {
  std::size_t n_particles = 10;
  std::size_t iterations = 30;
  double v_min = -1.0;
  double v_max = 1.0;
  double chi = 0.729;
  double phi_max = 2.05;
  std::size_t k = 1;
  double w_min = 0.0;
  double w_max = 10.0;

  void validate() const {
    std::ostringstream why;
    if (n_particles < 2) why << "n_particles must be >= 2; ";
    if (iterations < 1) why << "iterations must be >= 1; ";
    if (!(v_min < v_max)) why << "v_min must be < v_max; ";
    if (!(chi > 0.0 && chi < 1.0)) why << "chi must lie in (0, 1); ";
    if (!(phi_max >= 0.0)) why << "phi_max must be >= 0; ";
    if (k < 1 || k >= n_particles) why << "k must lie in [1, n_particles); ";
    if (!(w_min < 1.0 && 1.0 < w_max)) why << "need w_min < 1 < w_max; ";
    if (auto s = why.str(); !s.empty()) throw Error("invalid swarm config: " + s);
  }

  friend bool operator==(const SwarmConfig&, const SwarmConfig&) = default;
};

/// A scored perturbation weight.
struct Candidate {
  double fitness = 0.0;
  double weight = 1.0;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline constexpr double kFitnessTolerance = 1e-12;

/// Selection rule: a larger performance drop always wins; on an equal,
/// non-zero drop the weight closer to one wins. Zero-drop candidates never
/// displace an incumbent of equal fitness.
inline bool better(const Candidate& candidate, const Candidate& incumbent) noexcept {
  if (candidate.fitness > incumbent.fitness + kFitnessTolerance) return true;
  const bool tie = std::abs(candidate.fitness - incumbent.fitness) <= kFitnessTolerance;
  return tie && candidate.fitness != 0.0 &&
         std::abs(1.0 - candidate.weight) < std::abs(1.0 - incumbent.weight);
}

/// Ring neighbourhood of particle p: p-k .. p-1, p+1 .. p+k (mod n), first
/// occurrence kept, p itself excluded.
inline std::vector<std::size_t> ring_neighbors(std::size_t p, std::size_t k, std::size_t n) {
  if (n == 0 || p >= n) throw Error("ring_neighbors: particle index out of range");
  if (k < 1 || k >= n) throw Error("ring_neighbors: need 1 <= k < n");
  std::vector<std::size_t> out;
  auto push = [&](std::size_t j) {
    if (j != p && std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
  };
  for (std::size_t d = k; d >= 1; --d) push((p + n - d % n) % n);
  for (std::size_t d = 1; d <= k; ++d) push((p + d) % n);
  return out;
}

struct TraceRecord {
  std::size_t iteration = 0;
  std::size_t particle = 0;
  double weight = 1.0;
  double fitness = 0.0;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Everything one swarm run visited.
struct SwarmTrace {
  std::vector<TraceRecord> records;      // iteration-major, then particle
  std::vector<Candidate> personal_bests;  // one per particle, at the end of the run
  std::vector<double> final_positions;    // positions after the last update
  double baseline_fitness = 0.0;          // fitness at weight 1

  friend bool operator==(const SwarmTrace&, const SwarmTrace&) = default;
};

/// Maximises `fitness` over one perturbation weight.
///
/// All particles start at weight 1 (no perturbation) with their personal best
/// there as well; initial velocities are drawn per particle in index order.
/// Within an iteration particles are processed in index order: evaluate the
/// current position, update the personal best, pick the best personal best in
/// the ring neighbourhood, then apply the constricted velocity update with
/// fresh draws phi1 then phi2 and clamp the position to [w_min, w_max].
/// Velocities are left unchanged when a position is clamped.
template <typename Fitness>
SwarmTrace run_pso(const SwarmConfig& config, Fitness&& fitness, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.n_particles;

  auto evaluate = [&](double w) {
    const double f = fitness(w);
    if (!(f >= 0.0 && f <= 1.0)) {
      std::ostringstream msg;
      msg << "fitness returned " << f << " at weight " << w << "; expected a value in [0, 1]";
      throw Error(msg.str());
    }
    return f;
  };

  Rng rng(seed);
  std::vector<double> position(n, 1.0);
  std::vector<double> velocity(n);
  for (auto& v : velocity) v = rng.uniform(config.v_min, config.v_max);

  SwarmTrace trace;
  trace.baseline_fitness = evaluate(1.0);
  std::vector<Candidate> best(n, Candidate{trace.baseline_fitness, 1.0});
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t p = 0; p < n; ++p) neighbors[p] = ring_neighbors(p, config.k, n);

  trace.records.reserve(n * config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t p = 0; p < n; ++p) {
      const Candidate current{evaluate(position[p]), position[p]};
      trace.records.push_back({it, p, current.weight, current.fitness});
      if (better(current, best[p])) best[p] = current;

      std::size_t g = p;
      for (std::size_t j : neighbors[p]) {
        if (better(best[j], best[g])) g = j;
      }

      const double phi1 = rng.uniform(0.0, config.phi_max);
      const double phi2 = rng.uniform(0.0, config.phi_max);
      velocity[p] = config.chi * (velocity[p] + phi1 * (best[p].weight - position[p]) +
                                  phi2 * (best[g].weight - position[p]));
      position[p] = std::clamp(position[p] + velocity[p], config.w_min, config.w_max);
    }
  }
  trace.personal_bests = std::move(best);
  trace.final_positions = std::move(position);
  return trace;
}

}  // namespace swarmxai
