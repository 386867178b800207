#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "damplqr/linalg.hpp"

namespace damplqr {

// One transition triple recorded from the probing trajectory.
struct Sample {
  Vector x;
  Vector u;
  Vector x_next;
};

// The single data batch both algorithms consume. Raw triples are the
// persisted artifact; every gain-dependent regression block is rebuilt from
// them, so the pool is collected once and never refreshed.
struct SamplePool {
  std::vector<Sample> samples;
  int n_x = 0;
  int n_u = 0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(samples.size()); }
};

// Number of independent quadratic monomials in (x, u); the column rank both
// excitation conditions require.
int required_rank(int n_x, int n_u);

struct NoiseConfig {
  enum class Kind { kUniform, kSinusoidMix };

  Kind kind = Kind::kUniform;
  double lo = -1.0;
  double hi = 1.0;
  // Sinusoid mix: u_ch(k) = sum_i amplitudes[i] * cos(frequencies[i] * k +
  // phases[i] + ch * 2.399963), phases defaulting to zero. The per-channel
  // offset keeps multi-input channels from collapsing onto one signal.
  std::vector<double> frequencies;
  std::vector<double> amplitudes;
  std::vector<double> phases;
  std::uint64_t seed = 0;

  static NoiseConfig uniform(double lo, double hi, std::uint64_t seed);
  static NoiseConfig sinusoid_mix(std::vector<double> frequencies,
                                  std::vector<double> amplitudes,
                                  std::uint64_t seed,
                                  std::vector<double> phases = {});
  // Accepts "uniform:<lo>:<hi>" or "sines:<f1,f2,...>:<a1,a2,...>".
  static NoiseConfig parse(const std::string& text, std::uint64_t seed);
};

// Simulates x(k+1) = A x(k) + B u(k) under the probing input and records one
// triple per step. The state restarts from a fresh uniform [-1,1]^n draw
// every reset_every steps so open-loop-unstable trajectories stay bounded;
// x0 sets the first state only (random when absent). Deterministic given
// noise.seed. Throws ConvergenceError on state blow-up (||x||_inf > 1e12).
SamplePool collect(const SystemModel& sys, const NoiseConfig& noise,
                   int n_samples, int reset_every = 10,
                   const std::optional<Vector>& x0 = std::nullopt);

// Gain-independent regression blocks, one row per sample:
//   xi1: vecv(x') - vecv(x)    xi2: x (x) x    xi3: u (x) x
//   xi4: vecv(u)               xi5: vecv(x)
struct XiBlocks {
  Matrix xi1, xi2, xi3, xi4, xi5;
};
XiBlocks build_xi(const SamplePool& pool);

// Gain-dependent block: row t = vecv(K x_t). Rebuilt each iteration.
Matrix build_xi6(const SamplePool& pool, const Matrix& K);

// Quadratic-form blocks for the Q-function regression:
//   X row t = vecv([x_t; u_t])
//   x_next row t = vecv([x'_t; -K x'_t])   (rebuilt per gain)
struct GammaBlocks {
  Matrix X;
  Matrix x_next;
};
GammaBlocks build_gamma(const SamplePool& pool, const Matrix& K);

struct RankCheck {
  bool ok = false;
  // The required-rank-th singular value of the tested block (0 when the
  // numeric rank falls short). [xi2 xi3 xi4] carries structurally repeated
  // columns, so its smallest singular value is always 0; this is the
  // meaningful margin.
  double margin = 0.0;
  int rank = 0;  // achieved numeric rank
  int required = 0;
};

// Excitation check for the value-function regression:
// rank([xi2 xi3 xi4]) == required_rank(n_x, n_u).
RankCheck rank_condition_pi(const SamplePool& pool);

// Excitation check for the Q-function regression: rank(Gamma_X) == required.
RankCheck rank_condition_q(const SamplePool& pool);

}  // namespace damplqr
