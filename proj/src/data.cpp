#include "damplqr/data.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "damplqr/errors.hpp"

namespace damplqr {

namespace {

constexpr double kBlowupLimit = 1e12;
constexpr double kChannelPhaseOffset = 2.399963;  // golden angle, rad

// [0, 1) double from the top 53 bits; identical across platforms, unlike
// std::uniform_real_distribution.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_draw(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_draw(rng);
}

Vector random_state(std::mt19937_64& rng, int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = uniform_draw(rng, -1.0, 1.0);
  return x;
}

Vector probe_input(const NoiseConfig& noise, std::mt19937_64& rng, int n_u,
                   int k) {
  Vector u(n_u);
  if (noise.kind == NoiseConfig::Kind::kUniform) {
    for (int ch = 0; ch < n_u; ++ch)
      u[ch] = uniform_draw(rng, noise.lo, noise.hi);
    return u;
  }
  for (int ch = 0; ch < n_u; ++ch) {
    double value = 0.0;
    for (std::size_t i = 0; i < noise.frequencies.size(); ++i) {
      const double phase = i < noise.phases.size() ? noise.phases[i] : 0.0;
      value += noise.amplitudes[i] *
               std::cos(noise.frequencies[i] * k + phase +
                        ch * kChannelPhaseOffset);
    }
    u[ch] = value;
  }
  return u;
}

}  // namespace

int required_rank(int n_x, int n_u) {
  return (n_x + n_u) * (n_x + n_u + 1) / 2;
}

NoiseConfig NoiseConfig::uniform(double lo, double hi, std::uint64_t seed) {
  if (!(lo < hi))
    throw std::invalid_argument("NoiseConfig: uniform bounds need lo < hi");
  NoiseConfig c;
  c.kind = Kind::kUniform;
  c.lo = lo;
  c.hi = hi;
  c.seed = seed;
  return c;
}

NoiseConfig NoiseConfig::sinusoid_mix(std::vector<double> frequencies,
                                      std::vector<double> amplitudes,
                                      std::uint64_t seed,
                                      std::vector<double> phases) {
  if (frequencies.empty() || frequencies.size() != amplitudes.size())
    throw std::invalid_argument(
        "NoiseConfig: sinusoid mix needs matching frequency/amplitude lists");
  for (double a : amplitudes)
    if (!std::isfinite(a))
      throw std::invalid_argument("NoiseConfig: amplitudes must be finite");
  NoiseConfig c;
  c.kind = Kind::kSinusoidMix;
  c.frequencies = std::move(frequencies);
  c.amplitudes = std::move(amplitudes);
  c.phases = std::move(phases);
  c.seed = seed;
  return c;
}

NoiseConfig NoiseConfig::parse(const std::string& text, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  try {
    if (parts.size() == 3 && parts[0] == "uniform")
      return uniform(std::stod(parts[1]), std::stod(parts[2]), seed);
    if (parts.size() == 3 && parts[0] == "sines") {
      auto split = [](const std::string& s) {
        std::vector<double> out;
        std::stringstream inner(s);
        std::string tok;
        while (std::getline(inner, tok, ',')) out.push_back(std::stod(tok));
        return out;
      };
      return sinusoid_mix(split(parts[1]), split(parts[2]), seed);
    }
  } catch (const std::invalid_argument&) {
    // fall through to the ConfigError below
  }
  throw ConfigError("unrecognized noise spec '" + text +
                    "' (expected uniform:<lo>:<hi> or sines:<f,..>:<a,..>)");
}

SamplePool collect(const SystemModel& sys, const NoiseConfig& noise,
                   int n_samples, int reset_every,
                   const std::optional<Vector>& x0) {
  if (n_samples <= 0)
    throw std::invalid_argument("collect: n_samples must be positive");
  if (reset_every < 1)
    throw std::invalid_argument("collect: reset_every must be >= 1");
  if (x0 && x0->size() != sys.n_x())
    throw std::invalid_argument("collect: x0 dimension mismatch");

  std::mt19937_64 rng(noise.seed);
  SamplePool pool;
  pool.n_x = sys.n_x();
  pool.n_u = sys.n_u();
  pool.seed = noise.seed;
  pool.samples.reserve(n_samples);

  Vector x = x0 ? *x0 : random_state(rng, sys.n_x());
  for (int k = 0; k < n_samples; ++k) {
    if (k > 0 && k % reset_every == 0) x = random_state(rng, sys.n_x());
    const Vector u = probe_input(noise, rng, sys.n_u(), k);
    const Vector x_next = sys.A * x + sys.B * u;
    if (x_next.cwiseAbs().maxCoeff() > kBlowupLimit)
      throw ConvergenceError("collect: trajectory blow-up; reduce reset_every");
    pool.samples.push_back({x, u, x_next});
    x = x_next;
  }
  return pool;
}

XiBlocks build_xi(const SamplePool& pool) {
  if (pool.samples.empty())
    throw std::invalid_argument("build_xi: empty sample pool");
  const int s = pool.size();
  const int n_x = pool.n_x;
  const int n_u = pool.n_u;
  XiBlocks xi{Matrix(s, n_x * (n_x + 1) / 2), Matrix(s, n_x * n_x),
              Matrix(s, n_u * n_x), Matrix(s, n_u * (n_u + 1) / 2),
              Matrix(s, n_x * (n_x + 1) / 2)};
  for (int t = 0; t < s; ++t) {
    const Sample& smp = pool.samples[t];
    xi.xi1.row(t) = (vecv(smp.x_next) - vecv(smp.x)).transpose();
    xi.xi2.row(t) = kron(smp.x, smp.x).transpose();
    xi.xi3.row(t) = kron(smp.u, smp.x).transpose();
    xi.xi4.row(t) = vecv(smp.u).transpose();
    xi.xi5.row(t) = vecv(smp.x).transpose();
  }
  return xi;
}

Matrix build_xi6(const SamplePool& pool, const Matrix& K) {
  if (K.rows() != pool.n_u || K.cols() != pool.n_x)
    throw std::invalid_argument("build_xi6: gain dimension mismatch");
  const int s = pool.size();
  Matrix xi6(s, pool.n_u * (pool.n_u + 1) / 2);
  for (int t = 0; t < s; ++t)
    xi6.row(t) = vecv(K * pool.samples[t].x).transpose();
  return xi6;
}

GammaBlocks build_gamma(const SamplePool& pool, const Matrix& K) {
  if (K.rows() != pool.n_u || K.cols() != pool.n_x)
    throw std::invalid_argument("build_gamma: gain dimension mismatch");
  const int s = pool.size();
  const int n_z = pool.n_x + pool.n_u;
  GammaBlocks g{Matrix(s, n_z * (n_z + 1) / 2), Matrix(s, n_z * (n_z + 1) / 2)};
  Vector stacked(n_z);
  for (int t = 0; t < s; ++t) {
    const Sample& smp = pool.samples[t];
    stacked << smp.x, smp.u;
    g.X.row(t) = vecv(stacked).transpose();
    stacked << smp.x_next, -K * smp.x_next;
    g.x_next.row(t) = vecv(stacked).transpose();
  }
  return g;
}

namespace {

RankCheck check_rank(const Matrix& block, int required) {
  RankCheck check;
  check.required = required;
  Eigen::JacobiSVD<Matrix> svd(block);
  const Vector& sv = svd.singularValues();
  const double threshold =
      std::max(block.rows(), block.cols()) *
      std::numeric_limits<double>::epsilon() *
      (sv.size() > 0 ? sv[0] : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > threshold) ++rank;
  check.rank = rank;
  check.ok = rank >= required;
  check.margin = check.ok ? sv[required - 1] : 0.0;
  return check;
}

}  // namespace

RankCheck rank_condition_pi(const SamplePool& pool) {
  const XiBlocks xi = build_xi(pool);
  Matrix block(pool.size(),
               xi.xi2.cols() + xi.xi3.cols() + xi.xi4.cols());
  block << xi.xi2, xi.xi3, xi.xi4;
  return check_rank(block, required_rank(pool.n_x, pool.n_u));
}

RankCheck rank_condition_q(const SamplePool& pool) {
  const GammaBlocks g =
      build_gamma(pool, Matrix::Zero(pool.n_u, pool.n_x));
  return check_rank(g.X, required_rank(pool.n_x, pool.n_u));
}

}  // namespace damplqr
