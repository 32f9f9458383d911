#pragma once

// Exploration noise: an Ornstein-Uhlenbeck process blended with a decaying
// bias toward the reference generator's action,
//
//   n(t, s) = alpha(t) * ou(t) + beta(t) * G(s),
//   alpha(t) = max(1 - t/T1, 0),   beta(t) = max(1 - t/T2, 0).
//
// The same family provides the actor-loss weights
//   epsilon(t) = max(1 - t/Tmax, 0),   delta(t) = min(1 - epsilon(t), 1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include "td3fg/error.hpp"
#include "td3fg/generator.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"

namespace td3fg {

struct OUConfig {
  /// Mean-reversion rate.
  double zeta = 0.15;
  double sigma = 0.2;
  double mu = 0.0;
  double dt = 1.0;

  void validate() const {
    if (!(zeta > 0.0)) throw ConfigError("noise.zeta must be > 0");
    if (!(sigma >= 0.0)) throw ConfigError("noise.sigma must be >= 0");
    if (!(dt > 0.0)) throw ConfigError("noise.dt must be > 0");
  }

  bool operator==(const OUConfig&) const = default;
};

class OUState {
 public:
  OUState(std::size_t dim, OUConfig cfg, std::uint64_t seed)
      : cfg_(cfg), x_(dim, cfg.mu), mu_(dim, cfg.mu), rng_(seed) {
    cfg_.validate();
  }

  /// Euler-Maruyama step x <- x - zeta (x - mu) dt + sigma sqrt(dt) xi; returns x.
  const Vector& step() {
    const double diffusion = cfg_.sigma * std::sqrt(cfg_.dt);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double xi = normal_(rng_);
      x_[i] = x_[i] - cfg_.zeta * (x_[i] - mu_[i]) * cfg_.dt + diffusion * xi;
    }
    return x_;
  }

  /// Back to the long-run mean; called at each episode start.
  void reset() { x_ = mu_; }

  void set_value(std::span<const double> x) {
    if (x.size() != x_.size()) throw ShapeError("OUState::set_value: size mismatch");
    x_.assign(x.begin(), x.end());
  }

  const Vector& value() const noexcept { return x_; }
  const OUConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return x_.size(); }

 private:
  OUConfig cfg_;
  Vector x_;
  Vector mu_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline const Vector& ou_step(OUState& state) { return state.step(); }

struct ScheduleConfig {
  std::uint64_t tmax = 1;
  std::uint64_t t1 = 1;
  std::uint64_t t2 = 1;

  /// T1 = t1_frac * Tmax, T2 = t2_frac * Tmax (rounded, at least 1).
  static ScheduleConfig from_fractions(std::uint64_t tmax, double t1_frac, double t2_frac) {
    auto frac = [&](double f) {
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("schedule fractions must be in (0, 1]");
      return std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::llround(f * static_cast<double>(tmax))));
    };
    ScheduleConfig c{tmax, frac(t1_frac), frac(t2_frac)};
    c.validate();
    return c;
  }

  void validate() const {
    if (tmax == 0) throw ConfigError("schedule: Tmax must be positive");
    if (t1 == 0 || t1 > tmax) throw ConfigError("schedule: need 0 < T1 <= Tmax");
    if (t2 == 0 || t2 > tmax) throw ConfigError("schedule: need 0 < T2 <= Tmax");
  }

  bool operator==(const ScheduleConfig&) const = default;
};

namespace detail {
inline double linear_decay(double t, double horizon) { return std::max(1.0 - t / horizon, 0.0); }
}  // namespace detail

/// Weight on the OU term.
inline double alpha(double t, const ScheduleConfig& c) {
  return detail::linear_decay(t, static_cast<double>(c.t1));
}
/// Weight on the generator bias term.
inline double beta(double t, const ScheduleConfig& c) {
  return detail::linear_decay(t, static_cast<double>(c.t2));
}
/// Weight on the behavior-cloning term of the actor loss.
inline double epsilon(double t, const ScheduleConfig& c) {
  return detail::linear_decay(t, static_cast<double>(c.tmax));
}
/// Weight on the Q term of the actor loss.
inline double delta(double t, const ScheduleConfig& c) {
  return std::min(1.0 - epsilon(t, c), 1.0);
}

/// alpha(t) * ou_step(ou) + beta(t) * G(s). The OU process advances on every
/// call so its random stream does not depend on the schedule.
inline Vector composite_noise(double t, std::span<const double> state, OUState& ou,
                              const ReferenceGenerator& g, const ScheduleConfig& c) {
  if (!g.valid()) throw ConfigError("composite_noise: generator not trained");
  const Vector& ou_term = ou.step();
  const Vector ref = g.act(state);
  if (ref.size() != ou_term.size()) {
    throw ShapeError("composite_noise: generator output size != OU dimension");
  }
  const double a = alpha(t, c), b = beta(t, c);
  Vector n(ref.size());
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = a * ou_term[i] + b * ref[i];
  return n;
}

}  // namespace td3fg
