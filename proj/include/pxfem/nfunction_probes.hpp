#pragma once

// Randomized envelope probes for the pointwise N-function inequalities:
// each probe reports the empirical range of a ratio that the theory asserts
// is confined to a p-dependent band, uniformly in all other parameters.

#include <cmath>
#include <cstdint>

#include "pxfem/core.hpp"
#include "pxfem/nfunction.hpp"
#include "pxfem/quadrature.hpp"

namespace pxfem {

struct Envelope {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int n = 0;

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++n;
  }

  bool within(double lo_bound, double hi_bound) const {
    return n > 0 && lo >= lo_bound && hi <= hi_bound;
  }
};

namespace detail {

inline Vec2 random_point(Rng& rng) {
  return {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

inline Tensor polar(double r, double theta) {
  return Tensor::row2(r * std::cos(theta), r * std::sin(theta));
}

// Inverse of t -> phi_prime(fam,x,0,t) by bisection (strictly increasing).
inline double phi_prime_inverse(const PhiFamily& fam, Vec2 x, double y) {
  if (y <= 0.0) return 0.0;
  double hi = 1.0;
  while (phi_prime(fam, x, 0.0, hi) < y && hi < 1e280) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (phi_prime(fam, x, 0.0, mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Envelopes of the three flux-difference ratios over seeded tensor pairs.
// Draws mix independent magnitudes with relative perturbations so that both
// far-apart and nearly-equal pairs are exercised; the separation floor keeps
// the subtraction |F(P)-F(Q)| well above roundoff.
struct RatioEnvelopes {
  Envelope r1, r2, r3;
};

inline RatioEnvelopes flux_difference_envelope(const PhiFamily& fam,
                                               std::uint64_t seed,
                                               int draws) {
  Rng rng(seed);
  RatioEnvelopes env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double m = detail::log_uniform(rng, 1e-3, 1e3);
    Tensor P = detail::polar(m, uniform(rng, 0.0, 2.0 * M_PI));
    Tensor Q(1, 2);
    if (k % 4 == 0) {
      double s = detail::log_uniform(rng, 1e-5, 1.0);
      Q = P + detail::polar(m * s, uniform(rng, 0.0, 2.0 * M_PI));
    } else {
      Q = detail::polar(detail::log_uniform(rng, 1e-3, 1e3),
                        uniform(rng, 0.0, 2.0 * M_PI));
    }
    if ((P - Q).norm() < 1e-6 * std::max(P.norm(), Q.norm())) continue;
    auto r = flux_difference_ratios(fam, x, P, Q);
    env.r1.add(r.r1);
    env.r2.add(r.r2);
    env.r3.add(r.r3);
  }
  return env;
}

// phi_a(t) / (phi''(a) t^2) for t <= a.
inline Envelope shift_small_envelope(const PhiFamily& fam, std::uint64_t seed,
                                     int draws) {
  Rng rng(seed);
  Envelope env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double t = a * detail::log_uniform(rng, 1e-4, 1.0);
    env.add(phi_shifted(fam, x, a, t) /
            (phi_dprime(fam, x, 0.0, a) * t * t));
  }
  return env;
}

// phi_a(t) / phi(t) for t >= a.
inline Envelope shift_large_envelope(const PhiFamily& fam, std::uint64_t seed,
                                     int draws) {
  Rng rng(seed);
  Envelope env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double t = a / detail::log_uniform(rng, 1e-4, 1.0);
    env.add(phi_shifted(fam, x, a, t) / phi(fam, x, t));
  }
  return env;
}

// (phi_a)_b(t) / phi_{a+b}(t), the inner shift composed numerically from the
// shift definition (adaptive quadrature), not from the closed form.
inline Envelope double_shift_envelope(const PhiFamily& fam, std::uint64_t seed,
                                      int draws) {
  Rng rng(seed);
  Envelope env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double b = detail::log_uniform(rng, 1e-2, 1e2);
    double t = detail::log_uniform(rng, 1e-2, 1e2);
    double composed = integrate_1d(
        [&](double tau) {
          return tau == 0.0 ? 0.0
                            : phi_prime(fam, x, a, b + tau) / (b + tau) * tau;
        },
        0.0, t, 1e-12);
    env.add(composed / phi_shifted(fam, x, a + b, t));
  }
  return env;
}

// Empirical minimal constants C_delta in the change-of-shift bounds
//   phi_a(t)     <= C_delta phi_b(t)     + delta phi_a(|a-b|)
//   (phi_a)*(t)  <= C_delta (phi_b)*(t)  + delta phi_a(|a-b|)
// over seeded scalar shifts (the aligned case, which minimizes |a-b| and is
// therefore the sharp one).
struct ShiftChangeConstants {
  double primal;
  double dual;
};

inline ShiftChangeConstants change_of_shift_constants(const PhiFamily& fam,
                                                      double delta,
                                                      std::uint64_t seed,
                                                      int draws) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  Rng rng(seed);
  ShiftChangeConstants c{0.0, 0.0};
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double b = detail::log_uniform(rng, 1e-2, 1e2);
    double t = detail::log_uniform(rng, 1e-2, 1e2);
    double penalty = delta * phi_shifted(fam, x, a, std::abs(a - b));
    c.primal = std::max(
        c.primal,
        (phi_shifted(fam, x, a, t) - penalty) / phi_shifted(fam, x, b, t));
    c.dual = std::max(
        c.dual,
        (phi_conjugate(fam, x, a, t) - penalty) / phi_conjugate(fam, x, b, t));
  }
  return c;
}

// (phi_a)*(t) / (phi*)_{phi'(a)}(t); the denominator composes the shift of
// the conjugate from first principles: (phi*)'(s) = (phi')^{-1}(s).
inline Envelope conjugate_shift_envelope(const PhiFamily& fam,
                                         std::uint64_t seed, int draws) {
  Rng rng(seed);
  Envelope env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double t = detail::log_uniform(rng, 1e-2, 1e2);
    double c = phi_prime(fam, x, 0.0, a);
    double shifted_conj = integrate_1d(
        [&](double tau) {
          return tau == 0.0 ? 0.0
                            : detail::phi_prime_inverse(fam, x, c + tau) /
                                  (c + tau) * tau;
        },
        0.0, t, 1e-12);
    env.add(phi_conjugate(fam, x, a, t) / shifted_conj);
  }
  return env;
}

// The two scaling equivalences phi_a(lambda a) ~ lambda^2 phi(a) and
// (phi_a)*(lambda phi'(a)) ~ lambda^2 phi(a), for lambda in (0,1].
struct ShiftScaleEnvelopes {
  Envelope primal;
  Envelope dual;
};

inline ShiftScaleEnvelopes shift_scale_envelope(const PhiFamily& fam,
                                                std::uint64_t seed,
                                                int draws) {
  Rng rng(seed);
  ShiftScaleEnvelopes env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double lam = detail::log_uniform(rng, 1e-3, 1.0);
    double base = lam * lam * phi(fam, x, a);
    env.primal.add(phi_shifted(fam, x, a, lam * a) / base);
    env.dual.add(phi_conjugate(fam, x, a, lam * phi_prime(fam, x, 0.0, a)) /
                 base);
  }
  return env;
}

// Index scaling for lambda in (0,1]:
//   phi_a(lambda t)    <= c max{lambda^q,  lambda^2} phi_a(t)
//   (phi_a)*(lambda t) <= c max{lambda^q', lambda^2} (phi_a)*(t)
// with q = p(x).  Reports the envelope of ratio/bound (its hi is the
// empirical c).
inline ShiftScaleEnvelopes index_scaling_envelope(const PhiFamily& fam,
                                                  std::uint64_t seed,
                                                  int draws) {
  Rng rng(seed);
  ShiftScaleEnvelopes env;
  for (int k = 0; k < draws; ++k) {
    Vec2 x = detail::random_point(rng);
    double q = fam.exponent(x);
    double qc = q / (q - 1.0);
    double a = detail::log_uniform(rng, 1e-2, 1e2);
    double t = detail::log_uniform(rng, 1e-2, 1e2);
    double lam = detail::log_uniform(rng, 1e-3, 1.0);
    env.primal.add(phi_shifted(fam, x, a, lam * t) /
                   (std::max(std::pow(lam, q), lam * lam) *
                    phi_shifted(fam, x, a, t)));
    env.dual.add(phi_conjugate(fam, x, a, lam * t) /
                 (std::max(std::pow(lam, qc), lam * lam) *
                  phi_conjugate(fam, x, a, t)));
  }
  return env;
}

// Minimum of gap/(1+st) for the delta-Young inequality over a deterministic
// grid of (s, t, a, delta).
inline double young_min_gap(const PhiFamily& fam, int n_grid) {
  if (n_grid < 2) throw PreconditionError("young grid needs n >= 2");
  double worst = std::numeric_limits<double>::infinity();
  for (double a : {0.0, 0.5, 1.0, 10.0})
    for (double delta : {0.1, 0.5, 1.0, 2.0})
      for (int i = 0; i <= n_grid; ++i)
        for (int j = 0; j <= n_grid; ++j) {
          double s = 10.0 * i / n_grid;
          double t = 10.0 * j / n_grid;
          for (Vec2 x : {Vec2{0.25, 0.5}, Vec2{0.75, 0.5}}) {
            auto yg = young_gap(fam, x, a, s, t, delta);
            worst = std::min(worst, yg.gap / (1.0 + s * t));
          }
        }
  return worst;
}

}  // namespace pxfem
