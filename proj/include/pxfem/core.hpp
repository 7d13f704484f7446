#pragma once

// Small geometric/numeric value types shared by every module.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pxfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Triangle given by its three vertices, counterclockwise when area() > 0.
struct Tri {
  Vec2 a, b, c;

  double signed_area() const {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }
  double area() const { return std::abs(signed_area()); }

  double diameter() const {
    double e0 = (b - a).norm(), e1 = (c - b).norm(), e2 = (a - c).norm();
    return std::max({e0, e1, e2});
  }

  // Diameter of the largest inscribed ball (2 * inradius).
  double inball_diameter() const {
    double e0 = (b - a).norm(), e1 = (c - b).norm(), e2 = (a - c).norm();
    double s = 0.5 * (e0 + e1 + e2);
    return 2.0 * area() / s;
  }

  Vec2 centroid() const { return (a + b + c) / 3.0; }

  // Point with barycentric coordinates (1-u-v, u, v) w.r.t. (a, b, c).
  Vec2 point(double u, double v) const {
    return a * (1.0 - u - v) + b * u + c * v;
  }
};

// (base + t)^e - base^e without cancellation for t << base.
inline double pow_diff(double base, double t, double e) {
  if (t == 0.0) return 0.0;
  if (base == 0.0) return std::pow(t, e);
  return std::pow(base, e) * std::expm1(e * std::log1p(t / base));
}

inline double sqr(double t) { return t * t; }

// All randomized sweeps in the library draw from this engine so that a run
// is reproducible from a single seed.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pxfem
