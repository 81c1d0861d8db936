#pragma once

#include <cmath>

namespace collate {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(Point2 a, Point2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// (x, y) -> (a*x + b*y + e, c*x + d*y + f)
struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, e = 0.0, f = 0.0;

  static AffineTransform identity() noexcept { return {}; }

  Point2 apply(Point2 p) const noexcept { return {a * p.x + b * p.y + e, c * p.x + d * p.y + f}; }

  bool is_finite() const noexcept {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d) &&
           std::isfinite(e) && std::isfinite(f);
  }

  bool operator==(const AffineTransform&) const = default;
};

}  // namespace collate
