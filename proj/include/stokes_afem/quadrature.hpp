#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace stokes_afem {

/// Points in barycentric coordinates; weights sum to the reference measure
/// (1/2 for the reference triangle, 1 for the unit interval).
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// 6-point symmetric rule, exact for total degree <= 4.
inline const QuadratureRule& triangle_rule() {
  static const QuadratureRule rule = [] {
    constexpr double a1 = 0.44594849091596488631832925388305;
    constexpr double w1 = 0.22338158967801146569500700843312;
    constexpr double a2 = 0.091576213509770743459571463402202;
    constexpr double w2 = 0.10995174365532186763832632490021;
    QuadratureRule r;
    r.degree = 4;
    for (auto [a, w] : {std::array{a1, w1}, std::array{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      r.points.push_back({b, a, a});
      r.points.push_back({a, b, a});
      r.points.push_back({a, a, b});
      for (int k = 0; k < 3; ++k) r.weights.push_back(0.5 * w);
    }
    return r;
  }();
  return rule;
}

/// 3-point Gauss-Legendre on [0,1], exact for degree <= 5. Points are (1-t, t, 0).
inline const QuadratureRule& edge_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 5;
    const double s = 0.5 * std::sqrt(3.0 / 5.0);
    for (auto [t, w] : {std::array{0.5 - s, 5.0 / 18.0}, std::array{0.5, 8.0 / 18.0},
                        std::array{0.5 + s, 5.0 / 18.0}}) {
      r.points.push_back({1.0 - t, t, 0.0});
      r.weights.push_back(w);
    }
    return r;
  }();
  return rule;
}

}  // namespace stokes_afem
