#pragma once

#include <cmath>
#include <numbers>

#include "wgstokes/assembly.hpp"

namespace wgstokes {

/// Exact Stokes solution on the unit square/cube together with the body force
/// that produces it for a given viscosity.
struct ManufacturedCase {
  int dim = 2;
  ExactSolution exact;
  std::function<VectorField(double mu)> body_force;

  VectorField boundary() const { return exact.u; }
};

/// u = (-e^x (y cos y + sin y), e^x y sin y), p = 2 e^x sin y on (0,1)^2.
inline ManufacturedCase stokes_case_2d() {
  ManufacturedCase mc;
  mc.dim = 2;
  mc.exact.u = [](const Vec& x) {
    const double ex = std::exp(x(0)), y = x(1);
    return Vec{{-ex * (y * std::cos(y) + std::sin(y)), ex * y * std::sin(y)}};
  };
  mc.exact.grad_u = [](const Vec& x) {
    const double ex = std::exp(x(0)), y = x(1), c = std::cos(y), s = std::sin(y);
    Eigen::MatrixXd g(2, 2);
    g << -ex * (y * c + s), -ex * (2.0 * c - y * s),
          ex * y * s,        ex * (s + y * c);
    return g;
  };
  mc.exact.p = [](const Vec& x) { return 2.0 * std::exp(x(0)) * std::sin(x(1)); };
  mc.body_force = [](double mu) -> VectorField {
    return [mu](const Vec& x) {
      const double ex = std::exp(x(0));
      return Vec{{2.0 * (1.0 - mu) * ex * std::sin(x(1)), 2.0 * (1.0 - mu) * ex * std::cos(x(1))}};
    };
  };
  return mc;
}

/// u = (2 sin(pi x), -pi y cos(pi x), -pi z cos(pi x)),
/// p = sin(pi x) cos(pi y) sin(pi z) on (0,1)^3.
inline ManufacturedCase stokes_case_3d() {
  constexpr double pi = std::numbers::pi;
  ManufacturedCase mc;
  mc.dim = 3;
  mc.exact.u = [](const Vec& x) {
    const double cx = std::cos(pi * x(0));
    return Vec{{2.0 * std::sin(pi * x(0)), -pi * x(1) * cx, -pi * x(2) * cx}};
  };
  mc.exact.grad_u = [](const Vec& x) {
    const double cx = std::cos(pi * x(0)), sx = std::sin(pi * x(0));
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
    g(0, 0) = 2.0 * pi * cx;
    g(1, 0) = pi * pi * x(1) * sx;
    g(1, 1) = -pi * cx;
    g(2, 0) = pi * pi * x(2) * sx;
    g(2, 2) = -pi * cx;
    return g;
  };
  mc.exact.p = [](const Vec& x) {
    return std::sin(pi * x(0)) * std::cos(pi * x(1)) * std::sin(pi * x(2));
  };
  mc.body_force = [](double mu) -> VectorField {
    return [mu](const Vec& x) {
      const double sx = std::sin(pi * x(0)), cx = std::cos(pi * x(0));
      const double sy = std::sin(pi * x(1)), cy = std::cos(pi * x(1));
      const double sz = std::sin(pi * x(2)), cz = std::cos(pi * x(2));
      return Vec{{2.0 * mu * pi * pi * sx + pi * cx * cy * sz,
                  -mu * pi * pi * pi * x(1) * cx - pi * sy * sx * sz,
                  -mu * pi * pi * pi * x(2) * cx + pi * sx * cy * cz}};
    };
  };
  return mc;
}

inline ManufacturedCase stokes_case(int dim) {
  if (dim == 2) return stokes_case_2d();
  if (dim == 3) return stokes_case_3d();
  throw InvalidArgument("dimension must be 2 or 3");
}

}  // namespace wgstokes
