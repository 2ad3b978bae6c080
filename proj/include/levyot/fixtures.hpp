#pragma once

// Reference families, sequences and transport instances used by the tools,
// the reproduce command and the test suites.

#include <cmath>
#include <span>

#include "levyot/limit_lab.hpp"
#include "levyot/transport/hjb.hpp"
#include "levyot/transport/instance.hpp"

namespace levyot::fixtures {

/// (0, 0, n delta_{1/sqrt(n)}): second moment 1 for every n.
inline LevyTriplet scaled_poisson(double n) {
  return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(1.0 / std::sqrt(n), n));
}

inline ThetaFamily scaled_poisson_family() {
  return ThetaFamily({{"n", 1.0, 1e6}}, [](std::span<const double> p) { return scaled_poisson(p[0]); });
}

inline TripletSequence scaled_poisson_sequence() {
  TripletSequence s;
  s.index_map = scaled_poisson;
  s.params = [](double n) { return std::vector<double>{n}; };
  return s;
}

/// c = 1 - s, F = (s / a^2) delta_a: the modified diffusion stays at 1 and (0, 1, 0) is the member s = 0.
inline ThetaFamily balanced_family() {
  return ThetaFamily({{"s", 0.0, 1.0}, {"a", 1e-3, 1.0}}, [](std::span<const double> p) {
    return LevyTriplet::scalar(0, 1.0 - p[0], LevyMeasure::dirac(p[1], p[0] / (p[1] * p[1])));
  });
}

/// Scaled Poisson triplets as members s = 1, a = 1/sqrt(n) of the balanced family.
inline TripletSequence balanced_sequence() {
  TripletSequence s = scaled_poisson_sequence();
  s.params = [](double n) { return std::vector<double>{1.0, 1.0 / std::sqrt(n)}; };
  return s;
}

inline ThetaFamily diffusion_family(double cmax) {
  return ThetaFamily({{"c", 0.0, cmax}}, [](std::span<const double> p) { return LevyTriplet::scalar(0, p[0]); },
                     StructuralTag::ProductBox, ParamBlocks{{}, {0}, {}});
}

inline ThetaFamily poisson_rate_family(double lmax, double jump) {
  return ThetaFamily({{"lambda", 0.0, lmax}},
                     [jump](std::span<const double> p) {
                       return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(jump, p[0]));
                     },
                     StructuralTag::ProductBox, ParamBlocks{{}, {}, {0}});
}

/// Singleton family {t}.
inline ThetaFamily singleton(LevyTriplet t) {
  return ThetaFamily({{"fixed", 0.0, 0.0}}, [t](std::span<const double>) { return t; });
}

inline CostFunction zero_cost() {
  return CostFunction{[](double, double, std::span<const double>) { return 0.0; }, true, "0"};
}

/// L = (p_0 - target)^2.
inline CostFunction quadratic_cost(double target = 0.0) {
  return CostFunction{[target](double, double, std::span<const double> p) { return (p[0] - target) * (p[0] - target); },
                      true, "(p0 - " + std::to_string(target) + ")^2"};
}

/// mu0 = delta_0, mu1 = N(0, var), c in [0, cmax], L = c^2.
inline TransportInstance gaussian_instance(double cmax = 4.0, double var = 1.0) {
  return {Marginal::point_mass(0.0), Marginal::gaussian(0.0, var), diffusion_family(cmax), quadratic_cost()};
}

/// mu0 = delta_0, mu1 = compensated Poisson(3, 0.5) at time 1, lambda in [0, 6], L = (lambda - 1)^2.
inline TransportInstance poisson_instance() {
  return {Marginal::point_mass(0.0), Marginal::compensated_poisson(3.0, 0.5), poisson_rate_family(6.0, 0.5),
          quadratic_cost(1.0)};
}

inline TransportInstance trivial_instance() {
  return {Marginal::point_mass(0.0), Marginal::point_mass(0.0), diffusion_family(4.0), quadratic_cost()};
}

/// Grids matched to the instances: the Poisson lattice and the lambda = 3 compensator shift sit on nodes.
inline GridConfig gaussian_dual_grid() { return GridConfig{Grid1D{-8.0, 8.0, 400}, 50}; }
inline GridConfig poisson_dual_grid() {
  GridConfig g{Grid1D{-4.0, 8.0, 240}, 30};
  g.scan_points = 8;
  return g;
}

}  // namespace levyot::fixtures
