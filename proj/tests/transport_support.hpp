#pragma once

// Families, costs and grid helpers shared by the transport suites and the
// acceptance runner.

#include <cmath>
#include <functional>
#include <vector>

#include "levyot/fixtures.hpp"
#include "levyot/transport.hpp"

namespace levyot::testing {

inline TransportInstance with_family(ThetaFamily fam, CostFunction L = fixtures::zero_cost()) {
  return {Marginal::point_mass(0.0), Marginal::point_mass(0.0), std::move(fam), std::move(L)};
}

inline ThetaFamily drift_diffusion_family() {
  return ThetaFamily({{"b", -1.0, 1.0}, {"c", 0.0, 1.0}},
                     [](std::span<const double> p) { return LevyTriplet::scalar(p[0], p[1]); },
                     StructuralTag::ProductBox, ParamBlocks{{0}, {1}, {}});
}

inline CostFunction sum_of_squares() {
  return CostFunction{[](double, double, std::span<const double> p) { return p[0] * p[0] + p[1] * p[1]; }, true, "b^2 + c^2"};
}

inline std::vector<double> on_grid(const Grid1D& g, const std::function<double(double)>& f) {
  std::vector<double> v;
  for (double x : g.nodes()) v.push_back(f(x));
  return v;
}

inline double max_error_on(const Grid1D& g, const std::vector<double>& v, const std::function<double(double)>& exact, double r) {
  double e = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m)
    if (std::abs(g.x(m)) <= r) e = std::max(e, std::abs(v[m] - exact(g.x(m))));
  return e;
}

// c and lambda both controlled, jumps of size 0.5 and -1.5
inline ThetaFamily mixed_family() {
  return ThetaFamily({{"c", 0.0, 2.0}, {"lambda", 0.0, 2.0}},
                     [](std::span<const double> p) {
                       LevyMeasure F = LevyMeasure::dirac(0.5, p[1]);
                       F.add_atom(Vec::Constant(1, -1.5), 0.5 * p[1]);
                       return LevyTriplet::scalar(0.3, p[0], F);
                     },
                     StructuralTag::ProductBox, ParamBlocks{{}, {0}, {1}});
}

inline CostFunction mixed_cost() {
  return CostFunction{[](double t, double x, std::span<const double> p) {
                        return (1.0 + t) * p[0] * p[0] + (p[1] - 1.0) * (p[1] - 1.0) + 0.1 * p[0] * std::abs(x);
                      },
                      true, "mixed"};
}

inline std::vector<TransportInstance> property_instances() {
  return {with_family(fixtures::diffusion_family(4), fixtures::quadratic_cost()),
          with_family(fixtures::poisson_rate_family(6, 0.5), fixtures::quadratic_cost(1.0)),
          with_family(drift_diffusion_family(), sum_of_squares()),
          with_family(mixed_family(), mixed_cost())};
}

}  // namespace levyot::testing
