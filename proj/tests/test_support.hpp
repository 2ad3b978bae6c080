#pragma once

// Shared helpers for the unit suites: random triplet generators and an
// independent composite-Simpson integrator used as an oracle.

#include <cmath>
#include <functional>

#include "levyot/rng.hpp"
#include "levyot/triplet.hpp"

namespace levyot::testing {

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double uniform(rng::Stream& s, double lo, double hi) { return lo + (hi - lo) * s.uniform(); }

/// Random triplet in dimension d with up to four atoms of mixed sizes.
inline LevyTriplet random_atomic_triplet(rng::Stream& s, std::size_t d) {
  Vec b(d);
  for (std::size_t i = 0; i < d; ++i) b[i] = uniform(s, -2, 2);
  Mat a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = uniform(s, -1, 1);
  Mat c = a * a.transpose();
  c = 0.5 * (c + c.transpose());
  LevyMeasure F(d);
  const int n_atoms = static_cast<int>(s.uniform() * 5);
  for (int k = 0; k < n_atoms; ++k) {
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = uniform(s, -3, 3);
    if (x.norm() < 1e-3) x[0] += 0.5;
    F.add_atom(x, uniform(s, 0.01, 5));
  }
  return LevyTriplet(b, c, F);
}

}  // namespace levyot::testing
