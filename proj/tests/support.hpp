#pragma once

#include <random>

#include "jmcert/channels.hpp"
#include "jmcert/linalg.hpp"

namespace jmcert::fixtures {

using linalg::RealMatrix;
using linalg::RealVector;

inline RealMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

/// A completely positive channel: random T, random PSD noise lifted just
/// enough above the CP boundary, plus a random extra margin in [0, extra].
inline channels::GaussianChannel random_cp_channel(std::mt19937_64& rng, int modes,
                                                   double extra = 3.0) {
  const Eigen::Index dim = 2 * modes;
  const RealMatrix omega = linalg::symplectic_form(modes);
  const RealMatrix t = random_matrix(rng, dim, dim, 0.7);
  const RealMatrix a = random_matrix(rng, dim, dim, 0.5);
  RealMatrix n = a * a.transpose();
  n = (0.5 * (n + n.transpose())).eval();
  const double lmin =
      linalg::min_eigenvalue(linalg::hermitian_combine(n, omega - t * omega * t.transpose()))
          .min_eigenvalue;
  std::uniform_real_distribution<double> margin(1e-6, extra);
  n.diagonal().array() += std::max(0.0, -lmin) + margin(rng);
  return channels::make_channel(modes, t, n, random_matrix(rng, dim, 1).col(0));
}

}  // namespace jmcert::fixtures
