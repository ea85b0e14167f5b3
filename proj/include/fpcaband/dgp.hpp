#pragma once

// Synthetic data generator: curves are finite Karhunen-Loeve series in the
// cosine basis with independent uniform coefficients of variance one and
// polynomially decaying weights, responses follow the functional linear
// model with unit-variance noise. The basis is always evaluated at unit-
// interval midpoints composed with the affine map onto the domain, so node
// values are identical across affinely related domains and the true slope
// simply rescales by 1/lambda(I).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "fpcaband/flr.hpp"
#include "fpcaband/fpca.hpp"
#include "fpcaband/grid.hpp"
#include "fpcaband/rng.hpp"

namespace fpcaband {

enum class NoiseKind { gaussian, chisq5 };

template <typename Scalar = double>
struct DgpConfig {
  Eigen::Index n{100};
  Scalar alpha{2};
  Scalar beta{3.2};
  NoiseKind noise{NoiseKind::gaussian};
  Eigen::Index p{50};             // grid size
  Eigen::Index series_length{50}; // terms in the curve and slope series
  Scalar lower{0};
  Scalar upper{1};
  std::uint64_t seed{0};

  void validate() const {
    if (n < 2) throw std::invalid_argument("dgp: need n >= 2");
    if (!(alpha > Scalar(0)) || !(beta > Scalar(0))) {
      throw std::invalid_argument("dgp: alpha and beta must be positive");
    }
    if (series_length < 1 || series_length > p) {
      throw std::invalid_argument("dgp: series length must lie in [1, p]");
    }
  }
};

template <typename Scalar = double>
struct DgpSample {
  FplrDataset<Scalar> data;
  GridFunction<Scalar> true_slope;
};

// Cosine system phi_1 = 1, phi_{j+1}(u) = sqrt(2) cos(j pi u) evaluated at
// the unit-interval midpoints; discretely orthonormal for J <= p.
template <typename Scalar>
Eigen::MatrixX<Scalar> cosine_basis(Eigen::Index p, Eigen::Index terms) {
  if (terms < 1 || terms > p) {
    throw std::invalid_argument("cosine_basis: terms must lie in [1, p]");
  }
  Eigen::MatrixX<Scalar> basis(p, terms);
  basis.col(0).setOnes();
  const Scalar root2 = std::sqrt(Scalar(2));
  for (Eigen::Index j = 1; j < terms; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const Scalar u = (static_cast<Scalar>(i) + Scalar(0.5)) /
                       static_cast<Scalar>(p);
      basis(i, j) = root2 * std::cos(static_cast<Scalar>(j) *
                                     std::numbers::pi_v<Scalar> * u);
    }
  }
  return basis;
}

// Slope series coefficients b_1 = 1, b_j = 4 (-1)^j j^{-beta} otherwise.
template <typename Scalar>
Eigen::VectorX<Scalar> slope_coefficients(Eigen::Index terms, Scalar beta) {
  Eigen::VectorX<Scalar> b(terms);
  b[0] = Scalar(1);
  for (Eigen::Index j = 1; j < terms; ++j) {
    const Scalar jj = static_cast<Scalar>(j + 1);
    const Scalar sign = (j + 1) % 2 == 0 ? Scalar(1) : Scalar(-1);
    b[j] = Scalar(4) * sign * std::pow(jj, -beta);
  }
  return b;
}

// One sample of the data-generating process, plus the true slope on the grid.
template <typename Scalar>
DgpSample<Scalar> dgp_sample(const DgpConfig<Scalar>& cfg) {
  cfg.validate();
  const GridDomain<Scalar> domain =
      make_domain<Scalar>(cfg.lower, cfg.upper, cfg.p);
  const Eigen::Index terms = cfg.series_length;
  const Eigen::MatrixX<Scalar> basis = cosine_basis<Scalar>(cfg.p, terms);

  // series weights j^{-alpha/2}
  Eigen::VectorX<Scalar> weights(terms);
  for (Eigen::Index j = 0; j < terms; ++j) {
    weights[j] = std::pow(static_cast<Scalar>(j + 1), -cfg.alpha / Scalar(2));
  }

  // coefficient draws U_{ij} ~ Unif[-sqrt(3), sqrt(3)], row by row
  rng::Stream curve_stream(rng::derive_seed(cfg.seed, rng::kCurveStream));
  const Scalar root3 = std::sqrt(Scalar(3));
  Eigen::MatrixX<Scalar> u(cfg.n, terms);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (Eigen::Index j = 0; j < terms; ++j) {
      u(i, j) = static_cast<Scalar>(
          curve_stream.uniform(-static_cast<double>(root3),
                               static_cast<double>(root3)));
    }
  }

  FplrDataset<Scalar> data;
  data.domain = domain;
  data.curves = (u * weights.asDiagonal()) * basis.transpose();

  // true slope: unit-interval series values rescaled by 1/lambda(I)
  const Eigen::VectorX<Scalar> coeff =
      slope_coefficients<Scalar>(terms, cfg.beta);
  GridFunction<Scalar> slope{domain,
                             (basis * coeff) / domain.length()};

  // noise standardized to mean zero, variance one
  rng::Stream noise_stream(rng::derive_seed(cfg.seed, rng::kNoiseStream));
  Eigen::VectorX<Scalar> eps(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    if (cfg.noise == NoiseKind::gaussian) {
      eps[i] = static_cast<Scalar>(noise_stream.normal());
    } else {
      eps[i] = static_cast<Scalar>((noise_stream.chi_squared(5) - 5.0) /
                                   std::sqrt(10.0));
    }
  }

  data.y = domain.weight() * (data.curves * slope.values) + eps;
  return DgpSample<Scalar>{std::move(data), std::move(slope)};
}

// Population eigensystem of the process: eigenvalues lambda(I) * j^{-alpha}
// on the quadrature-normalized basis, centering curve zero.
template <typename Scalar>
EigenSystem<Scalar> population_eigensystem(const DgpConfig<Scalar>& cfg) {
  cfg.validate();
  const GridDomain<Scalar> domain =
      make_domain<Scalar>(cfg.lower, cfg.upper, cfg.p);
  const Eigen::Index terms = cfg.series_length;
  EigenSystem<Scalar> eig;
  eig.domain = domain;
  eig.center = Eigen::VectorX<Scalar>::Zero(cfg.p);
  eig.eigenvalues.resize(terms);
  for (Eigen::Index j = 0; j < terms; ++j) {
    eig.eigenvalues[j] =
        domain.length() * std::pow(static_cast<Scalar>(j + 1), -cfg.alpha);
  }
  eig.eigenfunctions = cosine_basis<Scalar>(cfg.p, terms) /
                       std::sqrt(domain.length());
  return eig;
}

}  // namespace fpcaband
