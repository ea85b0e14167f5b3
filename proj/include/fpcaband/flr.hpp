#pragma once

// PCA-based estimation of the scalar-on-function linear model
//   Y = a + <b, X - EX> + eps.
// Coefficients are b_j = n^{-1} sum_i xi_{ij} Y_i / kappa_j for the leading m
// eigenpairs; the residual variance is the plain mean square of the fitted
// residuals. The partial-linear variant first regresses vector covariates
// out of the curves nodewise and then runs the same machinery on the
// partialled curves, whose empirical mean is already zero.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "fpcaband/fpca.hpp"
#include "fpcaband/grid.hpp"

namespace fpcaband {

template <typename Scalar = double>
struct FplrDataset {
  GridDomain<Scalar> domain;
  Eigen::MatrixX<Scalar> curves;  // n x p, one curve per row
  Eigen::VectorX<Scalar> y;       // n responses
  std::optional<Eigen::MatrixX<Scalar>> z;  // n x d covariates, z(:,0) == 1

  Eigen::Index n() const { return curves.rows(); }

  void validate() const {
    if (curves.cols() != domain.size()) {
      throw std::invalid_argument("dataset: curve length does not match grid");
    }
    if (y.size() != curves.rows()) {
      throw std::invalid_argument("dataset: response count does not match curves");
    }
    if (z) {
      if (z->rows() != curves.rows()) {
        throw std::invalid_argument("dataset: covariate rows do not match curves");
      }
      if (z->cols() < 1) {
        throw std::invalid_argument("dataset: covariate block must have d >= 1");
      }
      if ((z->col(0).array() != Scalar(1)).any()) {
        throw std::invalid_argument("dataset: first covariate column must be identically 1");
      }
    }
  }
};

template <typename Scalar = double>
struct FplrFit {
  int m{0};
  Eigen::VectorX<Scalar> coefficients;  // b_1..b_m
  GridFunction<Scalar> slope;
  Scalar intercept{0};  // ybar for plain fits, 0 for partial-linear fits
  std::optional<Eigen::VectorX<Scalar>> gamma;    // gamma_c, partial fits only
  std::optional<Eigen::MatrixX<Scalar>> upsilon;  // p x d nodewise projection
  Scalar sigma2{0};
  EigenSystem<Scalar> eig;
  ScoreMatrix<Scalar> scores;
  Scalar ybar{0};

  Eigen::Index n() const { return scores.rows(); }
  bool partial_linear() const { return gamma.has_value(); }
};

// Floor below which an eigenvalue is treated as numerically unidentifiable.
template <typename Scalar>
Scalar kappa_floor(const EigenSystem<Scalar>& eig) {
  return Scalar(1e-10) * (eig.count() > 0 ? eig.eigenvalues[0] : Scalar(0));
}

// Residual mean square n^{-1} sum (Y_i - Ybar - sum_j b_j xi_{ij})^2.
template <typename Scalar>
Scalar sigma_hat_squared(const Eigen::VectorX<Scalar>& y, Scalar ybar,
                         const ScoreMatrix<Scalar>& xi,
                         const Eigen::VectorX<Scalar>& coefficients) {
  const Eigen::VectorX<Scalar> resid =
      y.array() - ybar - (xi * coefficients).array();
  return resid.squaredNorm() / static_cast<Scalar>(y.size());
}

// Fit with a precomputed eigensystem (shared across cut-off levels).
template <typename Scalar>
FplrFit<Scalar> fit_with_system(const FplrDataset<Scalar>& data,
                                const EigenSystem<Scalar>& eig, int m) {
  data.validate();
  const Eigen::Index n = data.n();
  if (n < 2) throw std::invalid_argument("fit: need at least 2 observations");
  if (m < 1) throw std::invalid_argument("fit: cut-off must be at least 1");
  if (m > eig.count()) {
    throw std::invalid_argument("fit: cut-off exceeds held eigenpairs");
  }
  const Scalar floor = kappa_floor(eig);
  if (!(eig.eigenvalues[m - 1] > floor)) {
    throw std::runtime_error("fit: cut-off exceeds numerically identifiable rank");
  }

  FplrFit<Scalar> fit;
  fit.m = m;
  fit.eig = eig;
  fit.scores = scores<Scalar>(data.curves, eig, m);
  fit.ybar = data.y.mean();

  // b_j = (n^{-1} sum_i xi_{ij} Y_i) / kappa_j
  const Eigen::VectorX<Scalar> chat =
      fit.scores.transpose() * data.y / static_cast<Scalar>(n);
  fit.coefficients =
      chat.array() / eig.eigenvalues.head(m).array();
  fit.slope = GridFunction<Scalar>{
      eig.domain, eig.eigenfunctions.leftCols(m) * fit.coefficients};
  fit.intercept = fit.ybar;
  fit.sigma2 = sigma_hat_squared<Scalar>(data.y, fit.ybar, fit.scores,
                                         fit.coefficients);
  return fit;
}

// The plain PCA fit: empirical covariance, eigensystem, coefficients.
template <typename Scalar>
FplrFit<Scalar> fit_pca(const FplrDataset<Scalar>& data, int m) {
  data.validate();
  if (data.z) {
    throw std::invalid_argument("fit_pca: dataset has covariates; use fit_partial");
  }
  if (m < 1 || m > data.domain.size()) {
    throw std::invalid_argument("fit_pca: cut-off out of range");
  }
  const CovKernel<Scalar> kernel =
      empirical_covariance<Scalar>(data.domain, data.curves);
  const EigenSystem<Scalar> eig =
      eigendecompose(kernel, static_cast<Eigen::Index>(m));
  return fit_with_system(data, eig, m);
}

template <typename Scalar = double>
struct PartialledDesign {
  Eigen::MatrixX<Scalar> centered;  // n x p residual curves
  Eigen::MatrixX<Scalar> upsilon;   // p x d, column k = Upsilon_k node values

  GridFunction<Scalar> upsilon_curve(const GridDomain<Scalar>& domain,
                                     Eigen::Index k) const {
    return GridFunction<Scalar>{domain, upsilon.col(k)};
  }
};

// Nodewise least squares of the curves on the covariates:
// Upsilon(t) = (n^{-1} Z'Z)^{-1} (n^{-1} Z'X(t)), residuals returned.
template <typename Scalar>
PartialledDesign<Scalar> partial_out(const FplrDataset<Scalar>& data) {
  data.validate();
  if (!data.z) {
    throw std::invalid_argument("partial_out: dataset has no covariates");
  }
  const Eigen::MatrixX<Scalar>& z = *data.z;
  const Eigen::Index n = data.n();
  const Eigen::Index d = z.cols();
  if (n <= d) {
    throw std::invalid_argument("partial_out: need n > d");
  }
  const Eigen::MatrixX<Scalar> gram =
      z.transpose() * z / static_cast<Scalar>(n);
  Eigen::JacobiSVD<Eigen::MatrixX<Scalar>> svd(
      gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Scalar smax = svd.singularValues()[0];
  const Scalar smin = svd.singularValues()[d - 1];
  if (!(smin > Scalar(0)) || smax / smin > Scalar(1e12)) {
    throw std::runtime_error("partial_out: covariate Gram matrix is singular or ill-conditioned");
  }
  PartialledDesign<Scalar> out;
  // d x p system solved once for all nodes
  const Eigen::MatrixX<Scalar> zx =
      z.transpose() * data.curves / static_cast<Scalar>(n);
  Eigen::MatrixX<Scalar> upsilon_t = svd.solve(zx);  // d x p
  out.upsilon = upsilon_t.transpose();
  out.centered = data.curves - z * upsilon_t;
  return out;
}

// Partial-linear fit: eigensystem of the partialled covariance (no further
// centering), slope coefficients from uncentered scores, gamma_c from the
// covariate normal equations.
template <typename Scalar>
FplrFit<Scalar> fit_partial(const FplrDataset<Scalar>& data, int m) {
  PartialledDesign<Scalar> design = partial_out(data);
  const Eigen::MatrixX<Scalar>& z = *data.z;
  const Eigen::Index n = data.n();
  if (m < 1 || m > data.domain.size()) {
    throw std::invalid_argument("fit_partial: cut-off out of range");
  }

  CovKernel<Scalar> kernel;
  kernel.domain = data.domain;
  kernel.matrix = design.centered.transpose() * design.centered /
                  static_cast<Scalar>(n);
  kernel.center = Eigen::VectorX<Scalar>::Zero(data.domain.size());
  const EigenSystem<Scalar> eig =
      eigendecompose(kernel, static_cast<Eigen::Index>(m));

  const Scalar floor = kappa_floor(eig);
  if (!(eig.eigenvalues[m - 1] > floor)) {
    throw std::runtime_error("fit_partial: cut-off exceeds numerically identifiable rank");
  }

  FplrFit<Scalar> fit;
  fit.m = m;
  fit.eig = eig;
  fit.scores = scores<Scalar>(design.centered, eig, m);
  fit.ybar = data.y.mean();

  const Eigen::VectorX<Scalar> chat =
      fit.scores.transpose() * data.y / static_cast<Scalar>(n);
  fit.coefficients = chat.array() / eig.eigenvalues.head(m).array();
  fit.slope = GridFunction<Scalar>{
      eig.domain, eig.eigenfunctions.leftCols(m) * fit.coefficients};

  const Eigen::MatrixX<Scalar> gram =
      z.transpose() * z / static_cast<Scalar>(n);
  fit.gamma = Eigen::VectorX<Scalar>(
      gram.ldlt().solve(z.transpose() * data.y / static_cast<Scalar>(n)));
  fit.upsilon = design.upsilon;
  fit.intercept = Scalar(0);

  // sigma^2 = n^{-1} sum (Y_i - Z_i'gamma_c - <bhat, Xc_i>)^2
  const Eigen::VectorX<Scalar> fitted_curve_part =
      design.centered * fit.slope.values * data.domain.weight();
  const Eigen::VectorX<Scalar> resid =
      data.y - z * (*fit.gamma) - fitted_curve_part;
  fit.sigma2 = resid.squaredNorm() / static_cast<Scalar>(n);
  return fit;
}

// Predicted response for a new curve (and covariates, for partial fits).
template <typename Scalar>
Scalar predict(const FplrFit<Scalar>& fit, const GridFunction<Scalar>& newcurve,
               const std::optional<Eigen::VectorX<Scalar>>& newz = std::nullopt) {
  detail::require_same_domain(fit.slope.domain, newcurve.domain);
  const Scalar w = fit.slope.domain.weight();
  if (fit.partial_linear()) {
    if (!newz) {
      throw std::invalid_argument("predict: partial-linear fit requires covariates");
    }
    if (newz->size() != fit.gamma->size()) {
      throw std::invalid_argument("predict: covariate length mismatch");
    }
    const Eigen::VectorX<Scalar> xc =
        newcurve.values - (*fit.upsilon) * (*newz);
    return newz->dot(*fit.gamma) + w * xc.dot(fit.slope.values);
  }
  return fit.intercept +
         w * (newcurve.values - fit.eig.center).dot(fit.slope.values);
}

template <typename Scalar>
Scalar predict(const FplrFit<Scalar>& fit, const GridFunction<Scalar>& newcurve,
               const Eigen::VectorX<Scalar>& newz) {
  return predict(fit, newcurve, std::optional<Eigen::VectorX<Scalar>>(newz));
}

}  // namespace fpcaband
