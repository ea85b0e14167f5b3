#pragma once

// Empirical covariance kernel of a curve sample, its spectral decomposition,
// and principal-component scores. The eigenproblem is solved on the raw
// symmetric node matrix; operator eigenvalues pick up the quadrature weight
// afterwards, and eigenfunctions are rescaled to quadrature norm one.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>

#include "fpcaband/grid.hpp"

namespace fpcaband {

template <typename Scalar = double>
struct CovKernel {
  GridDomain<Scalar> domain;
  Eigen::MatrixX<Scalar> matrix;  // p x p node values of the kernel
  Eigen::VectorX<Scalar> center;  // curve subtracted when forming scores
};

template <typename Scalar = double>
struct EigenSystem {
  GridDomain<Scalar> domain;
  Eigen::VectorX<Scalar> eigenvalues;     // operator eigenvalues, non-increasing
  Eigen::MatrixX<Scalar> eigenfunctions;  // p x m, quadrature-orthonormal
  Eigen::VectorX<Scalar> center;

  Eigen::Index count() const { return eigenvalues.size(); }

  GridFunction<Scalar> eigenfunction(Eigen::Index j) const {
    return GridFunction<Scalar>{domain, eigenfunctions.col(j)};
  }
};

// n x m matrix of scores <X_i - center, phi_j>.
template <typename Scalar = double>
using ScoreMatrix = Eigen::MatrixX<Scalar>;

// Empirical covariance of the rows of `curves` (one curve per row).
template <typename Scalar>
CovKernel<Scalar> empirical_covariance(
    const GridDomain<Scalar>& domain,
    const Eigen::Ref<const Eigen::MatrixX<Scalar>>& curves) {
  const Eigen::Index n = curves.rows();
  if (n < 2) {
    throw std::invalid_argument("empirical_covariance: need at least 2 curves");
  }
  if (curves.cols() != domain.size()) {
    throw std::invalid_argument("empirical_covariance: curve length does not match grid");
  }
  Eigen::VectorX<Scalar> mean = curves.colwise().mean();
  Eigen::MatrixX<Scalar> centered = curves.rowwise() - mean.transpose();
  Eigen::MatrixX<Scalar> k =
      (centered.transpose() * centered) / static_cast<Scalar>(n);
  return CovKernel<Scalar>{domain, std::move(k), std::move(mean)};
}

template <typename Scalar>
CovKernel<Scalar> empirical_covariance(
    std::span<const GridFunction<Scalar>> curves) {
  if (curves.size() < 2) {
    throw std::invalid_argument("empirical_covariance: need at least 2 curves");
  }
  const GridDomain<Scalar>& domain = curves.front().domain;
  Eigen::MatrixX<Scalar> stacked(static_cast<Eigen::Index>(curves.size()),
                                 domain.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    detail::require_same_domain(domain, curves[i].domain);
    stacked.row(static_cast<Eigen::Index>(i)) = curves[i].values.transpose();
  }
  return empirical_covariance<Scalar>(domain, stacked);
}

namespace detail {

// Largest-magnitude entry made positive, first index winning ties.
template <typename Scalar>
void apply_sign_rule(Eigen::Ref<Eigen::VectorX<Scalar>> v) {
  Eigen::Index lead = 0;
  Scalar best = Scalar(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar mag = std::abs(v[i]);
    if (mag > best) {
      best = mag;
      lead = i;
    }
  }
  if (v[lead] < Scalar(0)) v = -v;
}

}  // namespace detail

// Spectral decomposition of a covariance kernel; returns the leading m_max
// eigenpairs. Tiny negative eigenvalues (roundoff) are clamped to zero;
// anything materially negative signals a broken kernel and throws.
template <typename Scalar>
EigenSystem<Scalar> eigendecompose(const CovKernel<Scalar>& kernel,
                                   Eigen::Index m_max) {
  const Eigen::Index p = kernel.domain.size();
  if (kernel.matrix.rows() != p || kernel.matrix.cols() != p) {
    throw std::invalid_argument("eigendecompose: kernel matrix shape mismatch");
  }
  if (m_max < 1 || m_max > p) {
    throw std::invalid_argument("eigendecompose: m_max out of range");
  }
  const Scalar scale =
      std::max(Scalar(1), kernel.matrix.cwiseAbs().maxCoeff());
  const Scalar asym =
      (kernel.matrix - kernel.matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-10) * scale) {
    throw std::invalid_argument("eigendecompose: kernel is not symmetric");
  }

  Eigen::MatrixX<Scalar> sym =
      Scalar(0.5) * (kernel.matrix + kernel.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixX<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: eigensolver failed");
  }

  const Scalar w = kernel.domain.weight();
  EigenSystem<Scalar> out;
  out.domain = kernel.domain;
  out.center = kernel.center;
  out.eigenvalues.resize(m_max);
  out.eigenfunctions.resize(p, m_max);

  const Scalar kappa_top = w * solver.eigenvalues()[p - 1];
  const Scalar neg_tol = Scalar(1e-10) * std::max(Scalar(1), kappa_top);
  const Scalar inv_sqrt_w = Scalar(1) / std::sqrt(w);
  for (Eigen::Index j = 0; j < m_max; ++j) {
    // solver sorts ascending; flip to non-increasing
    const Eigen::Index src = p - 1 - j;
    Scalar kappa = w * solver.eigenvalues()[src];
    if (kappa < Scalar(0)) {
      if (kappa < -neg_tol) {
        throw std::runtime_error(
            "eigendecompose: covariance has a significantly negative eigenvalue");
      }
      kappa = Scalar(0);
    }
    out.eigenvalues[j] = kappa;
    out.eigenfunctions.col(j) = solver.eigenvectors().col(src) * inv_sqrt_w;
    detail::apply_sign_rule<Scalar>(out.eigenfunctions.col(j));
  }
  return out;
}

// Scores of each curve against the leading m eigenfunctions, with the
// system's centering curve subtracted.
template <typename Scalar>
ScoreMatrix<Scalar> scores(const Eigen::Ref<const Eigen::MatrixX<Scalar>>& curves,
                           const EigenSystem<Scalar>& eig, Eigen::Index m) {
  if (curves.cols() != eig.domain.size()) {
    throw std::invalid_argument("scores: curve length does not match grid");
  }
  if (m < 1 || m > eig.count()) {
    throw std::invalid_argument("scores: m exceeds held eigenpairs");
  }
  return ((curves.rowwise() - eig.center.transpose()) *
          eig.eigenfunctions.leftCols(m)) *
         eig.domain.weight();
}

}  // namespace fpcaband
