#pragma once

// Estimated L2-risk of the PCA fit as a function of the cut-off level, and
// the two practical selection rules built on its minimizer. The empirical
// statistic is evaluated with mean-centered responses: the estimator itself
// is invariant to intercept shifts (centered scores sum to zero), and
// centering keeps the variance term free of an intercept penalty, so a
// constant response yields an identically zero curve. The oracle variant
// evaluates the statistic with known (population) eigenpairs, uncentered
// scores, and raw responses; it is exactly unbiased for the shifted true
// risk and is used to validate the estimator in simulation.

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "fpcaband/flr.hpp"
#include "fpcaband/fpca.hpp"

namespace fpcaband {

template <typename Scalar = double>
struct RiskCurve {
  std::vector<int> candidates;
  Eigen::VectorX<Scalar> values;

  // Smallest candidate attaining the minimum.
  int mhat() const {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i) {
      if (values[i] < values[best]) best = i;
    }
    return candidates[static_cast<std::size_t>(best)];
  }
};

enum class CutoffRule { mhat_plus_one, mhat_max_two };

struct CutoffChoice {
  int level;
  bool at_boundary;  // true when the +1 rule was capped at the candidate max
};

namespace detail {

inline void validate_candidates(const std::vector<int>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("risk curve: candidate set is empty");
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] < 1) {
      throw std::invalid_argument("risk curve: candidates must be positive");
    }
    if (i > 0 && candidates[i] <= candidates[i - 1]) {
      throw std::invalid_argument("risk curve: candidates must be strictly increasing");
    }
  }
}

// Shared evaluation of the risk statistic given scores whose centering
// convention already matches the variant in use.
template <typename Scalar>
RiskCurve<Scalar> risk_from_scores(const Eigen::VectorX<Scalar>& y,
                                   const ScoreMatrix<Scalar>& xi,
                                   const Eigen::VectorX<Scalar>& kappas,
                                   const std::vector<int>& candidates) {
  const Eigen::Index n = y.size();
  if (n < 3) {
    throw std::invalid_argument("risk curve: need at least 3 observations");
  }
  const int max_cand = candidates.back();

  // per-level increments of both sums, then prefix sums over candidates
  Eigen::VectorX<Scalar> increments(max_cand);
  for (int j = 0; j < max_cand; ++j) {
    const auto xy = (xi.col(j).array() * y.array()).eval();
    const Scalar chat = xy.sum() / static_cast<Scalar>(n);
    const Scalar bhat = chat / kappas[j];
    const Scalar ss = (xy - chat).square().sum();
    increments[j] =
        -bhat * bhat + Scalar(2) * ss /
                           (static_cast<Scalar>(n) * static_cast<Scalar>(n - 1) *
                            kappas[j] * kappas[j]);
  }

  RiskCurve<Scalar> curve;
  curve.candidates = candidates;
  curve.values.resize(static_cast<Eigen::Index>(candidates.size()));
  Scalar running = Scalar(0);
  int next_level = 1;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    while (next_level <= candidates[c]) {
      running += increments[next_level - 1];
      ++next_level;
    }
    curve.values[static_cast<Eigen::Index>(c)] = running;
  }
  return curve;
}

}  // namespace detail

// Risk estimate from one shared empirical eigensystem.
template <typename Scalar>
RiskCurve<Scalar> risk_curve_with_system(const FplrDataset<Scalar>& data,
                                         const EigenSystem<Scalar>& eig,
                                         const std::vector<int>& candidates) {
  detail::validate_candidates(candidates);
  const int max_cand = candidates.back();
  if (max_cand > eig.count()) {
    throw std::invalid_argument("risk curve: candidate exceeds held eigenpairs");
  }
  const Scalar floor = kappa_floor(eig);
  if (!(eig.eigenvalues[max_cand - 1] > floor)) {
    throw std::runtime_error("risk curve: candidate exceeds numerically identifiable rank");
  }
  const ScoreMatrix<Scalar> xi =
      scores<Scalar>(data.curves, eig, max_cand);
  const Eigen::VectorX<Scalar> centered_y =
      data.y.array() - data.y.mean();
  return detail::risk_from_scores<Scalar>(centered_y, xi,
                                          eig.eigenvalues.head(max_cand),
                                          candidates);
}

template <typename Scalar>
RiskCurve<Scalar> risk_curve(const FplrDataset<Scalar>& data,
                             const std::vector<int>& candidates) {
  data.validate();
  detail::validate_candidates(candidates);
  const CovKernel<Scalar> kernel =
      empirical_covariance<Scalar>(data.domain, data.curves);
  const EigenSystem<Scalar> eig = eigendecompose(
      kernel, std::min<Eigen::Index>(data.domain.size(), candidates.back()));
  return risk_curve_with_system(data, eig, candidates);
}

// Known-covariance variant: population eigenpairs, uncentered scores.
template <typename Scalar>
RiskCurve<Scalar> oracle_risk_curve(const FplrDataset<Scalar>& data,
                                    const std::vector<int>& candidates,
                                    const EigenSystem<Scalar>& population_eig) {
  data.validate();
  detail::validate_candidates(candidates);
  const int max_cand = candidates.back();
  if (max_cand > population_eig.count()) {
    throw std::invalid_argument("oracle risk: candidate exceeds supplied eigenpairs");
  }
  if (!population_eig.center.isZero(Scalar(0))) {
    throw std::invalid_argument("oracle risk: population system must be uncentered");
  }
  const ScoreMatrix<Scalar> xi =
      scores<Scalar>(data.curves, population_eig, max_cand);
  return detail::risk_from_scores<Scalar>(
      data.y, xi, population_eig.eigenvalues.head(max_cand), candidates);
}

inline CutoffChoice select_cutoff(const std::vector<int>& candidates, int mhat,
                                  CutoffRule rule) {
  detail::validate_candidates(candidates);
  const int max_cand = candidates.back();
  int level = 0;
  bool capped = false;
  switch (rule) {
    case CutoffRule::mhat_plus_one:
      level = mhat + 1;
      if (level > max_cand) {
        level = max_cand;
        capped = true;
      }
      break;
    case CutoffRule::mhat_max_two:
      level = std::max(mhat, 2);
      if (level > max_cand) {
        level = max_cand;
        capped = true;
      }
      break;
  }
  level = std::max(level, 1);
  return CutoffChoice{level, capped};
}

template <typename Scalar>
CutoffChoice select_cutoff(const RiskCurve<Scalar>& curve, CutoffRule rule) {
  return select_cutoff(curve.candidates, curve.mhat(), rule);
}

}  // namespace fpcaband
