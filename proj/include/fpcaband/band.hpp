#pragma once

// Confidence sets around the PCA-based slope estimator: the simulated
// quantile of sqrt(sum_j eta_j / kappa_j) with eta_j iid chi-squared(1), the
// L2 ball of radius sigma_hat * c_hat / sqrt(n), the constant-width band
// obtained from the ball by Markov's inequality, and the pointwise
// Mueller-Stadtmueller baseline band.
//
// The quantile simulation draws in fixed-size chunks, each chunk on its own
// derived substream, so the resulting draw multiset (and hence the order
// statistic) does not depend on how many workers process the chunks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "fpcaband/flr.hpp"
#include "fpcaband/grid.hpp"
#include "fpcaband/rng.hpp"
#include "fpcaband/stats.hpp"

namespace fpcaband {

enum class QuantileMethod { simulated, normal_approx, chi_squared };

template <typename Scalar = double>
struct QuantileEstimate {
  Scalar value{0};
  Scalar tau{0};
  std::int64_t draws{0};
  QuantileMethod method{QuantileMethod::simulated};
  std::uint64_t seed{0};
  int m{0};  // number of eigenvalues the statistic was built from
};

enum class BandKind { proposed, ms };

template <typename Scalar = double>
struct ConfidenceBand {
  GridFunction<Scalar> center;
  // constant half-width for the proposed band, per-node for the MS band
  std::variant<Scalar, Eigen::VectorX<Scalar>> half_width;
  Scalar tau1{0};
  std::optional<Scalar> tau2;
  BandKind kind{BandKind::proposed};
  QuantileEstimate<Scalar> critical;

  Scalar half_width_at(Eigen::Index i) const {
    if (const Scalar* c = std::get_if<Scalar>(&half_width)) return *c;
    return std::get<Eigen::VectorX<Scalar>>(half_width)[i];
  }

  Eigen::VectorX<Scalar> lower() const {
    return center.values - half_width_vector();
  }
  Eigen::VectorX<Scalar> upper() const {
    return center.values + half_width_vector();
  }

  Eigen::VectorX<Scalar> half_width_vector() const {
    if (const Scalar* c = std::get_if<Scalar>(&half_width)) {
      return Eigen::VectorX<Scalar>::Constant(center.values.size(), *c);
    }
    return std::get<Eigen::VectorX<Scalar>>(half_width);
  }

  Scalar max_width() const {
    if (const Scalar* c = std::get_if<Scalar>(&half_width)) return Scalar(2) * *c;
    return Scalar(2) *
           std::get<Eigen::VectorX<Scalar>>(half_width).maxCoeff();
  }

  // quadrature mean of the width over the domain
  Scalar mean_width() const {
    if (const Scalar* c = std::get_if<Scalar>(&half_width)) return Scalar(2) * *c;
    const auto& hw = std::get<Eigen::VectorX<Scalar>>(half_width);
    return Scalar(2) * hw.sum() / static_cast<Scalar>(hw.size());
  }
};

namespace detail {

inline int env_worker_cap() {
  if (const char* s = std::getenv("FPCA_BAND_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) return v;
  }
  return 0;  // no cap
}

inline int resolve_workers(int requested) {
  int workers = requested;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  const int cap = env_worker_cap();
  if (cap >= 1) workers = std::min(workers, cap);
  return workers;
}

// Order-statistic rank ceil((1-tau)*B), computed as B - floor(tau*B) in
// extended precision so neither the rounding of 1-tau nor of the product
// can cross an integer boundary.
inline std::int64_t quantile_rank(double tau, std::int64_t draws) {
  const long double product =
      static_cast<long double>(tau) * static_cast<long double>(draws);
  const auto floor_part = static_cast<std::int64_t>(std::floor(product));
  return std::clamp<std::int64_t>(draws - floor_part, 1, draws);
}

}  // namespace detail

// Empirical (1-tau)-quantile of sqrt(sum_j eta_j / kappa_j) over B draws,
// eta_j iid chi-squared(1) realized as squared standard normals.
template <typename Scalar>
QuantileEstimate<Scalar> simulate_quantile(
    const Eigen::VectorX<Scalar>& kappas, Scalar tau, std::int64_t draws,
    std::uint64_t seed, int workers = 0) {
  const Eigen::Index m = kappas.size();
  if (m < 1) throw std::invalid_argument("simulate_quantile: empty eigenvalue list");
  if (!(kappas.array() > Scalar(0)).all()) {
    throw std::invalid_argument("simulate_quantile: eigenvalues must be positive");
  }
  if (!(tau > Scalar(0) && tau < Scalar(1))) {
    throw std::invalid_argument("simulate_quantile: tau must lie in (0,1)");
  }
  if (draws < 1000) {
    throw std::invalid_argument("simulate_quantile: need at least 1000 draws");
  }

  const Eigen::VectorX<Scalar> inv_kappa = kappas.cwiseInverse();
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t n_chunks = (draws + kChunk - 1) / kChunk;

  std::vector<Scalar> sums(static_cast<std::size_t>(draws));
  const auto run_chunk = [&](std::int64_t chunk) {
    rng::Stream stream(
        rng::derive_seed(seed, rng::kQuantileStream,
                         static_cast<std::uint64_t>(chunk)));
    const std::int64_t begin = chunk * kChunk;
    const std::int64_t end = std::min(begin + kChunk, draws);
    for (std::int64_t b = begin; b < end; ++b) {
      Scalar sum = Scalar(0);
      for (Eigen::Index j = 0; j < m; ++j) {
        sum += static_cast<Scalar>(stream.chi_squared1()) * inv_kappa[j];
      }
      sums[static_cast<std::size_t>(b)] = sum;
    }
  };

  const int n_workers =
      std::min<std::int64_t>(detail::resolve_workers(workers), n_chunks);
  if (n_workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::int64_t c = t; c < n_chunks; c += n_workers) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  const std::int64_t rank = detail::quantile_rank(static_cast<double>(tau), draws);
  std::nth_element(sums.begin(), sums.begin() + (rank - 1), sums.end());
  const Scalar value = std::sqrt(sums[static_cast<std::size_t>(rank - 1)]);

  return QuantileEstimate<Scalar>{value, tau, draws, QuantileMethod::simulated,
                                  seed, static_cast<int>(m)};
}

// CLT approximation: c^2 = sum_j 1/kappa_j + z_{1-tau} sqrt(2 sum_k 1/kappa_k^2),
// both sums over the leading m eigenvalues; clamped at zero before the root.
template <typename Scalar>
QuantileEstimate<Scalar> normal_approx_quantile(
    const Eigen::VectorX<Scalar>& kappas, Scalar tau) {
  const Eigen::Index m = kappas.size();
  if (m < 1) throw std::invalid_argument("normal_approx_quantile: empty eigenvalue list");
  if (!(kappas.array() > Scalar(0)).all()) {
    throw std::invalid_argument("normal_approx_quantile: eigenvalues must be positive");
  }
  if (!(tau > Scalar(0) && tau < Scalar(1))) {
    throw std::invalid_argument("normal_approx_quantile: tau must lie in (0,1)");
  }
  const Eigen::VectorX<Scalar> inv_kappa = kappas.cwiseInverse();
  const Scalar z = static_cast<Scalar>(
      stats::normal_quantile(1.0 - static_cast<double>(tau)));
  const Scalar c2 = inv_kappa.sum() +
                    z * std::sqrt(Scalar(2) * inv_kappa.squaredNorm());
  const Scalar value = std::sqrt(std::max(c2, Scalar(0)));
  return QuantileEstimate<Scalar>{value, tau, 0, QuantileMethod::normal_approx,
                                  0, static_cast<int>(m)};
}

// Radius sigma_hat * c_hat(1-tau) / sqrt(n) of the L2 confidence ball.
template <typename Scalar>
Scalar ball_radius(const FplrFit<Scalar>& fit,
                   const QuantileEstimate<Scalar>& quantile, Eigen::Index n) {
  if (quantile.m != fit.m) {
    throw std::invalid_argument("ball_radius: quantile was built for a different cut-off");
  }
  return std::sqrt(fit.sigma2) * quantile.value /
         std::sqrt(static_cast<Scalar>(n));
}

// Constant-width band: ball radius inflated by sqrt(1 / (tau2 * lambda(I))).
template <typename Scalar>
ConfidenceBand<Scalar> build_band(const FplrFit<Scalar>& fit,
                                  const QuantileEstimate<Scalar>& quantile,
                                  Scalar tau2, Eigen::Index n) {
  if (!(tau2 > Scalar(0) && tau2 < Scalar(1))) {
    throw std::invalid_argument("build_band: tau2 must lie in (0,1)");
  }
  const Scalar radius = ball_radius(fit, quantile, n);
  const Scalar half =
      radius * std::sqrt(Scalar(1) / (tau2 * fit.slope.domain.length()));
  ConfidenceBand<Scalar> band;
  band.center = fit.slope;
  band.half_width = half;
  band.tau1 = quantile.tau;
  band.tau2 = tau2;
  band.kind = BandKind::proposed;
  band.critical = quantile;
  return band;
}

enum class MsCritical { clt, chi_squared_quantile };

// Mueller-Stadtmueller band with plug-in eigenpairs: per-node half-width
// sigma_hat * sqrt(crit / n * sum_j phi_j^2(t) / kappa_j) where crit is
// m + sqrt(2m) z_{1-tau} (or the chi-squared(m) quantile variant).
template <typename Scalar>
ConfidenceBand<Scalar> ms_band(const FplrFit<Scalar>& fit, Scalar tau,
                               MsCritical critical = MsCritical::clt) {
  if (!(tau > Scalar(0) && tau < Scalar(1))) {
    throw std::invalid_argument("ms_band: tau must lie in (0,1)");
  }
  const int m = fit.m;
  const Eigen::VectorX<Scalar> kappas = fit.eig.eigenvalues.head(m);
  if (!(kappas.array() > Scalar(0)).all()) {
    throw std::invalid_argument("ms_band: eigenvalues must be positive");
  }

  Scalar crit = Scalar(0);
  QuantileMethod method = QuantileMethod::normal_approx;
  if (critical == MsCritical::clt) {
    const Scalar z = static_cast<Scalar>(
        stats::normal_quantile(1.0 - static_cast<double>(tau)));
    crit = static_cast<Scalar>(m) +
           std::sqrt(Scalar(2) * static_cast<Scalar>(m)) * z;
    if (!(crit > Scalar(0))) {
      throw std::runtime_error("ms_band: nonpositive critical value");
    }
  } else {
    crit = static_cast<Scalar>(stats::chi_squared_quantile(
        static_cast<double>(m), 1.0 - static_cast<double>(tau)));
    method = QuantileMethod::chi_squared;
  }

  const Eigen::Index n = fit.n();
  const Eigen::Index p = fit.eig.domain.size();
  const Scalar sigma = std::sqrt(fit.sigma2);
  Eigen::VectorX<Scalar> hw(p);
  const Eigen::VectorX<Scalar> inv_kappa = kappas.cwiseInverse();
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar s = (fit.eig.eigenfunctions.row(i).head(m).transpose().array().square() *
                      inv_kappa.array())
                         .sum();
    hw[i] = sigma * std::sqrt(crit / static_cast<Scalar>(n) * s);
  }

  ConfidenceBand<Scalar> band;
  band.center = fit.slope;
  band.half_width = std::move(hw);
  band.tau1 = tau;
  band.tau2 = std::nullopt;
  band.kind = BandKind::ms;
  band.critical = QuantileEstimate<Scalar>{std::sqrt(crit), tau, 0, method, 0,
                                           m};
  return band;
}

}  // namespace fpcaband
