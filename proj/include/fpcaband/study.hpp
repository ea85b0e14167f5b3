#pragma once

// Monte Carlo study machinery: coverage indicators on the grid, one fully
// deterministic replication (data draw, risk curve, both selection rules,
// proposed and MS bands, ball membership), and the aggregated study. Each
// replication derives its substreams from (master seed, replication index)
// only, and aggregation runs in replication order, so study results are
// independent of the number of workers.

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fpcaband/band.hpp"
#include "fpcaband/cutoff.hpp"
#include "fpcaband/dgp.hpp"
#include "fpcaband/flr.hpp"
#include "fpcaband/rng.hpp"

namespace fpcaband {

template <typename Scalar = double>
struct CoverageSummary {
  bool ucp{false};  // covered at every node
  bool mcp{false};  // uncovered measure at most tau2 * lambda(I)
  Scalar uncovered_fraction{0};
};

// Nodewise coverage of the true slope; the uncovered Lebesgue measure is
// discretized as (uncovered node count) * w.
template <typename Scalar>
CoverageSummary<Scalar> coverage_indicators(const ConfidenceBand<Scalar>& band,
                                            const GridFunction<Scalar>& truth,
                                            Scalar tau2) {
  detail::require_same_domain(band.center.domain, truth.domain);
  const Eigen::Index p = truth.domain.size();
  Eigen::Index uncovered = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar diff = std::abs(band.center.values[i] - truth.values[i]);
    if (diff > band.half_width_at(i)) ++uncovered;
  }
  const Scalar w = truth.domain.weight();
  const Scalar lambda = truth.domain.length();
  CoverageSummary<Scalar> out;
  out.ucp = (uncovered == 0);
  out.mcp = (static_cast<Scalar>(uncovered) * w <= tau2 * lambda);
  out.uncovered_fraction = static_cast<Scalar>(uncovered) * (w / lambda);
  return out;
}

template <typename Scalar = double>
struct BandOutcome {
  bool ucp{false};
  bool mcp{false};
  Scalar uncovered_fraction{0};
  Scalar max_width{0};
  Scalar mean_width{0};
};

template <typename Scalar = double>
struct RuleOutcome {
  CutoffRule rule{CutoffRule::mhat_plus_one};
  int m{0};
  bool at_boundary{false};
  Scalar slope_error{0};  // ||bhat - b||
  Scalar ball_radius{0};
  bool ball_member{false};
  BandOutcome<Scalar> proposed;
  BandOutcome<Scalar> ms;
};

template <typename Scalar = double>
struct RepRecord {
  std::int64_t rep{0};
  int mhat{0};
  Eigen::VectorX<Scalar> risk_values;
  Eigen::VectorX<Scalar> error_by_candidate;  // ||bhat(.;m) - b|| per candidate
  std::vector<RuleOutcome<Scalar>> rules;
};

template <typename Scalar = double>
struct StudyConfig {
  DgpConfig<Scalar> dgp;
  Scalar tau1{0.1};
  Scalar tau2{0.1};
  std::int64_t quantile_draws{20000};
  std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<CutoffRule> rules{CutoffRule::mhat_plus_one,
                                CutoffRule::mhat_max_two};
};

namespace detail {

template <typename Scalar>
BandOutcome<Scalar> evaluate_band(const ConfidenceBand<Scalar>& band,
                                  const GridFunction<Scalar>& truth,
                                  Scalar tau2) {
  const CoverageSummary<Scalar> cov = coverage_indicators(band, truth, tau2);
  return BandOutcome<Scalar>{cov.ucp, cov.mcp, cov.uncovered_fraction,
                             band.max_width(), band.mean_width()};
}

}  // namespace detail

// One replication, a pure function of (config, rep_index).
template <typename Scalar>
RepRecord<Scalar> run_replication(const StudyConfig<Scalar>& cfg,
                                  std::int64_t rep_index) {
  if (cfg.candidates.empty() || cfg.rules.empty()) {
    throw std::invalid_argument("run_replication: empty candidate or rule set");
  }
  const std::uint64_t rep_seed = rng::derive_seed(
      cfg.dgp.seed, rng::kReplicationStream,
      static_cast<std::uint64_t>(rep_index));
  DgpConfig<Scalar> dgp_cfg = cfg.dgp;
  dgp_cfg.seed = rep_seed;
  const DgpSample<Scalar> sample = dgp_sample(dgp_cfg);
  const FplrDataset<Scalar>& data = sample.data;
  const Eigen::Index n = data.n();

  const int max_cand = cfg.candidates.back();
  const CovKernel<Scalar> kernel =
      empirical_covariance<Scalar>(data.domain, data.curves);
  const EigenSystem<Scalar> eig =
      eigendecompose(kernel, static_cast<Eigen::Index>(max_cand));
  const RiskCurve<Scalar> risk =
      risk_curve_with_system(data, eig, cfg.candidates);

  RepRecord<Scalar> rec;
  rec.rep = rep_index;
  rec.mhat = risk.mhat();
  rec.risk_values = risk.values;

  // slope error per candidate, built incrementally from shared eigenpairs
  const FplrFit<Scalar> full_fit = fit_with_system(data, eig, max_cand);
  rec.error_by_candidate.resize(
      static_cast<Eigen::Index>(cfg.candidates.size()));
  {
    Eigen::VectorX<Scalar> partial_slope =
        Eigen::VectorX<Scalar>::Zero(data.domain.size());
    int next_level = 1;
    for (std::size_t c = 0; c < cfg.candidates.size(); ++c) {
      while (next_level <= cfg.candidates[c]) {
        partial_slope += full_fit.coefficients[next_level - 1] *
                         eig.eigenfunctions.col(next_level - 1);
        ++next_level;
      }
      rec.error_by_candidate[static_cast<Eigen::Index>(c)] = quadrature_norm(
          data.domain, (partial_slope - sample.true_slope.values).eval());
    }
  }

  for (const CutoffRule rule : cfg.rules) {
    const CutoffChoice choice = select_cutoff(risk, rule);
    const FplrFit<Scalar> fit = fit_with_system(data, eig, choice.level);

    const QuantileEstimate<Scalar> quantile = simulate_quantile<Scalar>(
        fit.eig.eigenvalues.head(fit.m), cfg.tau1, cfg.quantile_draws,
        rng::derive_seed(rep_seed, rng::kQuantileStream,
                         static_cast<std::uint64_t>(fit.m)),
        /*workers=*/1);

    RuleOutcome<Scalar> out;
    out.rule = rule;
    out.m = choice.level;
    out.at_boundary = choice.at_boundary;
    out.slope_error = quadrature_norm(
        data.domain, (fit.slope.values - sample.true_slope.values).eval());
    out.ball_radius = ball_radius(fit, quantile, n);
    out.ball_member = (out.slope_error <= out.ball_radius);

    const ConfidenceBand<Scalar> proposed =
        build_band(fit, quantile, cfg.tau2, n);
    out.proposed = detail::evaluate_band(proposed, sample.true_slope, cfg.tau2);
    const ConfidenceBand<Scalar> baseline = ms_band(fit, cfg.tau1);
    out.ms = detail::evaluate_band(baseline, sample.true_slope, cfg.tau2);

    rec.rules.push_back(out);
  }
  return rec;
}

template <typename Scalar = double>
struct StudyRow {
  CutoffRule rule{CutoffRule::mhat_plus_one};
  BandKind kind{BandKind::proposed};
  Scalar ucp{0};
  Scalar mcp{0};
  Scalar mean_max_width{0};
  Scalar mean_mean_width{0};
  Scalar mean_cutoff{0};
  Scalar ball_member_fraction{0};
};

template <typename Scalar = double>
struct StudyResult {
  StudyConfig<Scalar> config;
  std::int64_t replications{0};
  std::vector<StudyRow<Scalar>> rows;       // one per (rule, band kind)
  Eigen::VectorX<Scalar> rmse;              // per candidate cut-off
  int oracle_m{0};                          // candidate minimizing the RMSE
  Scalar mean_mhat{0};
};

namespace detail {

template <typename Scalar>
StudyResult<Scalar> aggregate(const StudyConfig<Scalar>& cfg,
                              const std::vector<RepRecord<Scalar>>& records) {
  const auto r = static_cast<Scalar>(records.size());
  StudyResult<Scalar> result;
  result.config = cfg;
  result.replications = static_cast<std::int64_t>(records.size());

  result.rmse =
      Eigen::VectorX<Scalar>::Zero(static_cast<Eigen::Index>(cfg.candidates.size()));
  for (const auto& rec : records) {
    result.rmse += rec.error_by_candidate.array().square().matrix();
    result.mean_mhat += static_cast<Scalar>(rec.mhat);
  }
  result.rmse = (result.rmse / r).array().sqrt();
  result.mean_mhat /= r;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < result.rmse.size(); ++i) {
    if (result.rmse[i] < result.rmse[best]) best = i;
  }
  result.oracle_m = cfg.candidates[static_cast<std::size_t>(best)];

  for (std::size_t ri = 0; ri < cfg.rules.size(); ++ri) {
    for (const BandKind kind : {BandKind::proposed, BandKind::ms}) {
      StudyRow<Scalar> row;
      row.rule = cfg.rules[ri];
      row.kind = kind;
      for (const auto& rec : records) {
        const RuleOutcome<Scalar>& out = rec.rules[ri];
        const BandOutcome<Scalar>& band =
            (kind == BandKind::proposed) ? out.proposed : out.ms;
        row.ucp += band.ucp ? Scalar(1) : Scalar(0);
        row.mcp += band.mcp ? Scalar(1) : Scalar(0);
        row.mean_max_width += band.max_width;
        row.mean_mean_width += band.mean_width;
        row.mean_cutoff += static_cast<Scalar>(out.m);
        row.ball_member_fraction += out.ball_member ? Scalar(1) : Scalar(0);
      }
      row.ucp /= r;
      row.mcp /= r;
      row.mean_max_width /= r;
      row.mean_mean_width /= r;
      row.mean_cutoff /= r;
      row.ball_member_fraction /= r;
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace detail

// R replications of one configuration; records are computed on `workers`
// threads but aggregated in replication order.
template <typename Scalar>
StudyResult<Scalar> run_study(const StudyConfig<Scalar>& cfg, std::int64_t R,
                              int workers = 0) {
  if (R < 2) throw std::invalid_argument("run_study: need at least 2 replications");
  std::vector<RepRecord<Scalar>> records(static_cast<std::size_t>(R));
  const int n_workers = std::min<std::int64_t>(
      detail::resolve_workers(workers), R);
  if (n_workers <= 1) {
    for (std::int64_t rep = 0; rep < R; ++rep) {
      records[static_cast<std::size_t>(rep)] = run_replication(cfg, rep);
    }
  } else {
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&] {
        try {
          for (;;) {
            const std::int64_t rep = next.fetch_add(1);
            if (rep >= R) break;
            records[static_cast<std::size_t>(rep)] = run_replication(cfg, rep);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(R);  // stop the other workers
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return detail::aggregate(cfg, records);
}

// Several configurations, run in sequence.
template <typename Scalar>
std::vector<StudyResult<Scalar>> run_study(
    const std::vector<StudyConfig<Scalar>>& configs, std::int64_t R,
    int workers = 0) {
  std::vector<StudyResult<Scalar>> results;
  results.reserve(configs.size());
  for (const auto& cfg : configs) {
    results.push_back(run_study(cfg, R, workers));
  }
  return results;
}

}  // namespace fpcaband
