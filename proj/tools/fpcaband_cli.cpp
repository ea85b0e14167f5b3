// Command-line surface: fit, band, select-cutoff, risk-curve, simulate, and
// the Tecator converter. All numeric work lives in the headers; this file
// only wires flags, config files, and output paths together. Exit codes:
// 0 success, 2 configuration error, 1 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpcaband/band.hpp"
#include "fpcaband/cutoff.hpp"
#include "fpcaband/dgp.hpp"
#include "fpcaband/flr.hpp"
#include "fpcaband/io.hpp"
#include "fpcaband/study.hpp"

namespace {

using fpcaband::BandKind;
using fpcaband::ConfidenceBand;
using fpcaband::CutoffChoice;
using fpcaband::CutoffRule;
using fpcaband::FplrDataset;
using fpcaband::FplrFit;
using fpcaband::MsCritical;
using fpcaband::NoiseKind;
using fpcaband::QuantileEstimate;
using fpcaband::RiskCurve;
using fpcaband::StudyConfig;
using fpcaband::StudyResult;

struct CommonOptions {
  std::string data;
  std::optional<std::pair<double, double>> domain;
  int m = 0;  // 0 = select by rule
  std::string rule = "mhat-plus-one";
  double tau1 = 0.1;
  double tau2 = 0.1;
  std::int64_t draws = 100000;
  std::uint64_t seed = 12345;
  std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string out;
};

std::optional<std::pair<double, double>> parse_domain(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto sep = s.find_first_of(":,");
  if (sep == std::string::npos) {
    throw CLI::ValidationError("--domain", "expected lo:hi");
  }
  try {
    const double lo = std::stod(s.substr(0, sep));
    const double hi = std::stod(s.substr(sep + 1));
    return std::make_pair(lo, hi);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--domain", "expected numeric lo:hi");
  }
}

CutoffRule parse_rule(const std::string& name) {
  if (name == "mhat-plus-one" || name == "mhat_plus_one") {
    return CutoffRule::mhat_plus_one;
  }
  if (name == "mhat-max-two" || name == "mhat_max_two") {
    return CutoffRule::mhat_max_two;
  }
  throw CLI::ValidationError("--rule",
                             "expected mhat-plus-one or mhat-max-two");
}

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool need_data) {
  auto* data = cmd->add_option("--data", opt.data, "dataset CSV");
  if (need_data) data->required();
  cmd->add_option_function<std::string>(
      "--domain",
      [&opt](const std::string& s) { opt.domain = parse_domain(s); },
      "domain bounds lo:hi (overrides the file metadata)");
  cmd->add_option("--tau1", opt.tau1, "band level parameter")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  cmd->add_option("--tau2", opt.tau2, "uncovered-proportion parameter")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  cmd->add_option("--B", opt.draws, "quantile simulation draws")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opt.seed, "master RNG seed");
  cmd->add_option("--candidates", opt.candidates,
                  "candidate cut-off levels (comma separated)")
      ->delimiter(',');
  cmd->add_option("--out", opt.out, "output file path");
}

std::string canonical_config(const std::string& mode, const CommonOptions& opt,
                             const std::string& extra = "") {
  std::ostringstream s;
  s << "version=" << fpcaband::io::kVersion << ";mode=" << mode
    << ";data=" << opt.data << ";m=" << opt.m << ";rule=" << opt.rule
    << ";tau1=" << fpcaband::io::format_double(opt.tau1)
    << ";tau2=" << fpcaband::io::format_double(opt.tau2) << ";B=" << opt.draws
    << ";seed=" << opt.seed << ";candidates=";
  for (std::size_t i = 0; i < opt.candidates.size(); ++i) {
    if (i > 0) s << ",";
    s << opt.candidates[i];
  }
  if (opt.domain) {
    s << ";domain=" << fpcaband::io::format_double(opt.domain->first) << ":"
      << fpcaband::io::format_double(opt.domain->second);
  }
  if (!extra.empty()) s << ";" << extra;
  return s.str();
}

// Resolve the cut-off: explicit --m wins, otherwise the rule applied to the
// risk-curve minimizer.
int resolve_cutoff(const FplrDataset<double>& data, const CommonOptions& opt,
                   bool m_given, bool* capped = nullptr) {
  if (m_given) return opt.m;
  const RiskCurve<double> curve =
      fpcaband::risk_curve<double>(data, opt.candidates);
  const CutoffChoice choice =
      fpcaband::select_cutoff(curve, parse_rule(opt.rule));
  if (capped) *capped = choice.at_boundary;
  return choice.level;
}

int run_fit(const CommonOptions& opt, bool m_given) {
  const FplrDataset<double> data = fpcaband::io::read_dataset(opt.data, opt.domain);
  const int m = resolve_cutoff(data, opt, m_given);
  const FplrFit<double> fit = data.z ? fpcaband::fit_partial(data, m)
                                     : fpcaband::fit_pca(data, m);
  std::cout << "mode fit\n";
  std::cout << "n " << data.n() << "\n";
  std::cout << "m " << fit.m << "\n";
  std::cout << "sigma2 " << fpcaband::io::format_double(fit.sigma2) << "\n";
  std::cout << "intercept " << fpcaband::io::format_double(fit.intercept)
            << "\n";
  for (int j = 0; j < fit.m; ++j) {
    std::cout << "b_" << (j + 1) << " "
              << fpcaband::io::format_double(fit.coefficients[j]) << "\n";
  }
  if (fit.gamma) {
    for (Eigen::Index k = 0; k < fit.gamma->size(); ++k) {
      std::cout << "gamma_" << (k + 1) << " "
                << fpcaband::io::format_double((*fit.gamma)[k]) << "\n";
    }
  }
  return 0;
}

int run_band(const CommonOptions& opt, bool m_given, const std::string& kind,
             const std::string& ms_critical) {
  if (opt.out.empty()) {
    throw CLI::ValidationError("--out", "band mode writes a file");
  }
  const FplrDataset<double> data = fpcaband::io::read_dataset(opt.data, opt.domain);
  bool capped = false;
  const int m = resolve_cutoff(data, opt, m_given, &capped);
  if (capped) {
    std::cerr << "warning: rule selected a cut-off beyond the candidate set; "
                 "capped at the maximum\n";
  }
  const FplrFit<double> fit = data.z ? fpcaband::fit_partial(data, m)
                                     : fpcaband::fit_pca(data, m);

  ConfidenceBand<double> band;
  if (kind == "proposed") {
    const QuantileEstimate<double> q = fpcaband::simulate_quantile<double>(
        fit.eig.eigenvalues.head(fit.m), opt.tau1, opt.draws, opt.seed);
    band = fpcaband::build_band(fit, q, opt.tau2, data.n());
  } else {
    const MsCritical crit = ms_critical == "chisq"
                                ? MsCritical::chi_squared_quantile
                                : MsCritical::clt;
    band = fpcaband::ms_band(fit, opt.tau1, crit);
  }

  fpcaband::io::Provenance prov;
  prov.seed = opt.seed;
  prov.config_hash = fpcaband::io::fnv1a_hex(canonical_config(
      "band", opt, "kind=" + kind + ";ms_critical=" + ms_critical));
  fpcaband::io::emit_band(band, fit, opt.out, prov);
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int run_select_cutoff(const CommonOptions& opt) {
  const FplrDataset<double> data = fpcaband::io::read_dataset(opt.data, opt.domain);
  const RiskCurve<double> curve =
      fpcaband::risk_curve<double>(data, opt.candidates);
  const CutoffChoice plus_one =
      fpcaband::select_cutoff(curve, CutoffRule::mhat_plus_one);
  const CutoffChoice max_two =
      fpcaband::select_cutoff(curve, CutoffRule::mhat_max_two);
  std::cout << "mhat " << curve.mhat() << "\n";
  std::cout << "rule_mhat_plus_one " << plus_one.level << "\n";
  std::cout << "rule_mhat_max_two " << max_two.level << "\n";
  if (plus_one.at_boundary) {
    std::cerr << "warning: mhat+1 capped at the candidate maximum\n";
  }
  return 0;
}

int run_risk_curve(const CommonOptions& opt) {
  if (opt.out.empty()) {
    throw CLI::ValidationError("--out", "risk-curve mode writes a file");
  }
  const FplrDataset<double> data = fpcaband::io::read_dataset(opt.data, opt.domain);
  const RiskCurve<double> curve =
      fpcaband::risk_curve<double>(data, opt.candidates);
  fpcaband::io::Provenance prov;
  prov.seed = opt.seed;
  prov.config_hash = fpcaband::io::fnv1a_hex(canonical_config("risk-curve", opt));
  fpcaband::io::emit_risk_curve(curve, opt.out, prov);
  std::cout << "mhat " << curve.mhat() << "\n";
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

struct SimulateOptions {
  std::string preset;
  std::int64_t n = 500;
  double alpha = 2.0;
  double beta = 3.2;
  std::string noise = "gaussian";
  std::int64_t reps = 500;
  int workers = 0;
};

int run_simulate(const CommonOptions& opt, const SimulateOptions& sim) {
  if (opt.out.empty()) {
    throw CLI::ValidationError("--out", "simulate mode writes a file");
  }
  std::vector<StudyConfig<double>> configs;
  std::int64_t reps = sim.reps;
  std::int64_t draws = opt.draws;

  const auto make_config = [&](std::int64_t n, double alpha, double beta,
                               NoiseKind noise) {
    StudyConfig<double> cfg;
    cfg.dgp.n = n;
    cfg.dgp.alpha = alpha;
    cfg.dgp.beta = beta;
    cfg.dgp.noise = noise;
    cfg.dgp.seed = opt.seed;
    cfg.tau1 = opt.tau1;
    cfg.tau2 = opt.tau2;
    cfg.quantile_draws = draws;
    cfg.candidates = opt.candidates;
    return cfg;
  };

  if (sim.preset == "paper-small") {
    reps = 500;
    draws = 20000;
    configs.push_back(make_config(500, 2.0, 3.2, NoiseKind::gaussian));
  } else if (sim.preset == "paper-full") {
    reps = 2000;
    draws = 20000;
    for (const NoiseKind noise : {NoiseKind::gaussian, NoiseKind::chisq5}) {
      for (const double alpha : {1.1, 2.0}) {
        for (const double beta : {2.6, 3.2}) {
          for (std::int64_t n = 100; n <= 1000; n += 100) {
            configs.push_back(make_config(n, alpha, beta, noise));
          }
        }
      }
    }
  } else if (sim.preset.empty()) {
    const NoiseKind noise =
        sim.noise == "chisq5" ? NoiseKind::chisq5 : NoiseKind::gaussian;
    configs.push_back(make_config(sim.n, sim.alpha, sim.beta, noise));
  } else {
    throw CLI::ValidationError("--preset",
                               "expected paper-small or paper-full");
  }

  const std::vector<StudyResult<double>> results =
      fpcaband::run_study(configs, reps, sim.workers);

  fpcaband::io::Provenance prov;
  prov.seed = opt.seed;
  std::ostringstream extra;
  extra << "preset=" << sim.preset << ";n=" << sim.n << ";alpha=" << sim.alpha
        << ";beta=" << sim.beta << ";noise=" << sim.noise << ";R=" << reps;
  prov.config_hash =
      fpcaband::io::fnv1a_hex(canonical_config("simulate", opt, extra.str()));
  fpcaband::io::emit_study(results, opt.out, prov);
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // `--mode X` is accepted as a synonym for the subcommand spelling
  std::vector<std::string> args;
  std::string mode_value;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--mode" && i + 1 < argc) {
      mode_value = argv[++i];
    } else if (arg.rfind("--mode=", 0) == 0) {
      mode_value = arg.substr(7);
    } else {
      args.push_back(arg);
    }
  }
  if (!mode_value.empty()) args.insert(args.begin(), mode_value);

  CLI::App app{"functional linear regression with PCA-based confidence bands"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key-value config file; flags override it");

  CommonOptions opt;
  SimulateOptions sim;
  std::string band_kind = "proposed";
  std::string ms_critical = "clt";
  std::string tecator_in;
  std::string tecator_out;
  long tecator_take = 215;

  CLI::App* fit = app.add_subcommand("fit", "fit the model, print coefficients");
  add_common_flags(fit, opt, true);
  auto* fit_m = fit->add_option("--m", opt.m, "cut-off level")
                    ->check(CLI::PositiveNumber);
  fit->add_option("--rule", opt.rule, "cut-off rule when --m is absent");

  CLI::App* band = app.add_subcommand("band", "write a confidence band file");
  add_common_flags(band, opt, true);
  auto* band_m = band->add_option("--m", opt.m, "cut-off level")
                     ->check(CLI::PositiveNumber);
  band->add_option("--rule", opt.rule, "cut-off rule when --m is absent");
  band->add_option("--kind", band_kind, "proposed or ms")
      ->check(CLI::IsMember({"proposed", "ms"}));
  band->add_option("--ms-critical", ms_critical, "clt or chisq")
      ->check(CLI::IsMember({"clt", "chisq"}));

  CLI::App* select = app.add_subcommand("select-cutoff",
                                        "print the risk-minimizing cut-off");
  add_common_flags(select, opt, true);

  CLI::App* risk = app.add_subcommand("risk-curve", "write the risk table");
  add_common_flags(risk, opt, true);

  CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo study");
  add_common_flags(simulate, opt, false);
  simulate->add_option("--preset", sim.preset, "paper-small or paper-full");
  simulate->add_option("--n", sim.n, "sample size")->check(CLI::PositiveNumber);
  simulate->add_option("--alpha", sim.alpha, "eigenvalue decay");
  simulate->add_option("--beta", sim.beta, "slope coefficient decay");
  simulate->add_option("--noise", sim.noise, "gaussian or chisq5")
      ->check(CLI::IsMember({"gaussian", "chisq5"}));
  simulate->add_option("--R", sim.reps, "replication count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--workers", sim.workers,
                       "worker threads (0 = hardware)");

  CLI::App* convert =
      app.add_subcommand("convert-tecator", "convert the raw Tecator export");
  convert->add_option("--in", tecator_in, "raw whitespace-separated file")
      ->required();
  convert->add_option("--out", tecator_out, "dataset CSV to write")->required();
  convert->add_option("--take", tecator_take, "records to keep");

  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed list
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return run_fit(opt, fit_m->count() > 0);
    if (band->parsed()) {
      return run_band(opt, band_m->count() > 0, band_kind, ms_critical);
    }
    if (select->parsed()) return run_select_cutoff(opt);
    if (risk->parsed()) return run_risk_curve(opt);
    if (simulate->parsed()) return run_simulate(opt, sim);
    if (convert->parsed()) {
      const long written =
          fpcaband::io::convert_tecator(tecator_in, tecator_out, tecator_take);
      std::cout << "wrote " << written << " records to " << tecator_out << "\n";
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
