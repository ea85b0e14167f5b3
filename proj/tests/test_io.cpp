#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fpcaband/band.hpp"
#include "fpcaband/dgp.hpp"
#include "fpcaband/flr.hpp"
#include "fpcaband/io.hpp"

namespace fs = std::filesystem;
using fpcaband::FplrDataset;
using fpcaband::make_domain;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    std::random_device rd;
    const fs::path p = fs::temp_directory_path() /
                       ("fpcaband_io_" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

FplrDataset<double> toy_dataset() {
  FplrDataset<double> data;
  data.domain = make_domain(0.0, 1.0, 2);
  data.curves.resize(3, 2);
  data.curves << 0.1, -0.3, 1.0 / 3.0, 2.5, -1.7, 0.0;
  data.y.resize(3);
  data.y << 1.25, -0.5, 3.75;
  return data;
}

}  // namespace

TEST_CASE("dataset round-trips field-exactly") {
  auto data = toy_dataset();
  Eigen::MatrixXd z(3, 2);
  z << 1.0, 0.7, 1.0, -2.2, 1.0, 1.0 / 7.0;
  data.z = z;

  const fs::path path = scratch_dir() / "toy.csv";
  fpcaband::io::write_dataset(data, path.string());
  const auto back = fpcaband::io::read_dataset(path.string());

  CHECK(back.domain == data.domain);
  CHECK(back.curves == data.curves);
  CHECK(back.y == data.y);
  REQUIRE(back.z.has_value());
  CHECK(*back.z == *data.z);
}

TEST_CASE("round-trip survives awkward doubles") {
  FplrDataset<double> data;
  data.domain = make_domain(-2.5, 17.0, 5);
  data.curves.resize(4, 5);
  data.y.resize(4);
  std::mt19937_64 gen(77);
  std::normal_distribution<double> dist;
  for (Eigen::Index i = 0; i < 4; ++i) {
    data.y[i] = dist(gen) * std::pow(10.0, i - 2);
    for (Eigen::Index t = 0; t < 5; ++t) {
      data.curves(i, t) = dist(gen) * std::pow(10.0, t - 3);
    }
  }
  const fs::path path = scratch_dir() / "awkward.csv";
  fpcaband::io::write_dataset(data, path.string());
  const auto back = fpcaband::io::read_dataset(path.string());
  CHECK(back.curves == data.curves);
  CHECK(back.y == data.y);
}

TEST_CASE("reader diagnostics name the offending cell") {
  const fs::path path = scratch_dir() / "bad.csv";
  {
    std::ofstream out(path);
    out << "# domain 0 1\n";
    out << "y,x_1,x_2\n";
    out << "1.0,2.0,3.0\n";
    out << "1.0,oops,3.0\n";
  }
  try {
    fpcaband::io::read_dataset(path.string());
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("x_1") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }
}

TEST_CASE("reader rejects covariates without the intercept column") {
  const fs::path path = scratch_dir() / "badz.csv";
  {
    std::ofstream out(path);
    out << "# domain 0 1\n";
    out << "y,z1,x_1,x_2\n";
    out << "1.0,1.0,2.0,3.0\n";
    out << "1.0,0.5,2.0,3.0\n";
  }
  CHECK_THROWS_AS(fpcaband::io::read_dataset(path.string()),
                  std::invalid_argument);
}

TEST_CASE("domain metadata and overrides") {
  const fs::path path = scratch_dir() / "nodomain.csv";
  {
    std::ofstream out(path);
    out << "y,x_1,x_2\n";
    out << "1.0,2.0,3.0\n";
    out << "0.5,1.0,2.0\n";
  }
  CHECK_THROWS_AS(fpcaband::io::read_dataset(path.string()),
                  std::runtime_error);
  const auto data =
      fpcaband::io::read_dataset(path.string(), std::make_pair(850.0, 1050.0));
  CHECK(data.domain.lower() == 850.0);
  CHECK(data.domain.weight() == 100.0);
  CHECK_THROWS_AS(fpcaband::io::read_dataset("/nonexistent/file.csv"),
                  std::runtime_error);
}

TEST_CASE("tecator converter handles the classic 125-wide layout") {
  const fs::path raw = scratch_dir() / "tecator.dat";
  const long n = 220;
  {
    std::ofstream out(raw);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> absorb(2.0, 5.5);
    for (long i = 0; i < n; ++i) {
      for (int c = 0; c < 100; ++c) out << absorb(gen) << " ";
      for (int c = 0; c < 22; ++c) out << absorb(gen) << " ";
      out << 60.0 + i << " " << 10.0 + 0.5 * i << " " << 15.0 + i << "\n";
    }
  }
  const fs::path csv = scratch_dir() / "tecator.csv";
  const long written =
      fpcaband::io::convert_tecator(raw.string(), csv.string());
  CHECK(written == 215);
  const auto data = fpcaband::io::read_dataset(csv.string());
  CHECK(data.n() == 215);
  CHECK(data.domain.size() == 100);
  CHECK(data.domain.lower() == 850.0);
  CHECK(data.domain.upper() == 1050.0);
  CHECK(data.y[0] == 10.0);   // fat content of the first record
  CHECK(data.y[3] == 11.5);
}

TEST_CASE("tecator converter handles the 103-wide layout and bad input") {
  const fs::path raw = scratch_dir() / "tecator103.dat";
  {
    std::ofstream out(raw);
    for (long i = 0; i < 10; ++i) {
      for (int c = 0; c < 100; ++c) out << 3.0 + 0.01 * c << " ";
      out << 60.0 << " " << 20.0 + i << " " << 15.0 << "\n";
    }
  }
  const fs::path csv = scratch_dir() / "tecator103.csv";
  const long written =
      fpcaband::io::convert_tecator(raw.string(), csv.string(), 8);
  CHECK(written == 8);
  const auto data = fpcaband::io::read_dataset(csv.string());
  CHECK(data.y[2] == 22.0);

  const fs::path junk = scratch_dir() / "junk.dat";
  {
    std::ofstream out(junk);
    out << "1 2 3 4 5 6 7\n";
  }
  CHECK_THROWS_AS(
      fpcaband::io::convert_tecator(junk.string(), csv.string()),
      std::runtime_error);
}

TEST_CASE("band files carry provenance and reproduce the band") {
  fpcaband::DgpConfig<double> cfg;
  cfg.n = 60;
  cfg.seed = 909;
  const auto sample = fpcaband::dgp_sample(cfg);
  const auto fit = fpcaband::fit_pca(sample.data, 4);
  const auto quantile = fpcaband::simulate_quantile<double>(
      fit.eig.eigenvalues.head(4), 0.1, 5000, 42);
  const auto band = fpcaband::build_band(fit, quantile, 0.1, sample.data.n());

  fpcaband::io::Provenance prov;
  prov.seed = 42;
  prov.config_hash = fpcaband::io::fnv1a_hex("test-config");
  const fs::path path = scratch_dir() / "band.csv";
  fpcaband::io::emit_band(band, fit, path.string(), prov);

  const std::string text = slurp(path);
  CHECK(text.find("# fpcaband ") != std::string::npos);
  CHECK(text.find("# config " + prov.config_hash) != std::string::npos);
  CHECK(text.find("# seed 42") != std::string::npos);
  CHECK(text.find("# kind proposed") != std::string::npos);
  CHECK(text.find("t,bhat,lower,upper") != std::string::npos);

  // emitting the same band again is byte-identical
  const fs::path path2 = scratch_dir() / "band2.csv";
  fpcaband::io::emit_band(band, fit, path2.string(), prov);
  CHECK(slurp(path2) == text);

  // parse rows back: constant width, symmetric around the center
  std::istringstream in(text);
  std::string line;
  double first_width = -1.0;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream cells(line);
    double t = 0.0;
    double bhat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    cells >> t >> bhat >> lo >> hi;
    CHECK(t == sample.data.domain.node(row));
    CHECK(bhat == fit.slope.values[row]);
    CHECK(hi - bhat == doctest::Approx(bhat - lo).epsilon(1e-12));
    if (first_width < 0.0) {
      first_width = hi - lo;
    } else {
      CHECK(hi - lo == doctest::Approx(first_width).epsilon(1e-12));
    }
    ++row;
  }
  CHECK(row == sample.data.domain.size());
}

TEST_CASE("zero half-width collapses the emitted band onto the center") {
  fpcaband::DgpConfig<double> cfg;
  cfg.n = 30;
  cfg.seed = 910;
  auto sample = fpcaband::dgp_sample(cfg);
  auto fit = fpcaband::fit_pca(sample.data, 2);
  fit.sigma2 = 0.0;  // exact zero residual variance, hence zero half-width
  const auto quantile = fpcaband::simulate_quantile<double>(
      fit.eig.eigenvalues.head(2), 0.1, 2000, 1);
  const auto band = fpcaband::build_band(fit, quantile, 0.1, sample.data.n());

  const fs::path path = scratch_dir() / "zeroband.csv";
  fpcaband::io::emit_band(band, fit, path.string());
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream cells(line);
    double t = 0.0;
    double bhat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    cells >> t >> bhat >> lo >> hi;
    CHECK(lo == bhat);
    CHECK(hi == bhat);
  }
}

TEST_CASE("MS band file width profile matches the eigen structure") {
  fpcaband::DgpConfig<double> cfg;
  cfg.n = 50;
  cfg.seed = 911;
  const auto sample = fpcaband::dgp_sample(cfg);
  const auto fit = fpcaband::fit_pca(sample.data, 3);
  const auto band = fpcaband::ms_band(fit, 0.1);
  const fs::path path = scratch_dir() / "msband.csv";
  fpcaband::io::emit_band(band, fit, path.string());

  const std::string text = slurp(path);
  CHECK(text.find("# kind ms") != std::string::npos);
  std::istringstream in(text);
  std::string line;
  Eigen::Index row = 0;
  const double crit = std::pow(band.critical.value, 2);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream cells(line);
    double t = 0.0;
    double bhat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    cells >> t >> bhat >> lo >> hi;
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double phi = fit.eig.eigenfunctions(row, j);
      s += phi * phi / fit.eig.eigenvalues[j];
    }
    const double expect = 2.0 * std::sqrt(fit.sigma2) *
                          std::sqrt(crit / 50.0 * s);
    CHECK(std::abs((hi - lo) - expect) <= 1e-10);
    ++row;
  }
}

TEST_CASE("risk and study tables have the promised schema") {
  fpcaband::DgpConfig<double> cfg;
  cfg.n = 40;
  cfg.seed = 912;
  const auto sample = fpcaband::dgp_sample(cfg);
  const auto curve =
      fpcaband::risk_curve(sample.data, {1, 2, 3, 4, 5});
  const fs::path rpath = scratch_dir() / "risk.csv";
  fpcaband::io::emit_risk_curve(curve, rpath.string());
  const std::string rtext = slurp(rpath);
  CHECK(rtext.find("m,risk") != std::string::npos);
  CHECK(rtext.find("# mhat ") != std::string::npos);

  fpcaband::StudyConfig<double> scfg;
  scfg.dgp = cfg;
  scfg.quantile_draws = 2000;
  const auto result = fpcaband::run_study(scfg, 4, 1);
  const fs::path spath = scratch_dir() / "study.csv";
  fpcaband::io::emit_study({result}, spath.string());
  const std::string stext = slurp(spath);
  CHECK(stext.find("rule,band,ucp,mcp") != std::string::npos);
  CHECK(stext.find("rmse_10") != std::string::npos);
  CHECK(stext.find("mhat_plus_one,proposed") != std::string::npos);
  CHECK(stext.find("mhat_max_two,ms") != std::string::npos);
}

TEST_CASE("config hash is stable and input-sensitive") {
  const auto a = fpcaband::io::fnv1a_hex("mode=band;seed=7");
  const auto b = fpcaband::io::fnv1a_hex("mode=band;seed=7");
  const auto c = fpcaband::io::fnv1a_hex("mode=band;seed=8");
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 16);
}
