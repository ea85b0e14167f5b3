#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fpcaband/dgp.hpp"
#include "fpcaband/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FPCABAND_CLI_PATH) + " " + args +
                          " 2>/dev/null";
  std::array<char, 4096> buf{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) {
    output += buf.data();
  }
  const int status = pclose(pipe);
  return CliResult{WEXITSTATUS(status), output};
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    std::random_device rd;
    const fs::path p = fs::temp_directory_path() /
                       ("fpcaband_cli_" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_sample_dataset() {
  static const fs::path path = [] {
    fpcaband::DgpConfig<double> cfg;
    cfg.n = 120;
    cfg.seed = 31415;
    const auto sample = fpcaband::dgp_sample(cfg);
    const fs::path p = scratch_dir() / "sample.csv";
    fpcaband::io::write_dataset(sample.data, p.string());
    return p;
  }();
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

}  // namespace

TEST_CASE("cli fit prints the fitted summary") {
  const auto data = write_sample_dataset();
  const auto res = run_cli("fit --data " + data.string() + " --m 3");
  CHECK(res.exit_code == 0);
  CHECK(value_of(res.stdout_text, "m") == "3");
  CHECK(value_of(res.stdout_text, "n") == "120");
  CHECK(!value_of(res.stdout_text, "sigma2").empty());
  CHECK(!value_of(res.stdout_text, "b_3").empty());
}

TEST_CASE("cli band runs are byte-identical under a fixed seed") {
  const auto data = write_sample_dataset();
  const fs::path out1 = scratch_dir() / "band1.csv";
  const fs::path out2 = scratch_dir() / "band2.csv";
  const std::string common = "band --data " + data.string() +
                             " --m 4 --tau1 0.1 --tau2 0.1 --B 5000 --seed 7 "
                             "--out ";
  CHECK(run_cli(common + out1.string()).exit_code == 0);
  CHECK(run_cli(common + out2.string()).exit_code == 0);
  const std::string text = slurp(out1);
  CHECK(text == slurp(out2));
  CHECK(!text.empty());
  CHECK(text.find("# kind proposed") != std::string::npos);

  // a different seed changes the simulated quantile
  const fs::path out3 = scratch_dir() / "band3.csv";
  CHECK(run_cli("band --data " + data.string() +
                " --m 4 --B 5000 --seed 8 --out " + out3.string())
            .exit_code == 0);
  CHECK(slurp(out3) != text);
}

TEST_CASE("cli ms band variant") {
  const auto data = write_sample_dataset();
  const fs::path out = scratch_dir() / "band_ms.csv";
  const auto res = run_cli("band --data " + data.string() +
                           " --m 4 --kind ms --out " + out.string());
  CHECK(res.exit_code == 0);
  CHECK(slurp(out).find("# kind ms") != std::string::npos);
}

TEST_CASE("cli select-cutoff prints both rules") {
  const auto data = write_sample_dataset();
  const auto res = run_cli("select-cutoff --data " + data.string());
  CHECK(res.exit_code == 0);
  const int mhat = std::stoi(value_of(res.stdout_text, "mhat"));
  const int plus = std::stoi(value_of(res.stdout_text, "rule_mhat_plus_one"));
  const int maxtwo = std::stoi(value_of(res.stdout_text, "rule_mhat_max_two"));
  CHECK(mhat >= 1);
  CHECK(plus == std::min(mhat + 1, 10));
  CHECK(maxtwo == std::max(mhat, 2));
}

TEST_CASE("cli risk-curve writes the table") {
  const auto data = write_sample_dataset();
  const fs::path out = scratch_dir() / "risk.csv";
  const auto res = run_cli("risk-curve --data " + data.string() + " --out " +
                           out.string());
  CHECK(res.exit_code == 0);
  CHECK(slurp(out).find("m,risk") != std::string::npos);
}

TEST_CASE("cli simulate writes the study table") {
  const fs::path out = scratch_dir() / "study.csv";
  const auto res = run_cli(
      "simulate --n 50 --R 6 --B 2000 --seed 3 --workers 2 --out " +
      out.string());
  CHECK(res.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("ucp,mcp") != std::string::npos);
  CHECK(text.find("gaussian") != std::string::npos);
}

TEST_CASE("cli simulate preset writes the full study schema") {
  const fs::path out = scratch_dir() / "preset.csv";
  const auto res =
      run_cli("simulate --preset paper-small --seed 11 --out " + out.string());
  CHECK(res.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.find("n,alpha,beta,noise,tau1,tau2,B,R,rule,band,ucp,mcp") !=
        std::string::npos);
  CHECK(text.find("500,2,3.2,gaussian,0.1,0.1,20000,500,") !=
        std::string::npos);
}

TEST_CASE("cli config file supplies defaults that flags override") {
  const auto data = write_sample_dataset();
  const fs::path ini = scratch_dir() / "run.ini";
  {
    std::ofstream out(ini);
    out << "[band]\n";
    out << "m=2\n";
    out << "B=5000\n";
    out << "seed=99\n";
  }
  const fs::path out1 = scratch_dir() / "cfg_band.csv";
  const auto res = run_cli("--config " + ini.string() + " band --data " +
                           data.string() + " --out " + out1.string());
  CHECK(res.exit_code == 0);
  CHECK(slurp(out1).find("# m 2") != std::string::npos);

  // the flag beats the config value
  const fs::path out2 = scratch_dir() / "cfg_band2.csv";
  const auto res2 = run_cli("--config " + ini.string() + " band --data " +
                            data.string() + " --m 3 --out " + out2.string());
  CHECK(res2.exit_code == 0);
  CHECK(slurp(out2).find("# m 3") != std::string::npos);
}

TEST_CASE("cli --mode flag is a synonym for the subcommand") {
  const auto data = write_sample_dataset();
  const auto sub = run_cli("fit --data " + data.string() + " --m 2");
  const auto flag = run_cli("--mode fit --data " + data.string() + " --m 2");
  CHECK(flag.exit_code == 0);
  CHECK(flag.stdout_text == sub.stdout_text);
  const auto eq = run_cli("--mode=select-cutoff --data " + data.string());
  CHECK(eq.exit_code == 0);
  CHECK(!value_of(eq.stdout_text, "mhat").empty());
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("band --no-such-flag").exit_code == 2);
  CHECK(run_cli("fit").exit_code == 2);  // missing --data
  CHECK(run_cli("fit --data /nonexistent.csv").exit_code == 1);
  const auto data = write_sample_dataset();
  CHECK(run_cli("band --data " + data.string() + " --m 4").exit_code == 2);
  CHECK(run_cli("fit --data " + data.string() + " --m 4 --tau1 2.0")
            .exit_code == 2);
}

TEST_CASE("cli tecator conversion") {
  const fs::path raw = scratch_dir() / "tecator_raw.dat";
  {
    std::ofstream out(raw);
    for (int i = 0; i < 5; ++i) {
      for (int c = 0; c < 122; ++c) out << 3.0 + 0.001 * c << " ";
      out << "60.0 12.5 15.0\n";
    }
  }
  const fs::path csv = scratch_dir() / "tecator_conv.csv";
  const auto res = run_cli("convert-tecator --in " + raw.string() + " --out " +
                           csv.string() + " --take 5");
  CHECK(res.exit_code == 0);
  const auto back = fpcaband::io::read_dataset(csv.string());
  CHECK(back.n() == 5);
  CHECK(back.y[0] == 12.5);
}
