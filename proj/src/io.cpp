#include "fpcaband/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace fpcaband::io {

namespace {

std::string read_file_or_throw(const std::string& path, std::ifstream& in) {
  in.open(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  return path;
}

double parse_cell(const std::string& cell, std::size_t row,
                  const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << column << ": '" << cell
        << "' is not a number";
    throw std::runtime_error(msg.str());
  }
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << column << ": non-finite value";
    throw std::runtime_error(msg.str());
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

void write_or_throw(std::ofstream& out, const std::string& path) {
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

void emit_provenance(std::ofstream& out, const Provenance& prov) {
  out << "# fpcaband " << kVersion << "\n";
  out << "# config "
      << (prov.config_hash.empty() ? std::string("none") : prov.config_hash)
      << "\n";
  out << "# seed " << prov.seed << "\n";
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return std::string(buf.data(), 16);
}

FplrDataset<double> read_dataset(
    const std::string& path,
    std::optional<std::pair<double, double>> domain_override) {
  std::ifstream in;
  read_file_or_throw(path, in);

  std::optional<std::pair<double, double>> file_domain;
  std::string line;
  // comment/metadata block
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    std::istringstream meta(line.substr(1));
    std::string key;
    meta >> key;
    if (key == "domain") {
      double lo = 0.0;
      double hi = 0.0;
      if (meta >> lo >> hi) file_domain = {lo, hi};
    }
  }
  if (!in && line.empty()) {
    throw std::runtime_error("dataset file has no header: " + path);
  }

  // header row
  const std::vector<std::string> header = split_csv(line);
  if (header.empty() || header[0] != "y") {
    throw std::runtime_error("dataset header must start with column 'y': " + path);
  }
  std::size_t zcount = 0;
  std::size_t col = 1;
  while (col < header.size() && header[col].rfind('z', 0) == 0) {
    ++zcount;
    ++col;
  }
  const std::size_t xbegin = col;
  std::size_t xcount = 0;
  while (col < header.size() && header[col].rfind('x', 0) == 0) {
    ++xcount;
    ++col;
  }
  if (col != header.size()) {
    throw std::runtime_error("unrecognized dataset column '" + header[col] +
                             "': " + path);
  }
  if (xcount < 2) {
    throw std::runtime_error("dataset needs at least 2 curve columns: " + path);
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_no;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row_no << ": expected " << header.size()
          << " cells, found " << cells.size();
      throw std::runtime_error(msg.str());
    }
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      vals[c] = parse_cell(cells[c], row_no, header[c]);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) {
    throw std::runtime_error("dataset has no observations: " + path);
  }

  const std::optional<std::pair<double, double>> domain =
      domain_override ? domain_override : file_domain;
  if (!domain) {
    throw std::runtime_error(
        "no domain bounds: file lacks a '# domain' line and no override given");
  }

  FplrDataset<double> data;
  data.domain = make_domain(domain->first, domain->second,
                            static_cast<Eigen::Index>(xcount));
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.y.resize(n);
  data.curves.resize(n, static_cast<Eigen::Index>(xcount));
  if (zcount > 0) {
    data.z = Eigen::MatrixX<double>(n, static_cast<Eigen::Index>(zcount));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<double>& vals = rows[static_cast<std::size_t>(i)];
    data.y[i] = vals[0];
    for (std::size_t k = 0; k < zcount; ++k) {
      (*data.z)(i, static_cast<Eigen::Index>(k)) = vals[1 + k];
    }
    for (std::size_t k = 0; k < xcount; ++k) {
      data.curves(i, static_cast<Eigen::Index>(k)) = vals[xbegin + k];
    }
  }
  data.validate();
  return data;
}

void write_dataset(const FplrDataset<double>& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  write_or_throw(out, path);
  out << "# fpcaband " << kVersion << "\n";
  out << "# domain " << format_double(data.domain.lower()) << " "
      << format_double(data.domain.upper()) << "\n";
  out << "y";
  const Eigen::Index d = data.z ? data.z->cols() : 0;
  for (Eigen::Index k = 0; k < d; ++k) out << ",z" << (k + 1);
  for (Eigen::Index k = 0; k < data.domain.size(); ++k) out << ",x_" << (k + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (Eigen::Index k = 0; k < d; ++k) {
      out << "," << format_double((*data.z)(i, k));
    }
    for (Eigen::Index k = 0; k < data.domain.size(); ++k) {
      out << "," << format_double(data.curves(i, k));
    }
    out << "\n";
  }
  out.flush();
  write_or_throw(out, path);
}

namespace {

const char* method_name(QuantileMethod m) {
  switch (m) {
    case QuantileMethod::simulated:
      return "simulated";
    case QuantileMethod::normal_approx:
      return "normal_approx";
    case QuantileMethod::chi_squared:
      return "chi_squared";
  }
  return "unknown";
}

const char* rule_name(CutoffRule rule) {
  return rule == CutoffRule::mhat_plus_one ? "mhat_plus_one" : "mhat_max_two";
}

const char* kind_name(BandKind kind) {
  return kind == BandKind::proposed ? "proposed" : "ms";
}

}  // namespace

void emit_band(const ConfidenceBand<double>& band, const FplrFit<double>& fit,
               const std::string& path, const Provenance& prov) {
  std::ofstream out(path);
  write_or_throw(out, path);
  emit_provenance(out, prov);
  out << "# kind " << kind_name(band.kind) << "\n";
  out << "# m " << fit.m << "\n";
  out << "# sigma2 " << format_double(fit.sigma2) << "\n";
  out << "# tau1 " << format_double(band.tau1) << "\n";
  if (band.tau2) out << "# tau2 " << format_double(*band.tau2) << "\n";
  out << "# quantile " << format_double(band.critical.value) << "\n";
  out << "# quantile_method " << method_name(band.critical.method) << "\n";
  out << "# B " << band.critical.draws << "\n";
  out << "# quantile_seed " << band.critical.seed << "\n";
  out << "t,bhat,lower,upper\n";
  const Eigen::VectorX<double> lo = band.lower();
  const Eigen::VectorX<double> hi = band.upper();
  const auto& domain = band.center.domain;
  for (Eigen::Index i = 0; i < domain.size(); ++i) {
    out << format_double(domain.node(i)) << ","
        << format_double(band.center.values[i]) << "," << format_double(lo[i])
        << "," << format_double(hi[i]) << "\n";
  }
  out.flush();
  write_or_throw(out, path);
}

void emit_risk_curve(const RiskCurve<double>& curve, const std::string& path,
                     const Provenance& prov) {
  std::ofstream out(path);
  write_or_throw(out, path);
  emit_provenance(out, prov);
  out << "# mhat " << curve.mhat() << "\n";
  out << "m,risk\n";
  for (std::size_t c = 0; c < curve.candidates.size(); ++c) {
    out << curve.candidates[c] << ","
        << format_double(curve.values[static_cast<Eigen::Index>(c)]) << "\n";
  }
  out.flush();
  write_or_throw(out, path);
}

void emit_study(const std::vector<StudyResult<double>>& results,
                const std::string& path, const Provenance& prov) {
  if (results.empty()) {
    throw std::invalid_argument("emit_study: no results");
  }
  const std::vector<int>& candidates = results.front().config.candidates;
  for (const auto& res : results) {
    if (res.config.candidates != candidates) {
      throw std::invalid_argument("emit_study: configurations use different candidate sets");
    }
  }
  std::ofstream out(path);
  write_or_throw(out, path);
  emit_provenance(out, prov);
  out << "n,alpha,beta,noise,tau1,tau2,B,R,rule,band,ucp,mcp,"
         "mean_max_width,mean_mean_width,mean_cutoff,ball_fraction,"
         "mean_mhat,oracle_m";
  for (const int c : candidates) out << ",rmse_" << c;
  out << "\n";
  for (const auto& res : results) {
    const auto& cfg = res.config;
    for (const auto& row : res.rows) {
      out << cfg.dgp.n << "," << format_double(cfg.dgp.alpha) << ","
          << format_double(cfg.dgp.beta) << ","
          << (cfg.dgp.noise == NoiseKind::gaussian ? "gaussian" : "chisq5")
          << "," << format_double(cfg.tau1) << "," << format_double(cfg.tau2)
          << "," << cfg.quantile_draws << "," << res.replications << ","
          << rule_name(row.rule) << "," << kind_name(row.kind) << ","
          << format_double(row.ucp) << "," << format_double(row.mcp) << ","
          << format_double(row.mean_max_width) << ","
          << format_double(row.mean_mean_width) << ","
          << format_double(row.mean_cutoff) << ","
          << format_double(row.ball_member_fraction) << ","
          << format_double(res.mean_mhat) << "," << res.oracle_m;
      for (Eigen::Index i = 0; i < res.rmse.size(); ++i) {
        out << "," << format_double(res.rmse[i]);
      }
      out << "\n";
    }
  }
  out.flush();
  write_or_throw(out, path);
}

long convert_tecator(const std::string& in_path, const std::string& out_path,
                     long take) {
  std::ifstream in;
  read_file_or_throw(in_path, in);
  std::vector<double> numbers;
  double v = 0.0;
  while (in >> v) numbers.push_back(v);
  if (numbers.empty()) {
    throw std::runtime_error("tecator file contains no numbers: " + in_path);
  }

  constexpr std::size_t kChannels = 100;
  std::size_t record = 0;
  std::size_t fat_index = 0;
  if (numbers.size() % 125 == 0) {
    record = 125;     // channels, 22 principal components, contents
    fat_index = 123;  // moisture 122, fat 123, protein 124
  } else if (numbers.size() % 103 == 0) {
    record = 103;     // channels, contents
    fat_index = 101;
  } else {
    throw std::runtime_error(
        "unrecognized tecator layout: number count is divisible by neither 125 nor 103");
  }

  const auto available = static_cast<long>(numbers.size() / record);
  const long count = std::min(take, available);
  if (count < 2) {
    throw std::runtime_error("tecator conversion needs at least 2 records");
  }

  FplrDataset<double> data;
  data.domain = make_domain(850.0, 1050.0, static_cast<Eigen::Index>(kChannels));
  data.y.resize(count);
  data.curves.resize(count, static_cast<Eigen::Index>(kChannels));
  for (long i = 0; i < count; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * record;
    for (std::size_t c = 0; c < kChannels; ++c) {
      data.curves(i, static_cast<Eigen::Index>(c)) = numbers[base + c];
    }
    data.y[i] = numbers[base + fat_index];
  }
  write_dataset(data, out_path);
  return count;
}

}  // namespace fpcaband::io
