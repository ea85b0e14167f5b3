#pragma once

// File formats. Datasets travel as CSV with a `# domain lower upper` comment
// line, a header row `y[,z1..zd],x_1..x_p`, and one observation per row;
// nodes are never stored, every consumer rebuilds them from the domain
// bounds so all files share one quadrature. Band, risk-curve and study
// tables carry their provenance (version, seed, config hash) as comment
// lines so a run can be reproduced byte for byte.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpcaband/band.hpp"
#include "fpcaband/cutoff.hpp"
#include "fpcaband/flr.hpp"
#include "fpcaband/study.hpp"

namespace fpcaband::io {

inline constexpr const char* kVersion = "0.1.0";

struct Provenance {
  std::string config_hash;
  std::uint64_t seed{0};
};

// Shortest decimal representation that round-trips the double.
std::string format_double(double v);

// FNV-1a 64-bit hash, hex-encoded; used for config fingerprints.
std::string fnv1a_hex(const std::string& text);

FplrDataset<double> read_dataset(
    const std::string& path,
    std::optional<std::pair<double, double>> domain_override = std::nullopt);

void write_dataset(const FplrDataset<double>& data, const std::string& path);

void emit_band(const ConfidenceBand<double>& band, const FplrFit<double>& fit,
               const std::string& path, const Provenance& prov = {});

void emit_risk_curve(const RiskCurve<double>& curve, const std::string& path,
                     const Provenance& prov = {});

void emit_study(const std::vector<StudyResult<double>>& results,
                const std::string& path, const Provenance& prov = {});

// Converts the classic whitespace-separated Tecator export (125 numbers per
// record: 100 absorbance channels, 22 principal components, moisture, fat,
// protein; a 103-wide channels-plus-contents layout is also accepted) into
// the dataset CSV, y = fat content, domain [850, 1050]. Returns the number
// of records written.
long convert_tecator(const std::string& in_path, const std::string& out_path,
                     long take = 215);

}  // namespace fpcaband::io
