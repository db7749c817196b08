#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "morphforge/eval/metrics.hpp"

namespace morphforge::eval {

inline constexpr int kFrsColumns = 4;

/// One method (or ablation variant). Missing metrics render as `n/a`.
/// MMPMR values are fractions in [0, 1] and are emitted as percentages.
struct MethodRow {
  std::string name;
  std::optional<double> fid;
  std::optional<double> ssim;
  std::optional<double> psnr;
  std::array<std::optional<double>, kFrsColumns> mmpmr;
};

struct MadRow {
  std::string name;  // "<detector>/<method>"
  std::optional<MadRates> rates;
};

struct ReportTables {
  std::string title = "Morph quality and vulnerability";
  std::string key_column = "method";
  std::array<std::string, kFrsColumns> frs_names = {"A", "B", "C", "D"};
  std::vector<MethodRow> rows;
  std::vector<MadRow> mad;
};

std::string format_fid(std::optional<double> v);
std::string format_ssim(std::optional<double> v);
std::string format_psnr(std::optional<double> v);
/// Fraction -> percent, 1 decimal.
std::string format_rate(std::optional<double> v);

std::string report_csv(const ReportTables& t);
std::string report_markdown(const ReportTables& t);
std::string mad_csv(const ReportTables& t);

/// Writes report.csv and report.md (and mad.csv when MAD rows are present)
/// into `dir`, creating it if needed. Each file is written atomically.
void emit_report(const std::filesystem::path& dir, const ReportTables& t);

}  // namespace morphforge::eval
