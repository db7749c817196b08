#include "morphforge/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "morphforge/core/archive.hpp"

namespace morphforge::eval {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string cell(std::optional<double> v, int decimals, double scale = 1.0) {
  if (!v || std::isnan(*v)) return "n/a";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return fixed(*v * scale, decimals);
}

std::vector<std::string> header(const ReportTables& t) {
  std::vector<std::string> h = {t.key_column, "fid", "ssim", "psnr"};
  for (const auto& n : t.frs_names) h.push_back("mmpmr_" + n);
  return h;
}

std::vector<std::string> cells(const MethodRow& r) {
  std::vector<std::string> c = {r.name, format_fid(r.fid), format_ssim(r.ssim),
                                format_psnr(r.psnr)};
  for (const auto& m : r.mmpmr) c.push_back(format_rate(m));
  return c;
}

const std::array<const char*, 4> kPointLabels = {"1", "5", "10", "20"};

std::vector<std::string> mad_header() {
  std::vector<std::string> h = {"detector", "eer"};
  for (const char* p : kPointLabels) h.push_back(std::string("apcer_at_bpcer_") + p);
  for (const char* p : kPointLabels) h.push_back(std::string("bpcer_at_apcer_") + p);
  return h;
}

std::vector<std::string> mad_cells(const MadRow& r) {
  std::vector<std::string> c = {r.name};
  auto rate = [](std::optional<double> v) { return cell(v, 2, 100.0); };
  if (!r.rates) {
    c.resize(1 + 1 + 2 * kPointLabels.size(), "n/a");
    return c;
  }
  c.push_back(rate(r.rates->eer));
  for (double v : r.rates->apcer_at_bpcer) c.push_back(rate(v));
  for (double v : r.rates->bpcer_at_apcer) c.push_back(rate(v));
  return c;
}

void csv_line(std::ostringstream& os, const std::vector<std::string>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << '\n';
}

void md_line(std::ostringstream& os, const std::vector<std::string>& v) {
  os << '|';
  for (const auto& s : v) os << ' ' << s << " |";
  os << '\n';
}

void md_rule(std::ostringstream& os, std::size_t n) {
  os << '|';
  for (std::size_t i = 0; i < n; ++i) os << (i == 0 ? " --- |" : " ---: |");
  os << '\n';
}

}  // namespace

std::string format_fid(std::optional<double> v) { return cell(v, 1); }
std::string format_ssim(std::optional<double> v) { return cell(v, 4); }
std::string format_psnr(std::optional<double> v) { return cell(v, 2); }
std::string format_rate(std::optional<double> v) { return cell(v, 1, 100.0); }

std::string report_csv(const ReportTables& t) {
  std::ostringstream os;
  csv_line(os, header(t));
  for (const auto& r : t.rows) csv_line(os, cells(r));
  return os.str();
}

std::string mad_csv(const ReportTables& t) {
  std::ostringstream os;
  csv_line(os, mad_header());
  for (const auto& r : t.mad) csv_line(os, mad_cells(r));
  return os.str();
}

std::string report_markdown(const ReportTables& t) {
  std::ostringstream os;
  os << "# " << t.title << "\n\n";
  os << "MMPMR at FMR = 0.1%, rates in percent.\n\n";
  const auto h = header(t);
  md_line(os, h);
  md_rule(os, h.size());
  for (const auto& r : t.rows) md_line(os, cells(r));
  if (!t.mad.empty()) {
    os << "\n## Morphing attack detection\n\n";
    const auto mh = mad_header();
    md_line(os, mh);
    md_rule(os, mh.size());
    for (const auto& r : t.mad) md_line(os, mad_cells(r));
  }
  return os.str();
}

void emit_report(const std::filesystem::path& dir, const ReportTables& t) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.csv", report_csv(t));
  write_file_atomic(dir / "report.md", report_markdown(t));
  if (!t.mad.empty()) write_file_atomic(dir / "mad.csv", mad_csv(t));
}

}  // namespace morphforge::eval
