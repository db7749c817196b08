#include "morphforge/eval/scores.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "morphforge/core/archive.hpp"
#include "morphforge/core/error.hpp"

namespace morphforge::eval {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_score(const std::string& text, const std::filesystem::path& path, int line) {
  double v = 0.0;
  const auto t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad score '" + t + "'");
  }
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path.string());
  return in;
}

}  // namespace

ScoreMatrix to_score_matrix(const std::vector<MatedScore>& rows) {
  ScoreMatrix m;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, fresh] = index.emplace(r.morph_id, m.mated.size());
    if (fresh) m.mated.emplace_back();
    m.mated[it->second].push_back(r.score);
  }
  return m;
}

std::vector<MatedScore> read_mated_scores(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<MatedScore> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    if (n == 1 && line.rfind("morph_id", 0) == 0) continue;
    std::istringstream ss(line);
    MatedScore r;
    std::string score;
    if (!std::getline(ss, r.morph_id, ',') || !std::getline(ss, r.subject_id, ',') ||
        !std::getline(ss, score)) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": expected 3 fields");
    }
    r.morph_id = trim(r.morph_id);
    r.subject_id = trim(r.subject_id);
    r.score = parse_score(score, path, n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_score(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_mated_scores(const std::filesystem::path& path, const std::vector<MatedScore>& rows) {
  std::string out = "morph_id,subject_id,score\n";
  for (const auto& r : rows) {
    out += r.morph_id + "," + r.subject_id + "," + format_score(r.score) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<double> read_score_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> v;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    v.push_back(parse_score(line, path, n));
  }
  return v;
}

void write_score_list(const std::filesystem::path& path, const std::vector<double>& scores) {
  std::string out;
  for (double s : scores) out += format_score(s) + "\n";
  write_file_atomic(path, out);
}

}  // namespace morphforge::eval
