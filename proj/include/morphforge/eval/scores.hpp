#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "morphforge/eval/metrics.hpp"

namespace morphforge::eval {

struct MatedScore {
  std::string morph_id;
  std::string subject_id;
  double score = 0.0;
};

/// Groups rows by morph id in first-appearance order.
ScoreMatrix to_score_matrix(const std::vector<MatedScore>& rows);

/// CSV `morph_id,subject_id,score` with that header line.
std::vector<MatedScore> read_mated_scores(const std::filesystem::path& path);
void write_mated_scores(const std::filesystem::path& path, const std::vector<MatedScore>& rows);

/// One score per line; blank lines are skipped.
std::vector<double> read_score_list(const std::filesystem::path& path);
void write_score_list(const std::filesystem::path& path, const std::vector<double>& scores);

/// Shortest decimal form that round-trips the double.
std::string format_score(double v);

}  // namespace morphforge::eval
