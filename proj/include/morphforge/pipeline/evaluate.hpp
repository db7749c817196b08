#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "morphforge/eval/report.hpp"
#include "morphforge/pipeline/stages.hpp"

namespace morphforge::pipeline {

/// Morph images per method for one pair. Methods: landmark (classical
/// baseline), aux (latent interpolation baseline), hgfm_stage1 (fused
/// generator output) and hgfm (blended final image).
inline const std::vector<std::string> kMethods = {"landmark", "aux", "hgfm_stage1", "hgfm"};

struct MorphSetEntry {
  MorphPair pair;
  std::string identity1, identity2;
  std::map<std::string, Image> images;
};
using MorphSet = std::vector<MorphSetEntry>;

MorphSetEntry to_entry(const MorphRecord& record);

/// Writes every record under dir/<pair>/, plus dir/index.csv and the
/// wall-clock figures in dir/timings.csv.
void write_morphs(const std::filesystem::path& dir, const std::vector<MorphRecord>& records);
/// Reads what write_morphs produced. Missing method images are left out
/// (reported as n/a later) with a warning.
MorphSet load_morphs(const std::filesystem::path& dir);

/// Impostor scores of recogniser `frs` (0..3) over cross-identity pairs of
/// cfg.calibration_identities synthetic identities drawn from a seed stream
/// disjoint from the dataset's.
std::vector<double> synthetic_impostor_scores(const MorphModels& models, int frs);

/// Cosine similarity of the two embeddings.
double similarity(const loss::Embedder& frs, const Image& a, const Image& b);

struct EvaluationInputs {
  /// Optional directory of externally produced scores:
  ///   calibration_<FRS>.txt, mated_<method>_<FRS>.csv,
  ///   mad_bona_fide.txt, mad_<method>.txt.
  /// Missing files fall back to the toy components.
  std::filesystem::path scores_dir;
};

/// One report row per method (plus MAD rows). MMPMR uses
/// tau = threshold_at_fmr(calibration, cfg.fmr); mated probes are captures of
/// each contributor other than the one that was morphed, when available. FID
/// compares morphs to all bona fide captures; SSIM and PSNR average over both
/// contributors.
eval::ReportTables evaluate(const MorphModels& models, const MorphSet& morphs,
                            const std::vector<FaceSample>& bona_fide,
                            const EvaluationInputs& inputs = {});

/// Report built from score files alone (no images): MMPMR per method and FRS
/// and the MAD table.
eval::ReportTables report_from_scores(const PipelineConfig& cfg,
                                      const std::filesystem::path& scores_dir);

struct AblationVariant {
  std::string name;
  AblationFlags flags;
};

/// full, no_geometry, single_embedder, no_local, no_blending, poisson_blending.
const std::vector<AblationVariant>& ablation_variants();

struct AblationRun {
  eval::ReportTables tables;  // key column "variant", one row per variant
  std::map<std::string, std::vector<MorphRecord>> records;
};

/// Trains, morphs and evaluates every variant from the same seed. Outputs go
/// to out_dir/<variant>/ and the comparison to out_dir/report.{csv,md}.
AblationRun run_ablation(const PipelineConfig& base, const std::vector<FaceSample>& samples,
                         const std::filesystem::path& out_dir);

}  // namespace morphforge::pipeline
