#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "morphforge/gan/bundle.hpp"
#include "morphforge/loss/losses.hpp"

namespace morphforge::pipeline {

struct AblationFlags {
  bool no_geometry = false;
  bool single_embedder = false;
  bool no_local = false;
  bool no_blending = false;
  bool poisson_blending = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct PipelineConfig {
  // Geometry.
  int resolution = 256;
  int global_depth = 0;  // 0 = deepest that fits (8 at 256)
  double morph_factor = 0.5;
  std::optional<gan::RegionSize> region_eye, region_nose, region_mouth;

  // Networks.
  int base_channels = 64;
  int max_channels = 512;
  int local_base_channels = 32;
  int fusion_channels = 64;
  int disc_base_channels = 64;
  gan::GlobalInputMode global_input = gan::GlobalInputMode::kMean;
  int wfm_layers = 2;
  int coder_steps = 300;
  double coder_learning_rate = 2e-3;

  // Optimisation.
  loss::LossWeights weights;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  int max_steps = 200;
  int checkpoint_every = 100;
  int d_steps = 1;
  int g_steps = 1;
  std::uint64_t seed = 0;

  AblationFlags ablation;

  // Data and evaluation.
  int identities = 4;
  int images_per_identity = 2;
  int max_pairs = 0;  // 0 = every identity combination
  std::string protocol;
  int calibration_identities = 24;
  double fmr = 0.001;
  std::string data_dir = "data";
  std::string out_dir = "out";
};

struct ConfigKey {
  std::string name;
  std::string doc;
};

/// Every accepted key with a one-line description, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its textual value. ConfigError on an unknown key or a
/// malformed value.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; `#` starts a comment. ConfigError names file and line.
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

/// Precedence: defaults < file < MORPHFORGE_SEED < overrides. The result is
/// validated.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::pair<std::string, std::string>>& overrides);

/// ConfigError on invalid values or the no_blending / poisson_blending
/// conflict.
void validate(const PipelineConfig& cfg);

/// The global U-Net depth actually used: the configured one, or the deepest
/// fitting depth with a logged warning when 8 does not divide the resolution.
int effective_global_depth(const PipelineConfig& cfg);
gan::RegionTable effective_region_table(const PipelineConfig& cfg);

gan::GeneratorConfig generator_config(const PipelineConfig& cfg);
gan::DiscriminatorConfig discriminator_config(const PipelineConfig& cfg);
/// Ablations folded in (no_geometry zeroes the geometry weight).
loss::LossWeights effective_weights(const PipelineConfig& cfg);

/// Canonical `key = value` dump that load_config reads back unchanged.
std::string to_text(const PipelineConfig& cfg);

std::string format_region(const gan::RegionSize& s);

}  // namespace morphforge::pipeline
