#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "json.hpp"
#include "morphforge/blend/coder.hpp"
#include "morphforge/blend/parser.hpp"
#include "morphforge/gan/bundle.hpp"
#include "morphforge/loss/embedders.hpp"
#include "morphforge/pipeline/config.hpp"
#include "morphforge/pipeline/dataset.hpp"

namespace morphforge::pipeline {

/// Every network and fixed component the pipeline needs, built from one
/// validated config.
struct MorphModels {
  explicit MorphModels(const PipelineConfig& cfg);

  PipelineConfig cfg;
  gan::GeneratorBundle generator;
  gan::DiscriminatorBundle discriminator;
  blend::GeometricParser parser;
  blend::HeadEllipseSegmenter segmenter;
  blend::ConvAutoencoder coder;
  std::vector<std::shared_ptr<const loss::Embedder>> embedders;  // A..D
  std::shared_ptr<const loss::FeatureExtractor> perceptual;
  bool coder_fitted = false;
};

/// Trains the auxiliary autoencoder on the sample images (cfg.coder_steps).
void fit_coder(MorphModels& models, const std::vector<FaceSample>& samples);

/// Manifest: step, resolution, seed, loss weights, Adam settings, region
/// table, global depth, ablation flags and the full config text.
nlohmann::json checkpoint_manifest(const MorphModels& models, int step);

/// Generator, discriminator and auxiliary coder parameters in one archive.
void save_checkpoint(const std::filesystem::path& path, const MorphModels& models, int step);
/// Returns the stored step. ConfigError when the checkpoint was written for
/// another resolution, StructuralError on a parameter mismatch.
int load_checkpoint(const std::filesystem::path& path, MorphModels& models);

}  // namespace morphforge::pipeline
