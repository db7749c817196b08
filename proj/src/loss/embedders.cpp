#include "morphforge/loss/embedders.hpp"

namespace morphforge::loss {

std::vector<std::shared_ptr<const Embedder>> toy_embedders(std::uint64_t seed) {
  static const char* kNames[kToyEmbedderCount] = {"A", "B", "C", "D"};
  // Distinct architectures as well as weights, so the held-out pair is not a
  // reseeded copy of the training pair.
  static const std::vector<int> kWidths[kToyEmbedderCount] = {
      {16, 32, 32}, {12, 24, 48}, {16, 16, 32}, {8, 32, 64}};
  std::vector<std::shared_ptr<const Embedder>> out;
  for (int i = 0; i < kToyEmbedderCount; ++i) {
    nn::EncoderConfig cfg;
    cfg.seed = seed * 7919 + 101 + i;
    cfg.out_dim = kEmbeddingDim;
    cfg.widths = kWidths[i];
    cfg.pooled = 4;
    out.push_back(std::make_shared<RandomConvEmbedder>(kNames[i], cfg));
  }
  return out;
}

std::shared_ptr<const FeatureExtractor> toy_perceptual_extractor(std::uint64_t seed) {
  nn::EncoderConfig cfg;
  cfg.seed = seed * 7919 + 201;
  cfg.widths = {8, 16};
  cfg.normalize = false;
  return std::make_shared<RandomConvFeatures>(cfg);
}

}  // namespace morphforge::loss
