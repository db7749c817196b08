#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "morphforge/nn/encoder.hpp"

namespace morphforge::loss {

/// Face recognition stand-in: image -> unit-norm identity embedding.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual nn::Var embed(const nn::Var& img) const = 0;
  virtual const std::string& name() const = 0;
};

class RandomConvEmbedder : public Embedder {
 public:
  RandomConvEmbedder(std::string name, const nn::EncoderConfig& cfg)
      : name_(std::move(name)), encoder_(cfg) {}

  nn::Var embed(const nn::Var& img) const override { return encoder_(img); }
  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  nn::RandomConvEncoder encoder_;
};

inline constexpr int kToyEmbedderCount = 4;
inline constexpr int kEmbeddingDim = 128;

/// The four desk-scale recognisers "A".."D" derived from `seed`. A and B feed
/// the identity loss; C and D are held out for evaluation.
std::vector<std::shared_ptr<const Embedder>> toy_embedders(std::uint64_t seed);

/// Fixed feature extractor for the perceptual term.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<nn::Var> features(const nn::Var& img) const = 0;
};

class RandomConvFeatures : public FeatureExtractor {
 public:
  explicit RandomConvFeatures(const nn::EncoderConfig& cfg) : encoder_(cfg) {}
  std::vector<nn::Var> features(const nn::Var& img) const override {
    return encoder_.feature_maps(img);
  }

 private:
  nn::RandomConvEncoder encoder_;
};

std::shared_ptr<const FeatureExtractor> toy_perceptual_extractor(std::uint64_t seed);

}  // namespace morphforge::loss
