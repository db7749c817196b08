#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/gan/networks.hpp"
#include "morphforge/gan/regions.hpp"

namespace morphforge::gan {

enum class GlobalInputMode { kMean, kConcat };

GlobalInputMode parse_global_input_mode(const std::string& s);
const char* global_input_mode_name(GlobalInputMode m);

struct GeneratorConfig {
  int resolution = 256;
  int global_depth = 8;
  int base_channels = 64;
  int max_channels = 512;
  int local_base_channels = 32;
  int fusion_channels = 64;
  int fusion_blocks = 3;
  GlobalInputMode global_input_mode = GlobalInputMode::kMean;
  RegionTable regions = default_region_table(256);
  std::uint64_t seed = 0;
};

/// Deepest global U-Net (<= 8) whose 2^depth divides the resolution.
int fitting_global_depth(int resolution, int max_depth = 8);

using LocalOutputs = std::array<nn::Var, kRegionCount>;

class GeneratorBundle {
 public:
  /// ConfigError if resolution is not divisible by 2^global_depth or the
  /// region table does not fit the local nets.
  explicit GeneratorBundle(const GeneratorConfig& cfg);

  /// z is 0.5 (I1 + I2) in mean mode, [I1, I2] stacked in concat mode.
  nn::Var generate_global(const nn::Var& z) const;
  LocalOutputs generate_locals(const RegionPatchSet& regions) const;
  nn::Var fuse(const nn::Var& global, const nn::Var& local) const;

  const UNet& global_net() const { return global_; }
  const UNet& local_net(Region r) const { return locals_[static_cast<int>(r)]; }

  std::vector<nn::NamedParam> parameters() const;
  std::vector<nn::NamedParam> global_parameters() const;
  std::vector<nn::NamedParam> local_parameters() const;
  std::vector<nn::NamedParam> fusion_parameters() const;

  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  UNet global_;
  std::array<UNet, kRegionCount> locals_;
  FusionNet fusion_;
};

/// Global z from two aligned contributors.
Tensor global_input(const Image& i1, const Image& i2, GlobalInputMode mode);

/// Canvas: bg_out * M_bg + hair_out * (1 - M_bg), then each facial patch
/// pasted at its placement; overlapping facial patches keep the minimum.
/// Null facial outputs are skipped.
nn::Var assemble_local(const LocalOutputs& outs, const RegionPatchSet& regions);

/// Local branch disabled: a zero canvas.
nn::Var zero_local(int resolution);

struct DiscriminatorConfig {
  int resolution = 256;
  int base_channels = 64;
  int max_layers = 3;
  RegionTable regions = default_region_table(256);
  std::uint64_t seed = 0;
};

struct LogitCollection {
  std::array<DiscOutput, 2> global;  // full and half resolution
  std::array<DiscOutput, kRegionCount> local;
  bool has_local = false;
};

class DiscriminatorBundle {
 public:
  /// Layer counts are reduced (with a logged warning) where a patch is too
  /// small for the standard 3-layer / 70 px discriminator.
  explicit DiscriminatorBundle(const DiscriminatorConfig& cfg);

  LogitCollection discriminate(const nn::Var& img, const RegionPatchSet& regions,
                               bool with_local = true) const;

  std::vector<nn::NamedParam> parameters(bool with_local = true) const;
  const PatchDiscriminator& global_scale(int s) const { return global_[s]; }
  const PatchDiscriminator& local(Region r) const {
    return local_[static_cast<int>(r)];
  }
  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  std::array<PatchDiscriminator, 2> global_;
  std::array<PatchDiscriminator, kRegionCount> local_;
};

/// Input seen by a local discriminator: the facial crop, or the masked frame
/// for bg/hair.
nn::Var local_view(const nn::Var& img, const RegionPatchSet& regions, Region r);

}  // namespace morphforge::gan
