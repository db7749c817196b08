#include "morphforge/gan/bundle.hpp"

#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"

namespace morphforge::gan {

using nn::Var;

GlobalInputMode parse_global_input_mode(const std::string& s) {
  if (s == "mean") return GlobalInputMode::kMean;
  if (s == "concat") return GlobalInputMode::kConcat;
  throw ConfigError("global_input_mode must be mean or concat, got " + s);
}

const char* global_input_mode_name(GlobalInputMode m) {
  return m == GlobalInputMode::kMean ? "mean" : "concat";
}

int fitting_global_depth(int resolution, int max_depth) {
  int d = 0;
  while (d < max_depth && resolution % (1 << (d + 1)) == 0) ++d;
  return d;
}

namespace {

// Independent stream per component so adding one net does not shift the
// initialisation of the others.
nn::Rng component_rng(std::uint64_t seed, std::uint64_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component)};
  return nn::Rng(seq);
}

}  // namespace

GeneratorBundle::GeneratorBundle(const GeneratorConfig& cfg) : cfg_(cfg) {
  const int m = 1 << cfg.global_depth;
  if (cfg.resolution <= 0 || cfg.resolution % m != 0) {
    throw ConfigError("resolution " + std::to_string(cfg.resolution) +
                      " is not divisible by " + std::to_string(m) +
                      " required by the global U-Net depth " +
                      std::to_string(cfg.global_depth));
  }
  validate_region_table(cfg.regions, cfg.resolution);
  nn::Rng g = component_rng(cfg.seed, 1);
  UNetConfig gc;
  gc.in_channels = cfg.global_input_mode == GlobalInputMode::kMean ? 3 : 6;
  gc.depth = cfg.global_depth;
  gc.base_channels = cfg.base_channels;
  gc.max_channels = cfg.max_channels;
  global_ = UNet(gc, g);
  for (Region r : kAllRegions) {
    nn::Rng lr = component_rng(cfg.seed, 10 + static_cast<int>(r));
    UNetConfig lc;
    lc.depth = region_depth(r);
    lc.base_channels = cfg.local_base_channels;
    lc.max_channels = cfg.max_channels;
    locals_[static_cast<int>(r)] = UNet(lc, lr);
  }
  nn::Rng f = component_rng(cfg.seed, 20);
  fusion_ = FusionNet(6, cfg.fusion_channels, cfg.fusion_blocks, f);
}

Var GeneratorBundle::generate_global(const Var& z) const { return global_(z); }

LocalOutputs GeneratorBundle::generate_locals(const RegionPatchSet& regions) const {
  LocalOutputs outs;
  for (Region r : kAllRegions) {
    const int i = static_cast<int>(r);
    outs[i] = locals_[i](nn::constant(regions[r].patch));
  }
  return outs;
}

Var GeneratorBundle::fuse(const Var& global, const Var& local) const {
  require_same_shape(global.value(), local.value(), "fuse");
  return fusion_(nn::concat_channels({global, local}));
}

std::vector<nn::NamedParam> GeneratorBundle::global_parameters() const {
  std::vector<nn::NamedParam> p;
  global_.collect("global", p);
  return p;
}

std::vector<nn::NamedParam> GeneratorBundle::local_parameters() const {
  std::vector<nn::NamedParam> p;
  for (Region r : kAllRegions) {
    locals_[static_cast<int>(r)].collect(std::string("local_") + region_name(r), p);
  }
  return p;
}

std::vector<nn::NamedParam> GeneratorBundle::fusion_parameters() const {
  std::vector<nn::NamedParam> p;
  fusion_.collect("fusion", p);
  return p;
}

std::vector<nn::NamedParam> GeneratorBundle::parameters() const {
  auto p = global_parameters();
  for (auto& x : local_parameters()) p.push_back(std::move(x));
  for (auto& x : fusion_parameters()) p.push_back(std::move(x));
  return p;
}

Tensor global_input(const Image& i1, const Image& i2, GlobalInputMode mode) {
  require_image(i1, "global_input");
  require_same_shape(i1, i2, "global_input");
  if (mode == GlobalInputMode::kMean) return average_patch(i1, i2, 0.5);
  Tensor z(6, i1.height(), i1.width());
  std::copy(i1.values().begin(), i1.values().end(), z.data());
  std::copy(i2.values().begin(), i2.values().end(), z.data() + i1.size());
  return z;
}

Var assemble_local(const LocalOutputs& outs, const RegionPatchSet& regions) {
  const Var& bg = outs[static_cast<int>(Region::kBackground)];
  const Var& hair = outs[static_cast<int>(Region::kHair)];
  Tensor inv(1, regions.bg_mask.height(), regions.bg_mask.width());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - regions.bg_mask[i];
  const Var base = nn::add(nn::mul_mask(bg, nn::constant(regions.bg_mask)),
                           nn::mul_mask(hair, nn::constant(inv)));
  std::vector<Var> patches;
  std::vector<nn::Placement> placements;
  for (int i = 0; i < kFacialRegionCount; ++i) {
    if (!outs[i].defined()) continue;
    patches.push_back(outs[i]);
    placements.push_back(regions.patches[i].placement);
  }
  return nn::assemble_min(base, patches, placements);
}

Var zero_local(int resolution) {
  return nn::constant(Tensor(3, resolution, resolution));
}

DiscriminatorBundle::DiscriminatorBundle(const DiscriminatorConfig& cfg)
    : cfg_(cfg) {
  validate_region_table(cfg.regions, cfg.resolution);
  auto make = [&](const std::string& name, int h, int w, std::uint64_t id) {
    const int layers = fitting_disc_layers(h, w, cfg.max_layers);
    if (layers == 0) {
      throw ConfigError("input " + std::to_string(w) + "x" + std::to_string(h) +
                        " is too small for discriminator " + name);
    }
    if (layers < cfg.max_layers) {
      log_warning("discriminator " + name + " reduced to " +
                  std::to_string(layers) + " stride-2 layers for " +
                  std::to_string(w) + "x" + std::to_string(h) + " input");
    }
    nn::Rng rng = component_rng(cfg.seed, id);
    return PatchDiscriminator(name, 3, cfg.base_channels, layers, rng);
  };
  global_[0] = make("global_full", cfg.resolution, cfg.resolution, 100);
  global_[1] = make("global_half", cfg.resolution / 2, cfg.resolution / 2, 101);
  for (Region r : kAllRegions) {
    const RegionSize s = cfg.regions[r];
    local_[static_cast<int>(r)] =
        make(std::string("local_") + region_name(r), s.height, s.width,
             110 + static_cast<int>(r));
  }
}

Var local_view(const Var& img, const RegionPatchSet& regions, Region r) {
  if (is_facial(r)) {
    const RegionPatch& p = regions[r];
    return nn::crop(img, p.placement.top, p.placement.left, p.size.height,
                    p.size.width);
  }
  return nn::mul_mask(img, nn::constant(r == Region::kBackground
                                            ? regions.bg_mask
                                            : regions.hair_mask));
}

LogitCollection DiscriminatorBundle::discriminate(const Var& img,
                                                  const RegionPatchSet& regions,
                                                  bool with_local) const {
  LogitCollection out;
  out.global[0] = global_[0](img);
  out.global[1] = global_[1](nn::avg_pool2(img));
  out.has_local = with_local;
  if (with_local) {
    for (Region r : kAllRegions) {
      out.local[static_cast<int>(r)] =
          local_[static_cast<int>(r)](local_view(img, regions, r));
    }
  }
  return out;
}

std::vector<nn::NamedParam> DiscriminatorBundle::parameters(bool with_local) const {
  std::vector<nn::NamedParam> p;
  global_[0].collect("disc_global_full", p);
  global_[1].collect("disc_global_half", p);
  if (with_local) {
    for (Region r : kAllRegions) {
      local_[static_cast<int>(r)].collect(
          std::string("disc_local_") + region_name(r), p);
    }
  }
  return p;
}

}  // namespace morphforge::gan
