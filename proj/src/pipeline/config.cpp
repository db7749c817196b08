#include "morphforge/pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/eval/scores.hpp"

namespace morphforge::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::optional<gan::RegionSize> to_region(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  const auto x = v.find('x');
  if (x == std::string::npos) bad_value(key, v, "WIDTHxHEIGHT or auto");
  gan::RegionSize s;
  s.width = to_int(key, v.substr(0, x));
  s.height = to_int(key, v.substr(x + 1));
  return s;
}

std::string num(double v) { return eval::format_score(v); }
std::string flag(bool v) { return v ? "true" : "false"; }

struct Entry {
  const char* name;
  const char* doc;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define MF_INT(field) \
  [](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_int(k, v); }, \
      [](const PipelineConfig& c) { return std::to_string(c.field); }
#define MF_DOUBLE(field) \
  [](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }, \
      [](const PipelineConfig& c) { return num(c.field); }
#define MF_BOOL(field) \
  [](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }, \
      [](const PipelineConfig& c) { return flag(c.field); }
#define MF_STRING(field) \
  [](PipelineConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
      [](const PipelineConfig& c) { return c.field; }
#define MF_REGION(field)                                                        \
  [](PipelineConfig& c, const std::string& k, const std::string& v) {          \
    c.field = to_region(k, v);                                                 \
  },                                                                           \
      [](const PipelineConfig& c) {                                            \
        return c.field ? format_region(*c.field) : std::string("auto");        \
      }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"resolution", "square frame size in pixels", MF_INT(resolution)},
      {"global_depth", "global U-Net depth; 0 picks the deepest (<= 8) dividing the resolution",
       MF_INT(global_depth)},
      {"morph_factor", "interpolation weight of the second contributor, in [0, 1]",
       MF_DOUBLE(morph_factor)},
      {"region_eye", "eye patch size WIDTHxHEIGHT, or auto (64x64 at 256, scaled)",
       MF_REGION(region_eye)},
      {"region_nose", "nose patch size WIDTHxHEIGHT, or auto (64x80 at 256, scaled)",
       MF_REGION(region_nose)},
      {"region_mouth", "mouth patch size WIDTHxHEIGHT, or auto (96x64 at 256, scaled)",
       MF_REGION(region_mouth)},
      {"base_channels", "channels of the first global U-Net block", MF_INT(base_channels)},
      {"max_channels", "channel cap of the global U-Net", MF_INT(max_channels)},
      {"local_base_channels", "channels of the first local U-Net block",
       MF_INT(local_base_channels)},
      {"fusion_channels", "width of the fusion network", MF_INT(fusion_channels)},
      {"disc_base_channels", "channels of the first discriminator layer",
       MF_INT(disc_base_channels)},
      {"global_input", "how contributors enter the global net: mean or concat",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.global_input = gan::parse_global_input_mode(v);
       },
       [](const PipelineConfig& c) {
         return std::string(gan::global_input_mode_name(c.global_input));
       }},
      {"wfm_layers", "discriminator layers used for weak feature matching", MF_INT(wfm_layers)},
      {"coder_steps", "training steps of the auxiliary autoencoder", MF_INT(coder_steps)},
      {"coder_learning_rate", "Adam step size of the auxiliary autoencoder",
       MF_DOUBLE(coder_learning_rate)},
      {"lambda_geometry", "weight of the geometry loss", MF_DOUBLE(weights.gm)},
      {"lambda_identity", "weight of the combined identity loss", MF_DOUBLE(weights.cid)},
      {"lambda_mask", "weight of the mask loss", MF_DOUBLE(weights.mask)},
      {"lambda_appearance", "weight of the appearance loss", MF_DOUBLE(weights.app)},
      {"lambda_adversarial", "weight of the adversarial losses", MF_DOUBLE(weights.adv)},
      {"learning_rate", "Adam step size for generator and discriminators",
       MF_DOUBLE(learning_rate)},
      {"beta1", "Adam first-moment decay", MF_DOUBLE(beta1)},
      {"beta2", "Adam second-moment decay", MF_DOUBLE(beta2)},
      {"batch_size", "pairs per update (only 1 is supported)", MF_INT(batch_size)},
      {"max_steps", "training iterations", MF_INT(max_steps)},
      {"checkpoint_every", "steps between checkpoints (one is always written at the end)",
       MF_INT(checkpoint_every)},
      {"d_steps", "discriminator updates per iteration", MF_INT(d_steps)},
      {"g_steps", "generator updates per iteration", MF_INT(g_steps)},
      {"seed", "master seed; the MORPHFORGE_SEED environment variable overrides it",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.seed = to_u64(k, v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.seed); }},
      {"no_geometry", "ablation: drop the geometry loss", MF_BOOL(ablation.no_geometry)},
      {"single_embedder", "ablation: identity loss from one recogniser only",
       MF_BOOL(ablation.single_embedder)},
      {"no_local", "ablation: disable local generators and discriminators",
       MF_BOOL(ablation.no_local)},
      {"no_blending", "ablation: skip mask-guided blending (final = stage-one output)",
       MF_BOOL(ablation.no_blending)},
      {"poisson_blending", "ablation: Poisson blending instead of mask-guided blending",
       MF_BOOL(ablation.poisson_blending)},
      {"identities", "toy dataset: number of identities", MF_INT(identities)},
      {"images_per_identity", "toy dataset: images per identity", MF_INT(images_per_identity)},
      {"max_pairs", "pairs to morph; 0 keeps every identity combination", MF_INT(max_pairs)},
      {"protocol", "optional pair list (CSV image_id1,image_id2); empty uses combinations",
       MF_STRING(protocol)},
      {"calibration_identities", "synthetic identities for impostor-score calibration",
       MF_INT(calibration_identities)},
      {"fmr", "false match rate used to set the verification threshold", MF_DOUBLE(fmr)},
      {"data_dir", "dataset directory (manifest.csv, images, landmark sidecars)",
       MF_STRING(data_dir)},
      {"out_dir", "directory for checkpoints, morphs and reports", MF_STRING(out_dir)},
  };
  return table;
}

#undef MF_INT
#undef MF_DOUBLE
#undef MF_BOOL
#undef MF_STRING
#undef MF_REGION

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries()) {
    if (key == e.name) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back({e.name, e.doc});
    return out;
  }();
  return keys;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(trim(key)).set(cfg, trim(key), trim(value));
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
  PipelineConfig cfg;
  if (file) apply_config_file(cfg, *file);
  if (const char* env = std::getenv("MORPHFORGE_SEED"); env && *env) {
    apply_setting(cfg, "seed", env);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  validate(cfg);
  return cfg;
}

void validate(const PipelineConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.resolution < 8) fail("resolution must be >= 8");
  if (cfg.global_depth < 0 || cfg.global_depth > 8) fail("global_depth must lie in [0, 8]");
  if (cfg.global_depth > 0 && cfg.resolution % (1 << cfg.global_depth) != 0) {
    fail("resolution " + std::to_string(cfg.resolution) + " is not divisible by 2^" +
         std::to_string(cfg.global_depth));
  }
  warp::validate_morph_factor(cfg.morph_factor);
  loss::validate_weights(cfg.weights);
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate)) {
    fail("learning_rate must be > 0");
  }
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1) || !(cfg.beta2 >= 0 && cfg.beta2 < 1)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (cfg.batch_size != 1) fail("batch_size: only 1 is supported");
  if (cfg.max_steps < 0) fail("max_steps must be >= 0");
  if (cfg.checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (cfg.d_steps < 0 || cfg.g_steps < 1) fail("d_steps must be >= 0 and g_steps >= 1");
  if (cfg.base_channels < 1 || cfg.max_channels < cfg.base_channels ||
      cfg.local_base_channels < 1 || cfg.fusion_channels < 1 || cfg.disc_base_channels < 1) {
    fail("channel counts must be positive and max_channels >= base_channels");
  }
  if (cfg.wfm_layers < 0) fail("wfm_layers must be >= 0");
  if (cfg.coder_steps < 0 || !(cfg.coder_learning_rate > 0)) {
    fail("coder_steps must be >= 0 and coder_learning_rate > 0");
  }
  if (cfg.ablation.no_blending && cfg.ablation.poisson_blending) {
    fail("ablation flags no_blending and poisson_blending conflict");
  }
  if (cfg.identities < 2) fail("identities must be >= 2");
  if (cfg.images_per_identity < 1) fail("images_per_identity must be >= 1");
  if (cfg.max_pairs < 0) fail("max_pairs must be >= 0");
  if (cfg.calibration_identities < 2) fail("calibration_identities must be >= 2");
  if (!(cfg.fmr > 0 && cfg.fmr < 1)) fail("fmr must lie in (0, 1)");
  gan::validate_region_table(effective_region_table(cfg), cfg.resolution);
}

int effective_global_depth(const PipelineConfig& cfg) {
  if (cfg.global_depth > 0) return cfg.global_depth;
  const int depth = gan::fitting_global_depth(cfg.resolution);
  if (depth < 8) {
    log_warning("resolution " + std::to_string(cfg.resolution) +
                " is not divisible by 256; global U-Net depth reduced to " +
                std::to_string(depth));
  }
  return depth;
}

gan::RegionTable effective_region_table(const PipelineConfig& cfg) {
  auto table = gan::default_region_table(cfg.resolution);
  if (cfg.region_eye) {
    table[gan::Region::kEyeL] = *cfg.region_eye;
    table[gan::Region::kEyeR] = *cfg.region_eye;
  }
  if (cfg.region_nose) table[gan::Region::kNose] = *cfg.region_nose;
  if (cfg.region_mouth) table[gan::Region::kMouth] = *cfg.region_mouth;
  return table;
}

gan::GeneratorConfig generator_config(const PipelineConfig& cfg) {
  gan::GeneratorConfig g;
  g.resolution = cfg.resolution;
  g.global_depth = effective_global_depth(cfg);
  g.base_channels = cfg.base_channels;
  g.max_channels = cfg.max_channels;
  g.local_base_channels = cfg.local_base_channels;
  g.fusion_channels = cfg.fusion_channels;
  g.global_input_mode = cfg.global_input;
  g.regions = effective_region_table(cfg);
  g.seed = cfg.seed;
  return g;
}

gan::DiscriminatorConfig discriminator_config(const PipelineConfig& cfg) {
  gan::DiscriminatorConfig d;
  d.resolution = cfg.resolution;
  d.base_channels = cfg.disc_base_channels;
  d.regions = effective_region_table(cfg);
  d.seed = cfg.seed;
  return d;
}

loss::LossWeights effective_weights(const PipelineConfig& cfg) {
  auto w = cfg.weights;
  if (cfg.ablation.no_geometry) w.gm = 0.0;
  return w;
}

std::string format_region(const gan::RegionSize& s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

std::string to_text(const PipelineConfig& cfg) {
  std::ostringstream os;
  for (const auto& e : entries()) os << e.name << " = " << e.get(cfg) << '\n';
  return os.str();
}

}  // namespace morphforge::pipeline
