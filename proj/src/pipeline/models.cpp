#include "morphforge/pipeline/models.hpp"

#include "morphforge/core/archive.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/nn/params.hpp"

namespace morphforge::pipeline {

namespace {

blend::AutoencoderConfig coder_config(const PipelineConfig& cfg) {
  blend::AutoencoderConfig c;
  c.resolution = cfg.resolution;
  c.seed = cfg.seed;
  return c;
}

const PipelineConfig& validated(const PipelineConfig& cfg) {
  validate(cfg);
  return cfg;
}

std::vector<nn::NamedParam> all_parameters(const MorphModels& m) {
  auto out = m.generator.parameters();
  for (auto& p : m.discriminator.parameters(true)) out.push_back(p);
  for (auto& p : m.coder.parameters()) out.push_back(p);
  return out;
}

}  // namespace

MorphModels::MorphModels(const PipelineConfig& config)
    : cfg(validated(config)),
      generator(generator_config(cfg)),
      discriminator(discriminator_config(cfg)),
      coder(coder_config(cfg)),
      embedders(loss::toy_embedders(cfg.seed)),
      perceptual(loss::toy_perceptual_extractor(cfg.seed)) {}

void fit_coder(MorphModels& models, const std::vector<FaceSample>& samples) {
  std::vector<Image> images;
  for (const auto& s : samples) images.push_back(s.image);
  if (images.empty()) throw DataError("auxiliary coder: no training images");
  const auto losses =
      models.coder.train(images, models.cfg.coder_steps, models.cfg.coder_learning_rate);
  if (!losses.empty()) {
    log_info("auxiliary coder: reconstruction loss " + std::to_string(losses.front()) + " -> " +
             std::to_string(losses.back()));
  }
  models.coder_fitted = true;
}

nlohmann::json checkpoint_manifest(const MorphModels& m, int step) {
  const auto& c = m.cfg;
  const auto w = effective_weights(c);
  nlohmann::json j;
  j["kind"] = "morphforge-checkpoint";
  j["step"] = step;
  j["resolution"] = c.resolution;
  j["seed"] = c.seed;
  j["global_depth"] = m.generator.config().global_depth;
  j["lambda"] = {{"geometry", w.gm},
                 {"identity", w.cid},
                 {"mask", w.mask},
                 {"appearance", w.app},
                 {"adversarial", w.adv}};
  j["adam"] = {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}};
  nlohmann::json regions = nlohmann::json::object();
  for (gan::Region r : gan::kAllRegions) {
    regions[gan::region_name(r)] = format_region(m.generator.config().regions[r]);
  }
  j["region_table"] = regions;
  j["ablation"] = {{"no_geometry", c.ablation.no_geometry},
                   {"single_embedder", c.ablation.single_embedder},
                   {"no_local", c.ablation.no_local},
                   {"no_blending", c.ablation.no_blending},
                   {"poisson_blending", c.ablation.poisson_blending}};
  j["coder_fitted"] = m.coder_fitted;
  j["config"] = to_text(c);
  return j;
}

void save_checkpoint(const std::filesystem::path& path, const MorphModels& models, int step) {
  Archive archive;
  archive.manifest = checkpoint_manifest(models, step);
  nn::store_parameters(all_parameters(models), archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_archive(path, archive);
}

int load_checkpoint(const std::filesystem::path& path, MorphModels& models) {
  const Archive archive = load_archive(path);
  const auto& j = archive.manifest;
  if (j.value("kind", "") != "morphforge-checkpoint") {
    throw DataError(path.string() + " is not a morphforge checkpoint");
  }
  if (j.value("resolution", 0) != models.cfg.resolution) {
    throw ConfigError("checkpoint " + path.string() + " was trained at resolution " +
                      std::to_string(j.value("resolution", 0)) + ", config asks for " +
                      std::to_string(models.cfg.resolution));
  }
  nn::restore_parameters(all_parameters(models), archive);
  models.coder_fitted = j.value("coder_fitted", false);
  return j.value("step", 0);
}

}  // namespace morphforge::pipeline
