// morphforge: command-line driver for training, morph generation, evaluation
// and the ablation matrix.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/eval/report.hpp"
#include "morphforge/pipeline/config.hpp"
#include "morphforge/pipeline/dataset.hpp"
#include "morphforge/pipeline/evaluate.hpp"
#include "morphforge/pipeline/models.hpp"
#include "morphforge/pipeline/stages.hpp"
#include "morphforge/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace morphforge;
using namespace morphforge::pipeline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  std::optional<int> steps;
  std::string out_dir;
  std::string data_dir;
  bool verbose = false;
  bool quiet = false;
};

PipelineConfig resolve(const GlobalOptions& g) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : g.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (g.seed) overrides.emplace_back("seed", std::to_string(*g.seed));
  if (g.resolution) overrides.emplace_back("resolution", std::to_string(*g.resolution));
  if (g.steps) overrides.emplace_back("max_steps", std::to_string(*g.steps));
  if (!g.out_dir.empty()) overrides.emplace_back("out_dir", g.out_dir);
  if (!g.data_dir.empty()) overrides.emplace_back("data_dir", g.data_dir);
  std::optional<fs::path> file;
  if (!g.config_file.empty()) file = g.config_file;
  return load_config(file, overrides);
}

fs::path protocol_of(const PipelineConfig& cfg) {
  return cfg.protocol.empty() ? fs::path() : fs::path(cfg.protocol);
}

std::vector<PairContext> contexts_for(const MorphModels& models,
                                      const std::vector<FaceSample>& samples) {
  std::vector<PairContext> out;
  for (const auto& p :
       select_pairs(samples, models.cfg.seed, models.cfg.max_pairs, protocol_of(models.cfg))) {
    out.push_back(prepare_pair(models, find_sample(samples, p.id1), find_sample(samples, p.id2)));
  }
  return out;
}

int cmd_train(const PipelineConfig& cfg) {
  const auto samples = load_samples(open_or_generate(cfg), cfg.resolution);
  MorphModels models(cfg);
  fit_coder(models, samples);
  const auto contexts = contexts_for(models, samples);
  const auto result = train(models, contexts, {fs::path(cfg.out_dir), {}});
  if (!result.steps.empty()) {
    std::cout << "step 1 loss " << result.steps.front().generator.total << ", step "
              << result.steps.back().step << " loss " << result.steps.back().generator.total
              << "\n";
  }
  std::cout << "checkpoint: " << (fs::path(cfg.out_dir) / "checkpoint.mfa").string() << "\n";
  return kExitOk;
}

int cmd_morph(const PipelineConfig& cfg, const std::string& checkpoint) {
  const auto samples = load_samples(open_or_generate(cfg), cfg.resolution);
  MorphModels models(cfg);
  const fs::path ckpt = checkpoint.empty() ? fs::path(cfg.out_dir) / "checkpoint.mfa" : fs::path(checkpoint);
  if (fs::exists(ckpt)) {
    const int step = load_checkpoint(ckpt, models);
    log_info("loaded " + ckpt.string() + " (step " + std::to_string(step) + ")");
  } else {
    log_warning("no checkpoint at " + ckpt.string() + "; morphing with untrained generators");
  }
  if (!models.coder_fitted) fit_coder(models, samples);
  std::vector<MorphRecord> records;
  for (const auto& ctx : contexts_for(models, samples)) records.push_back(run_morph(models, ctx));
  const auto dir = fs::path(cfg.out_dir) / "morphs";
  write_morphs(dir, records);
  std::cout << records.size() << " morphs written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& morphs, const std::string& scores,
                 const std::string& report) {
  const auto samples = load_samples(open_or_generate(cfg), cfg.resolution);
  MorphModels models(cfg);
  const fs::path dir = morphs.empty() ? fs::path(cfg.out_dir) / "morphs" : fs::path(morphs);
  const auto tables = evaluate(models, load_morphs(dir), samples, {scores});
  const fs::path out = report.empty() ? fs::path(cfg.out_dir) / "report" : fs::path(report);
  eval::emit_report(out, tables);
  std::cout << eval::report_markdown(tables);
  return kExitOk;
}

int cmd_report(const PipelineConfig& cfg, const std::string& scores, const std::string& report) {
  const auto tables = report_from_scores(cfg, scores);
  const fs::path out = report.empty() ? fs::path(cfg.out_dir) / "report" : fs::path(report);
  eval::emit_report(out, tables);
  std::cout << eval::report_markdown(tables);
  return kExitOk;
}

int cmd_ablate(const PipelineConfig& cfg) {
  const auto samples = load_samples(open_or_generate(cfg), cfg.resolution);
  const auto run = run_ablation(cfg, samples, fs::path(cfg.out_dir) / "ablation");
  std::cout << eval::report_markdown(run.tables);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Face morph generation with hierarchical generators and mask-guided blending"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("-c,--config", g.config_file, "key = value config file");
  app.add_option("--set", g.settings, "override one config key (KEY=VALUE), repeatable");
  app.add_option("--seed", g.seed, "master seed (overrides MORPHFORGE_SEED)");
  app.add_option("--resolution", g.resolution, "frame size in pixels");
  app.add_option("--steps", g.steps, "training iterations");
  app.add_option("-o,--out", g.out_dir, "output directory");
  app.add_option("-d,--data", g.data_dir, "dataset directory");
  app.add_flag("-v,--verbose", g.verbose, "progress messages");
  app.add_flag("-q,--quiet", g.quiet, "suppress warnings");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  auto* train_cmd = app.add_subcommand("train", "train generators and discriminators");
  auto* morph_cmd = app.add_subcommand("morph", "generate morphs for the selected pairs");
  std::string checkpoint;
  morph_cmd->add_option("--checkpoint", checkpoint, "checkpoint (default <out>/checkpoint.mfa)");
  auto* eval_cmd = app.add_subcommand("evaluate", "metrics and vulnerability report for morphs");
  std::string morphs, scores, report;
  eval_cmd->add_option("--morphs", morphs, "morph directory (default <out>/morphs)");
  eval_cmd->add_option("--scores", scores, "directory of externally produced score files");
  eval_cmd->add_option("--report", report, "report directory (default <out>/report)");
  auto* report_cmd = app.add_subcommand("report", "report tables from score files only");
  report_cmd->add_option("--scores", scores, "score directory")->required();
  report_cmd->add_option("--report", report, "report directory (default <out>/report)");
  auto* ablate_cmd = app.add_subcommand("ablate", "run the ablation matrix");
  auto* keys_cmd = app.add_subcommand("keys", "list every config key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  set_log_level(g.quiet ? LogLevel::kQuiet : g.verbose ? LogLevel::kInfo : LogLevel::kWarning);
  try {
    if (keys_cmd->parsed()) {
      for (const auto& k : config_keys()) std::cout << k.name << "\t" << k.doc << "\n";
      return kExitOk;
    }
    const PipelineConfig cfg = resolve(g);
    if (print_config) {
      std::cout << to_text(cfg);
      return kExitOk;
    }
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (morph_cmd->parsed()) return cmd_morph(cfg, checkpoint);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, morphs, scores, report);
    if (report_cmd->parsed()) return cmd_report(cfg, scores, report);
    if (ablate_cmd->parsed()) return cmd_ablate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
