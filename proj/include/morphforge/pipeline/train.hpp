#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "morphforge/loss/losses.hpp"
#include "morphforge/pipeline/stages.hpp"

namespace morphforge::pipeline {

struct GeneratorObjective {
  nn::Var total;
  loss::LossBreakdown breakdown;
  Stage1Vars stage1;
};

/// The generator's weighted objective on one pair, honouring the ablation
/// flags: no_geometry zeroes the geometry weight, single_embedder takes the
/// identity term from recogniser A only, no_local drops the local
/// discriminators and local appearance term.
GeneratorObjective generator_objective(const MorphModels& models, const PairContext& ctx);

/// Mean hinge + local BCE loss of the discriminators on one pair, with the
/// fake image detached.
nn::Var discriminator_objective(const MorphModels& models, const PairContext& ctx);

struct TrainOptions {
  /// loss.csv and checkpoint.mfa go here; empty writes nothing.
  std::filesystem::path out_dir;
  /// Called before every iteration (tests use it to inject faults).
  std::function<void(int step, MorphModels&)> before_step;
};

struct StepLog {
  int step = 0;
  loss::LossBreakdown generator;
  double discriminator = 0.0;
};

struct TrainResult {
  std::vector<StepLog> steps;
  int checkpoint_step = 0;  // 0 = none written
};

inline constexpr const char* kLossCsvHeader = "step,gm,cid,mask,app,adv_g,adv_l,total";

/// Iterates over `pairs` cyclically for cfg.max_steps iterations; each one
/// runs cfg.d_steps discriminator updates, then cfg.g_steps generator updates
/// (Adam, cfg betas). Losses are appended to loss.csv every step, checkpoints
/// written every cfg.checkpoint_every steps and at the end. A non-finite loss
/// aborts with NumericError; the last checkpoint on disk is left untouched.
TrainResult train(MorphModels& models, const std::vector<PairContext>& pairs,
                  const TrainOptions& options = {});

}  // namespace morphforge::pipeline
