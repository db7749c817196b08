#pragma once

#include <filesystem>
#include <string>

#include "morphforge/blend/blend.hpp"
#include "morphforge/gan/regions.hpp"
#include "morphforge/pipeline/models.hpp"

namespace morphforge::pipeline {

/// Everything about a pair that does not depend on trainable parameters.
struct PairContext {
  MorphPair pair;
  std::string identity1, identity2;
  Image i1, i2;
  warp::LandmarkSet l1, l2;
  warp::LandmarkSet landmarks;  // interpolated
  Image i_land;
  Tensor z;  // global generator input
  gan::RegionPatchSet r1, r2;  // contributors' regions
  gan::RegionPatchSet regions;  // averaged, placed on the interpolated face
  Image i_aux;
  FaceMask m_aux;
};

/// Landmark morph, region extraction and averaging, and the auxiliary latent
/// morph with its parser mask. The auxiliary coder should be fitted first.
PairContext prepare_pair(const MorphModels& models, const FaceSample& s1, const FaceSample& s2);

struct Stage1Vars {
  nn::Var global;
  nn::Var local;
  nn::Var fused;
  gan::LocalOutputs locals;  // null when the local branch is disabled
};

/// Differentiable Stage-I forward pass.
Stage1Vars forward_stage1(const MorphModels& models, const PairContext& ctx);

enum class BlendBackend { kMaskGuided, kPoisson, kNone };
const char* blend_backend_name(BlendBackend b);

struct StageTimings {
  double stage1_ms = 0.0;
  double stage2_ms = 0.0;
};

struct MorphRecord {
  MorphPair pair;
  std::string identity1, identity2;
  Image i_land, i_global, i_local, i_m;  // Stage I
  Image i_aux, i_final;                  // Stage II
  FaceMask m_face, m_aux;
  bool stage2_done = false;
  BlendBackend backend = BlendBackend::kMaskGuided;  // the backend that ran
  blend::PoissonReport poisson;
  StageTimings timings;  // kept out of every persisted artefact but timings.csv
};

/// Errors are rethrown with the failing sub-stage named.
MorphRecord run_stage1(const MorphModels& models, const PairContext& ctx);
/// no_blending: i_final = i_m; poisson_blending: Poisson backend; otherwise
/// the mask-guided blend of i_m over i_aux under the auxiliary face mask.
void run_stage2(const MorphModels& models, const PairContext& ctx, MorphRecord& record);
MorphRecord run_morph(const MorphModels& models, const PairContext& ctx);

/// PNGs for every record image plus record.json (no timings) under dir.
void save_record(const std::filesystem::path& dir, const MorphRecord& record);

}  // namespace morphforge::pipeline
