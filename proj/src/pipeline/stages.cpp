#include "morphforge/pipeline/stages.hpp"

#include <chrono>

#include "json.hpp"
#include "morphforge/core/archive.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/warp/morph.hpp"

namespace morphforge::pipeline {

namespace {

// Runs f, prefixing any library error with the stage name while keeping its
// type (and with it the CLI exit code).
template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  const std::string p = std::string(stage) + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(p + e.what());
  } catch (const DataError& e) {
    throw DataError(p + e.what());
  } catch (const StructuralError& e) {
    throw StructuralError(p + e.what());
  } catch (const NumericError& e) {
    throw NumericError(p + e.what());
  }
}

FaceMask parsed_face_mask(const MorphModels& m, const Image& img,
                          const warp::LandmarkSet& lm) {
  nn::NoGradGuard guard;
  return blend::face_mask(m.parser.parse(nn::constant(img), lm)).value();
}

gan::RegionPatchSet regions_of(const MorphModels& m, const Image& img,
                               const warp::LandmarkSet& lm) {
  const FaceMask bg = m.segmenter.segment(img, lm);
  return gan::extract_regions(img, lm, bg, parsed_face_mask(m, img, lm),
                              m.generator.config().regions);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

PairContext prepare_pair(const MorphModels& m, const FaceSample& s1, const FaceSample& s2) {
  const double alpha = m.cfg.morph_factor;
  PairContext ctx;
  ctx.pair = {s1.image_id, s2.image_id};
  ctx.identity1 = s1.identity;
  ctx.identity2 = s2.identity;
  ctx.i1 = s1.image;
  ctx.i2 = s2.image;
  ctx.l1 = s1.landmarks;
  ctx.l2 = s2.landmarks;
  in_stage("landmark morph", [&] {
    auto lm = warp::landmark_morph(ctx.i1, ctx.l1, ctx.i2, ctx.l2, alpha);
    for (const auto& w : lm.report.warnings) log_warning(pair_name(ctx.pair) + ": " + w);
    ctx.i_land = std::move(lm.image);
    ctx.landmarks = std::move(lm.landmarks);
  });
  in_stage("region extraction", [&] {
    ctx.z = gan::global_input(ctx.i1, ctx.i2, m.generator.config().global_input_mode);
    ctx.r1 = regions_of(m, ctx.i1, ctx.l1);
    ctx.r2 = regions_of(m, ctx.i2, ctx.l2);
    const auto placed = regions_of(m, ctx.i_land, ctx.landmarks);
    ctx.regions = gan::average_regions(ctx.r1, ctx.r2, alpha, placed);
  });
  in_stage("auxiliary morph", [&] {
    if (!m.coder_fitted) log_warning("auxiliary coder used before fitting");
    ctx.i_aux = blend::auxiliary_morph(ctx.i1, ctx.i2, m.coder, alpha);
    ctx.m_aux = parsed_face_mask(m, ctx.i_aux, ctx.landmarks);
  });
  return ctx;
}

Stage1Vars forward_stage1(const MorphModels& m, const PairContext& ctx) {
  Stage1Vars out;
  out.global = m.generator.generate_global(nn::constant(ctx.z));
  if (m.cfg.ablation.no_local) {
    out.local = gan::zero_local(m.cfg.resolution);
  } else {
    out.locals = m.generator.generate_locals(ctx.regions);
    out.local = gan::assemble_local(out.locals, ctx.regions);
  }
  out.fused = m.generator.fuse(out.global, out.local);
  return out;
}

const char* blend_backend_name(BlendBackend b) {
  switch (b) {
    case BlendBackend::kMaskGuided: return "mask_guided";
    case BlendBackend::kPoisson: return "poisson";
    case BlendBackend::kNone: return "none";
  }
  return "?";
}

MorphRecord run_stage1(const MorphModels& m, const PairContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  MorphRecord rec;
  rec.pair = ctx.pair;
  rec.identity1 = ctx.identity1;
  rec.identity2 = ctx.identity2;
  rec.i_land = ctx.i_land;
  in_stage("stage one generator", [&] {
    nn::NoGradGuard guard;
    const Stage1Vars v = forward_stage1(m, ctx);
    rec.i_global = v.global.value();
    rec.i_local = v.local.value();
    rec.i_m = v.fused.value();
    for (const Tensor* t : {&rec.i_global, &rec.i_local, &rec.i_m}) {
      if (!t->all_finite()) throw NumericError("non-finite generator output");
    }
  });
  rec.timings.stage1_ms = elapsed_ms(start);
  return rec;
}

void run_stage2(const MorphModels& m, const PairContext& ctx, MorphRecord& rec) {
  const auto start = std::chrono::steady_clock::now();
  rec.i_aux = ctx.i_aux;
  rec.m_aux = ctx.m_aux;
  in_stage("face parsing", [&] { rec.m_face = parsed_face_mask(m, rec.i_m, ctx.landmarks); });
  in_stage("blending", [&] {
    const auto& flags = m.cfg.ablation;
    if (flags.no_blending) {
      rec.backend = BlendBackend::kNone;
      rec.i_final = rec.i_m;
    } else if (flags.poisson_blending) {
      rec.backend = BlendBackend::kPoisson;
      rec.i_final = blend::poisson_blend(rec.i_m, rec.i_aux, rec.m_aux, &rec.poisson);
    } else {
      rec.backend = BlendBackend::kMaskGuided;
      rec.i_final = blend::mask_guided_blend(rec.i_m, rec.i_aux, rec.m_aux);
    }
  });
  rec.stage2_done = true;
  rec.timings.stage2_ms = elapsed_ms(start);
}

MorphRecord run_morph(const MorphModels& m, const PairContext& ctx) {
  MorphRecord rec = run_stage1(m, ctx);
  run_stage2(m, ctx, rec);
  return rec;
}

void save_record(const std::filesystem::path& dir, const MorphRecord& rec) {
  if (!rec.stage2_done) throw StructuralError("morph record saved before stage two");
  std::filesystem::create_directories(dir);
  save_png(dir / "landmark.png", rec.i_land);
  save_png(dir / "global.png", rec.i_global);
  save_png(dir / "local.png", rec.i_local);
  save_png(dir / "stage1.png", rec.i_m);
  save_png(dir / "aux.png", rec.i_aux);
  save_png(dir / "final.png", rec.i_final);
  save_mask_png(dir / "mask_face.png", rec.m_face);
  save_mask_png(dir / "mask_aux.png", rec.m_aux);
  nlohmann::json j;
  j["image_id1"] = rec.pair.id1;
  j["image_id2"] = rec.pair.id2;
  j["identity1"] = rec.identity1;
  j["identity2"] = rec.identity2;
  j["blend_backend"] = blend_backend_name(rec.backend);
  if (rec.backend == BlendBackend::kPoisson) {
    j["poisson"] = {{"unknowns", rec.poisson.unknowns},
                    {"iterations", rec.poisson.iterations},
                    {"max_residual", rec.poisson.max_residual}};
  }
  write_file_atomic(dir / "record.json", j.dump(2) + "\n");
}

}  // namespace morphforge::pipeline
