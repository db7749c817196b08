#include "morphforge/pipeline/train.hpp"

#include <cmath>
#include <fstream>

#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/eval/scores.hpp"
#include "morphforge/nn/adam.hpp"
#include "morphforge/nn/ops.hpp"

namespace morphforge::pipeline {

using nn::Var;

namespace {

std::vector<Var> vars(const std::vector<nn::NamedParam>& params) {
  std::vector<Var> out;
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::vector<nn::NamedParam> generator_parameters(const MorphModels& m) {
  if (!m.cfg.ablation.no_local) return m.generator.parameters();
  auto out = m.generator.global_parameters();
  for (auto& p : m.generator.fusion_parameters()) out.push_back(p);
  return out;
}

std::vector<Tensor> real_wfm_features(const MorphModels& m, const PairContext& ctx, int k) {
  nn::NoGradGuard guard;
  const auto f1 = loss::wfm_features(
      m.discriminator.discriminate(nn::constant(ctx.i1), ctx.r1, false), k);
  const auto f2 = loss::wfm_features(
      m.discriminator.discriminate(nn::constant(ctx.i2), ctx.r2, false), k);
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    Tensor t = f1[i].value();
    const Tensor& u = f2[i].value();
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = 0.5 * (t[j] + u[j]);
    out.push_back(std::move(t));
  }
  return out;
}

std::string csv_row(int step, const loss::LossBreakdown& b) {
  using eval::format_score;
  return std::to_string(step) + "," + format_score(b.gm) + "," + format_score(b.cid) + "," +
         format_score(b.mask) + "," + format_score(b.app) + "," + format_score(b.adv_global) +
         "," + format_score(b.adv_local) + "," + format_score(b.total) + "\n";
}

}  // namespace

GeneratorObjective generator_objective(const MorphModels& m, const PairContext& ctx) {
  const auto& flags = m.cfg.ablation;
  const bool with_local = !flags.no_local;
  GeneratorObjective obj;
  obj.stage1 = forward_stage1(m, ctx);
  const Var& y = obj.stage1.fused;

  loss::LossTerms terms;
  terms.gm = loss::geometry_loss(y, ctx.i_land);

  auto identity_pair = [&](int k) {
    const auto& e = *m.embedders[k];
    return std::array<Var, 3>{e.embed(y), e.embed(nn::constant(ctx.i1)),
                              e.embed(nn::constant(ctx.i2))};
  };
  const auto a = identity_pair(0);
  if (flags.single_embedder) {
    terms.cid = nn::scale(loss::combined_identity_loss(a[0], a[1], a[2], a[0], a[1], a[2]), 0.5);
  } else {
    const auto b = identity_pair(1);
    terms.cid = loss::combined_identity_loss(a[0], a[1], a[2], b[0], b[1], b[2]);
  }

  terms.mask = loss::mask_loss(blend::face_mask(m.parser.parse(y, ctx.landmarks)),
                               nn::constant(ctx.m_aux));

  const auto fake = m.discriminator.discriminate(y, ctx.regions, with_local);
  std::vector<loss::LocalPair> locals;
  if (with_local) {
    for (gan::Region r : gan::kAllRegions) {
      const Var& out = obj.stage1.locals[static_cast<int>(r)];
      if (out.defined()) locals.push_back({out, ctx.regions[r].patch});
    }
  }
  terms.app = loss::appearance_loss(y, ctx.i1, ctx.i2, m.perceptual.get(),
                                    loss::wfm_features(fake, m.cfg.wfm_layers),
                                    real_wfm_features(m, ctx, m.cfg.wfm_layers), locals)
                  .total;

  const auto adv = loss::generator_adversarial(fake);
  terms.adv_global = adv.global;
  if (with_local) terms.adv_local = adv.local;

  obj.total = loss::weighted_total(terms, effective_weights(m.cfg), &obj.breakdown);
  return obj;
}

Var discriminator_objective(const MorphModels& m, const PairContext& ctx) {
  const bool with_local = !m.cfg.ablation.no_local;
  Var fake;
  {
    nn::NoGradGuard guard;
    fake = nn::constant(forward_stage1(m, ctx).fused.value());
  }
  std::vector<gan::LogitCollection> real = {
      m.discriminator.discriminate(nn::constant(ctx.i1), ctx.r1, with_local),
      m.discriminator.discriminate(nn::constant(ctx.i2), ctx.r2, with_local)};
  const auto adv = loss::discriminator_adversarial(
      real, m.discriminator.discriminate(fake, ctx.regions, with_local));
  Var total = with_local ? nn::add(adv.global, adv.local) : adv.global;
  if (!std::isfinite(total.item())) throw NumericError("discriminator loss is not finite");
  return total;
}

TrainResult train(MorphModels& m, const std::vector<PairContext>& pairs,
                  const TrainOptions& options) {
  if (pairs.empty()) throw DataError("training needs at least one pair");
  const auto& cfg = m.cfg;
  nn::AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2};
  nn::Adam g_opt(vars(generator_parameters(m)), adam);
  nn::Adam d_opt(vars(m.discriminator.parameters(!cfg.ablation.no_local)), adam);

  const bool write = !options.out_dir.empty();
  const auto checkpoint = options.out_dir / "checkpoint.mfa";
  std::ofstream csv;
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    csv.open(options.out_dir / "loss.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw DataError("cannot write " + (options.out_dir / "loss.csv").string());
    csv << kLossCsvHeader << '\n';
  }

  TrainResult result;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    if (options.before_step) options.before_step(step, m);
    const PairContext& ctx = pairs[(step - 1) % pairs.size()];
    StepLog log;
    log.step = step;
    try {
      for (int k = 0; k < cfg.d_steps; ++k) {
        d_opt.zero_grad();
        const Var d = discriminator_objective(m, ctx);
        nn::backward(d);
        d_opt.step();
        log.discriminator = d.item();
      }
      for (int k = 0; k < cfg.g_steps; ++k) {
        g_opt.zero_grad();
        const GeneratorObjective obj = generator_objective(m, ctx);
        nn::backward(obj.total);
        g_opt.step();
        if (k == 0) log.generator = obj.breakdown;
      }
    } catch (const NumericError& e) {
      const std::string kept =
          result.checkpoint_step > 0
              ? "last good checkpoint: " + checkpoint.string() + " (step " +
                    std::to_string(result.checkpoint_step) + ")"
              : "no checkpoint written yet";
      log_warning("training aborted at step " + std::to_string(step) + "; " + kept);
      throw NumericError("training step " + std::to_string(step) + ": " + e.what());
    }
    result.steps.push_back(log);
    if (write) {
      csv << csv_row(step, log.generator);
      csv.flush();
      if (step % cfg.checkpoint_every == 0 || step == cfg.max_steps) {
        save_checkpoint(checkpoint, m, step);
        result.checkpoint_step = step;
      }
    }
  }
  if (write && cfg.max_steps == 0) {
    save_checkpoint(checkpoint, m, 0);
  }
  return result;
}

}  // namespace morphforge::pipeline
