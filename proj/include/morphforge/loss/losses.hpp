#pragma once

#include <array>
#include <string>
#include <vector>

#include "morphforge/gan/bundle.hpp"
#include "morphforge/loss/embedders.hpp"

namespace morphforge::loss {

struct LossWeights {
  double gm = 10.0;    // geometry
  double cid = 10.0;   // combined identity
  double mask = 10.0;
  double app = 10.0;   // appearance
  double adv = 1.0;    // adversarial (global + local)
};

/// ConfigError unless every weight is finite and >= 0.
void validate_weights(const LossWeights& w);

/// Mean |i_m - i_land|.
nn::Var geometry_loss(const nn::Var& i_m, const Tensor& i_land);

/// 1 - <u, v>.
nn::Var cosine_distance(const nn::Var& u, const nn::Var& v);

/// [d(m,1) + d(m,2)] / 2 over embedder A plus the same over embedder B.
/// Non-unit embeddings are renormalised with a warning.
nn::Var combined_identity_loss(const nn::Var& em_a, const nn::Var& e1_a,
                               const nn::Var& e2_a, const nn::Var& em_b,
                               const nn::Var& e1_b, const nn::Var& e2_b);

/// Mean squared mask difference.
nn::Var mask_loss(const nn::Var& m_m, const nn::Var& m_aux);

struct AppearanceTerms {
  nn::Var per;    // perceptual
  nn::Var wfm;    // weak feature matching
  nn::Var local;
  nn::Var total;
};

struct LocalPair {
  nn::Var generated;
  Tensor target;
};

/// L_per: mean over extractor layers of mean |F(i_m) - F((i1 + i2) / 2)|.
/// L_wfm: mean over the given layer pairs of mean |morph - real|.
/// L_local: mean over regions of mean |generated - target|.
/// Empty wfm / local inputs contribute 0. ConfigError if extractor is null.
AppearanceTerms appearance_loss(const nn::Var& i_m, const Tensor& i1,
                                const Tensor& i2, const FeatureExtractor* extractor,
                                const std::vector<nn::Var>& wfm_morph,
                                const std::vector<Tensor>& wfm_real,
                                const std::vector<LocalPair>& locals);

/// The last k intermediate features of both global discriminator scales.
std::vector<nn::Var> wfm_features(const gan::LogitCollection& logits, int k);

struct AdversarialTerms {
  nn::Var global;
  nn::Var local;
};

inline constexpr double kLogitClamp = 30.0;

/// Hinge on the global scales, BCE on the local discs; real terms averaged
/// over the supplied real inputs. NumericError on non-finite logits.
AdversarialTerms discriminator_adversarial(
    const std::vector<gan::LogitCollection>& real, const gan::LogitCollection& fake);

/// -mean D(y) over the global scales; mean over local discs of -log sigma(D(y)).
AdversarialTerms generator_adversarial(const gan::LogitCollection& fake);

struct LossBreakdown {
  double gm = 0, cid = 0, mask = 0, app = 0, adv_global = 0, adv_local = 0,
         total = 0;
};

/// Scalar form: total = gm*w.gm + cid*w.cid + mask*w.mask + app*w.app +
/// (adv_global + adv_local)*w.adv. NumericError naming a non-finite part.
LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w);

struct LossTerms {
  nn::Var gm, cid, mask, app, adv_global, adv_local;
};

/// Differentiable total. Zero-weighted and undefined terms are left out of the
/// graph. Fills `breakdown` with the scalar values.
nn::Var weighted_total(const LossTerms& terms, const LossWeights& w,
                       LossBreakdown* breakdown = nullptr);

}  // namespace morphforge::loss
