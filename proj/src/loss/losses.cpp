#include "morphforge/loss/losses.hpp"

#include <cmath>

#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"

namespace morphforge::loss {

using nn::Var;

void validate_weights(const LossWeights& w) {
  const std::pair<const char*, double> all[] = {
      {"lambda_gm", w.gm}, {"lambda_cid", w.cid}, {"lambda_mask", w.mask},
      {"lambda_app", w.app}, {"lambda_adv", w.adv}};
  for (const auto& [name, v] : all) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError(std::string(name) + " must be finite and >= 0");
    }
  }
}

Var geometry_loss(const Var& i_m, const Tensor& i_land) {
  require_same_shape(i_m.value(), i_land, "geometry_loss");
  return nn::mean(nn::abs(nn::sub(i_m, nn::constant(i_land))));
}

Var cosine_distance(const Var& u, const Var& v) {
  return nn::add_scalar(nn::scale(nn::dot(u, v), -1.0), 1.0);
}

namespace {

Var unit(const Var& e, const char* what) {
  double n2 = 0.0;
  for (double v : e.value().values()) n2 += v * v;
  if (std::abs(std::sqrt(n2) - 1.0) <= 1e-6) return e;
  log_warning(std::string("combined_identity_loss: ") + what +
              " is not unit norm, normalising");
  return nn::l2_normalize(e);
}

}  // namespace

Var combined_identity_loss(const Var& em_a, const Var& e1_a, const Var& e2_a,
                           const Var& em_b, const Var& e1_b, const Var& e2_b) {
  const Var ma = unit(em_a, "morph embedding A");
  const Var mb = unit(em_b, "morph embedding B");
  const Var a = nn::add(cosine_distance(ma, unit(e1_a, "contributor 1 A")),
                        cosine_distance(ma, unit(e2_a, "contributor 2 A")));
  const Var b = nn::add(cosine_distance(mb, unit(e1_b, "contributor 1 B")),
                        cosine_distance(mb, unit(e2_b, "contributor 2 B")));
  return nn::scale(nn::add(a, b), 0.5);
}

Var mask_loss(const Var& m_m, const Var& m_aux) {
  require_same_shape(m_m.value(), m_aux.value(), "mask_loss");
  return nn::mean(nn::square(nn::sub(m_m, m_aux)));
}

namespace {

Var mean_of(const std::vector<Var>& terms) {
  if (terms.empty()) return nn::constant(Tensor(1, 1, 1));
  return nn::scale(nn::add_n(terms), 1.0 / terms.size());
}

}  // namespace

AppearanceTerms appearance_loss(const Var& i_m, const Tensor& i1, const Tensor& i2,
                                const FeatureExtractor* extractor,
                                const std::vector<Var>& wfm_morph,
                                const std::vector<Tensor>& wfm_real,
                                const std::vector<LocalPair>& locals) {
  if (extractor == nullptr) {
    throw ConfigError("appearance_loss needs a feature extractor");
  }
  require_same_shape(i_m.value(), i1, "appearance_loss");
  require_same_shape(i1, i2, "appearance_loss");
  if (wfm_morph.size() != wfm_real.size()) {
    throw StructuralError("appearance_loss: feature layer count mismatch");
  }
  Tensor avg = i1;
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (i1[i] + i2[i]);

  std::vector<Tensor> target;
  {
    nn::NoGradGuard guard;
    for (const Var& f : extractor->features(nn::constant(avg))) {
      target.push_back(f.value());
    }
  }
  const std::vector<Var> morph = extractor->features(i_m);
  std::vector<Var> per;
  for (std::size_t l = 0; l < morph.size(); ++l) {
    per.push_back(nn::mean(nn::abs(nn::sub(morph[l], nn::constant(target[l])))));
  }
  std::vector<Var> wfm;
  for (std::size_t l = 0; l < wfm_morph.size(); ++l) {
    require_same_shape(wfm_morph[l].value(), wfm_real[l], "appearance_loss wfm");
    wfm.push_back(
        nn::mean(nn::abs(nn::sub(wfm_morph[l], nn::constant(wfm_real[l])))));
  }
  std::vector<Var> local;
  for (const auto& p : locals) {
    require_same_shape(p.generated.value(), p.target, "appearance_loss local");
    local.push_back(nn::mean(nn::abs(nn::sub(p.generated, nn::constant(p.target)))));
  }
  AppearanceTerms t;
  t.per = mean_of(per);
  t.wfm = mean_of(wfm);
  t.local = mean_of(local);
  t.total = nn::add_n({t.per, t.wfm, t.local});
  return t;
}

std::vector<Var> wfm_features(const gan::LogitCollection& logits, int k) {
  std::vector<Var> out;
  for (const auto& scale : logits.global) {
    const int n = static_cast<int>(scale.features.size());
    for (int i = std::max(0, n - k); i < n; ++i) out.push_back(scale.features[i]);
  }
  return out;
}

namespace {

void require_finite(const Var& logits, const char* what) {
  if (!logits.value().all_finite()) {
    throw NumericError(std::string("non-finite logits in ") + what);
  }
}

Var clamped(const Var& logits) {
  return nn::clamp(logits, -kLogitClamp, kLogitClamp);
}

// -log sigma(x) = softplus(-x)
Var neg_log_sigmoid(const Var& x) { return nn::softplus(nn::scale(x, -1.0)); }
// -log(1 - sigma(x)) = softplus(x)
Var neg_log_one_minus_sigmoid(const Var& x) { return nn::softplus(x); }

}  // namespace

AdversarialTerms discriminator_adversarial(
    const std::vector<gan::LogitCollection>& real, const gan::LogitCollection& fake) {
  if (real.empty()) throw StructuralError("discriminator_adversarial: no real inputs");
  const double inv_real = 1.0 / real.size();
  std::vector<Var> global;
  for (int s = 0; s < 2; ++s) {
    std::vector<Var> real_terms;
    for (const auto& r : real) {
      require_finite(r.global[s].logits, "global discriminator (real)");
      real_terms.push_back(nn::mean(nn::relu(
          nn::add_scalar(nn::scale(r.global[s].logits, -1.0), 1.0))));
    }
    require_finite(fake.global[s].logits, "global discriminator (fake)");
    const Var f = nn::mean(nn::relu(nn::add_scalar(fake.global[s].logits, 1.0)));
    global.push_back(nn::add(nn::scale(nn::add_n(real_terms), inv_real), f));
  }
  AdversarialTerms t;
  t.global = mean_of(global);
  std::vector<Var> local;
  if (fake.has_local) {
    for (int j = 0; j < gan::kRegionCount; ++j) {
      std::vector<Var> real_terms;
      for (const auto& r : real) {
        if (!r.has_local) throw StructuralError("real logits lack local outputs");
        require_finite(r.local[j].logits, "local discriminator (real)");
        real_terms.push_back(nn::mean(neg_log_sigmoid(clamped(r.local[j].logits))));
      }
      require_finite(fake.local[j].logits, "local discriminator (fake)");
      const Var f = nn::mean(neg_log_one_minus_sigmoid(clamped(fake.local[j].logits)));
      local.push_back(nn::add(nn::scale(nn::add_n(real_terms), inv_real), f));
    }
  }
  t.local = mean_of(local);
  return t;
}

AdversarialTerms generator_adversarial(const gan::LogitCollection& fake) {
  std::vector<Var> global;
  for (int s = 0; s < 2; ++s) {
    require_finite(fake.global[s].logits, "global discriminator (fake)");
    global.push_back(nn::scale(nn::mean(fake.global[s].logits), -1.0));
  }
  std::vector<Var> local;
  if (fake.has_local) {
    for (int j = 0; j < gan::kRegionCount; ++j) {
      require_finite(fake.local[j].logits, "local discriminator (fake)");
      local.push_back(nn::mean(neg_log_sigmoid(clamped(fake.local[j].logits))));
    }
  }
  return {mean_of(global), mean_of(local)};
}

LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w) {
  const std::pair<const char*, double> all[] = {
      {"geometry", parts.gm},          {"identity", parts.cid},
      {"mask", parts.mask},            {"appearance", parts.app},
      {"adversarial global", parts.adv_global},
      {"adversarial local", parts.adv_local}};
  for (const auto& [name, v] : all) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite ") + name + " loss");
    }
  }
  LossBreakdown out = parts;
  out.total = w.gm * parts.gm + w.cid * parts.cid + w.mask * parts.mask +
              w.app * parts.app + w.adv * (parts.adv_global + parts.adv_local);
  return out;
}

Var weighted_total(const LossTerms& terms, const LossWeights& w,
                   LossBreakdown* breakdown) {
  auto value = [](const Var& v) { return v.defined() ? v.item() : 0.0; };
  LossBreakdown parts;
  parts.gm = value(terms.gm);
  parts.cid = value(terms.cid);
  parts.mask = value(terms.mask);
  parts.app = value(terms.app);
  parts.adv_global = value(terms.adv_global);
  parts.adv_local = value(terms.adv_local);
  const LossBreakdown b = total_loss(parts, w);
  if (breakdown) *breakdown = b;

  std::vector<Var> sum;
  auto add = [&](const Var& v, double weight) {
    if (v.defined() && weight != 0.0) sum.push_back(nn::scale(v, weight));
  };
  add(terms.gm, w.gm);
  add(terms.cid, w.cid);
  add(terms.mask, w.mask);
  add(terms.app, w.app);
  add(terms.adv_global, w.adv);
  add(terms.adv_local, w.adv);
  if (sum.empty()) return nn::constant(Tensor(1, 1, 1));
  return nn::add_n(sum);
}

}  // namespace morphforge::loss
