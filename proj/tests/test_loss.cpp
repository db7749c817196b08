#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/loss/losses.hpp"

using namespace morphforge;
using namespace morphforge::loss;
using morphforge::testing::check_input_gradients;
using nn::Var;

namespace {

struct QuietLogs {
  QuietLogs() { set_log_level(LogLevel::kQuiet); }
} quiet_logs;

Tensor random_tensor(int c, int h, int w, std::mt19937_64& rng, double lo = 0.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(c, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t(dim, 1, 1);
  double s = 0;
  for (double& v : t.values()) {
    v = n(rng);
    s += v * v;
  }
  for (double& v : t.values()) v /= std::sqrt(s);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Var c(const Tensor& t) { return nn::constant(t); }

gan::LogitCollection logits_filled(double global, double local, int grid = 3) {
  gan::LogitCollection lc;
  for (auto& g : lc.global) g.logits = c(Tensor(1, grid, grid, global));
  for (auto& l : lc.local) l.logits = c(Tensor(1, grid, grid, local));
  lc.has_local = true;
  return lc;
}

void require_grad_ok(const morphforge::testing::GradCheckResult& r) {
  for (const auto& f : r.failed) MESSAGE(f);
  CHECK(r.probes == 20);
  CHECK(r.ok());
}

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

}  // namespace

TEST_CASE("geometry loss") {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor(3, 8, 8, rng);
  const Tensor b = random_tensor(3, 8, 8, rng);
  CHECK(geometry_loss(c(a), a).item() == 0.0);
  CHECK(geometry_loss(c(Tensor(3, 4, 4, 0.0)), Tensor(3, 4, 4, 0.5)).item() == 0.5);
  double oracle = 0;
  for (std::size_t i = 0; i < a.size(); ++i) oracle += std::abs(a[i] - b[i]);
  oracle /= a.size();
  CHECK(std::abs(geometry_loss(c(a), b).item() - oracle) <= 1e-12);
  CHECK_THROWS_AS(geometry_loss(c(a), Tensor(3, 8, 4)), StructuralError);
}

TEST_CASE("combined identity loss") {
  std::mt19937_64 rng(2);
  const Tensor u = random_unit(128, rng);
  CHECK(std::abs(combined_identity_loss(c(u), c(u), c(u), c(u), c(u), c(u)).item()) <= 1e-12);

  Tensor e0(4, 1, 1), e1(4, 1, 1), e2(4, 1, 1);
  e0[0] = 1;
  e1[1] = 1;
  e2[2] = 1;
  CHECK(combined_identity_loss(c(e0), c(e1), c(e2), c(e0), c(e1), c(e2)).item() == 2.0);

  for (int trial = 0; trial < 50; ++trial) {
    Tensor v[6];
    for (auto& t : v) t = random_unit(128, rng);
    const double oracle = ((1 - dot(v[0], v[1])) + (1 - dot(v[0], v[2]))) / 2 +
                          ((1 - dot(v[3], v[4])) + (1 - dot(v[3], v[5]))) / 2;
    const double got =
        combined_identity_loss(c(v[0]), c(v[1]), c(v[2]), c(v[3]), c(v[4]), c(v[5])).item();
    CHECK(std::abs(got - oracle) <= 1e-12);
    const double swapped =
        combined_identity_loss(c(v[0]), c(v[2]), c(v[1]), c(v[3]), c(v[5]), c(v[4])).item();
    CHECK(std::abs(got - swapped) <= 1e-15);
  }

  Tensor scaled = e0;
  scaled[0] = 3.0;
  CHECK(combined_identity_loss(c(scaled), c(e0), c(e0), c(e0), c(e0), c(e0)).item() ==
        doctest::Approx(0.0));
}

TEST_CASE("mask loss") {
  std::mt19937_64 rng(3);
  const Tensor m = random_tensor(1, 10, 10, rng);
  CHECK(mask_loss(c(m), c(m)).item() == 0.0);
  CHECK(mask_loss(c(Tensor(1, 5, 5, 0.0)), c(Tensor(1, 5, 5, 1.0))).item() == 1.0);
  Tensor a(1, 10, 10, 0.0), b(1, 10, 10, 0.0);
  for (int k : {3, 17, 58, 99}) b[k] = 1.0;
  CHECK(mask_loss(c(a), c(b)).item() == doctest::Approx(4.0 / 100).epsilon(1e-15));
}

TEST_CASE("appearance loss") {
  std::mt19937_64 rng(4);
  const auto extractor = toy_perceptual_extractor(1);
  const Tensor i1 = random_tensor(3, 16, 16, rng);
  const Tensor i2 = random_tensor(3, 16, 16, rng);
  Tensor avg = i1;
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (i1[i] + i2[i]);
  const Tensor target = random_tensor(3, 8, 8, rng);

  const AppearanceTerms zero =
      appearance_loss(c(avg), i1, i2, extractor.get(), {}, {}, {{c(target), target}});
  CHECK(zero.per.item() == 0.0);
  CHECK(zero.local.item() == 0.0);
  CHECK_THROWS_AS(appearance_loss(c(avg), i1, i2, nullptr, {}, {}, {}), ConfigError);

  const Tensor morph = random_tensor(3, 16, 16, rng);
  const Tensor gen = random_tensor(3, 8, 8, rng);
  const std::vector<Tensor> wfm_real = {random_tensor(4, 4, 4, rng), random_tensor(8, 2, 2, rng)};
  const std::vector<Var> wfm_morph = {c(random_tensor(4, 4, 4, rng)), c(random_tensor(8, 2, 2, rng))};
  const AppearanceTerms t =
      appearance_loss(c(morph), i1, i2, extractor.get(), wfm_morph, wfm_real, {{c(gen), target}});
  CHECK(t.per.item() >= 0.0);
  CHECK(t.wfm.item() >= 0.0);
  CHECK(t.local.item() >= 0.0);

  // Independent recomputation of each component.
  auto l1_mean = [](const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / a.size();
  };
  const auto fm = extractor->features(c(morph));
  const auto fa = extractor->features(c(avg));
  double per = 0;
  for (std::size_t l = 0; l < fm.size(); ++l) per += l1_mean(fm[l].value(), fa[l].value());
  per /= fm.size();
  const double wfm = (l1_mean(wfm_morph[0].value(), wfm_real[0]) +
                      l1_mean(wfm_morph[1].value(), wfm_real[1])) / 2;
  const double local = l1_mean(gen, target);
  CHECK(std::abs(t.per.item() - per) <= 1e-12);
  CHECK(std::abs(t.wfm.item() - wfm) <= 1e-12);
  CHECK(std::abs(t.local.item() - local) <= 1e-12);
  CHECK(std::abs(t.total.item() - (per + wfm + local)) <= 1e-12);
}

TEST_CASE("adversarial losses") {
  const auto confident_real = logits_filled(30, 30);
  const auto confident_fake = logits_filled(-30, -30);
  const AdversarialTerms sure = discriminator_adversarial({confident_real}, confident_fake);
  CHECK(sure.global.item() == doctest::Approx(0.0));
  CHECK(sure.local.item() < 1e-12);

  const auto zero = logits_filled(0, 0);
  const AdversarialTerms z = discriminator_adversarial({zero}, zero);
  CHECK(z.global.item() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(z.local.item() == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    gan::LogitCollection real, fake;
    real.has_local = fake.has_local = true;
    for (int s = 0; s < 2; ++s) {
      real.global[s].logits = c(random_tensor(1, 3, 3, rng, -40, 40));
      fake.global[s].logits = c(random_tensor(1, 3, 3, rng, -40, 40));
    }
    for (int j = 0; j < 6; ++j) {
      real.local[j].logits = c(random_tensor(1, 2, 2, rng, -40, 40));
      fake.local[j].logits = c(random_tensor(1, 2, 2, rng, -40, 40));
    }
    double g = 0, l = 0, gg = 0, gl = 0;
    for (int s = 0; s < 2; ++s) {
      double a = 0, b = 0, d = 0;
      for (double x : real.global[s].logits.value().values()) a += std::max(0.0, 1 - x);
      for (double y : fake.global[s].logits.value().values()) {
        b += std::max(0.0, 1 + y);
        d += y;
      }
      g += (a + b) / 9 / 2;
      gg += -d / 9 / 2;
    }
    for (int j = 0; j < 6; ++j) {
      double a = 0, b = 0;
      for (double x : real.local[j].logits.value().values()) {
        const double cx = std::clamp(x, -30.0, 30.0);
        a += std::log1p(std::exp(-cx));  // -log sigma(x)
      }
      double d = 0;
      for (double y : fake.local[j].logits.value().values()) {
        const double cy = std::clamp(y, -30.0, 30.0);
        b += std::log1p(std::exp(cy));   // -log(1 - sigma(y))
        d += std::log1p(std::exp(-cy));  // -log sigma(y)
      }
      l += (a + b) / 4 / 6;
      gl += d / 4 / 6;
    }
    const AdversarialTerms dt = discriminator_adversarial({real}, fake);
    const AdversarialTerms gt = generator_adversarial(fake);
    CHECK(std::abs(dt.global.item() - g) <= 1e-9);
    CHECK(std::abs(dt.local.item() - l) <= 1e-9);
    CHECK(std::abs(gt.global.item() - gg) <= 1e-9);
    CHECK(std::abs(gt.local.item() - gl) <= 1e-9);
  }
  CHECK(softplus(0) == doctest::Approx(std::log(2.0)));

  auto bad = logits_filled(0, 0);
  bad.local[3].logits = c(Tensor(1, 2, 2, std::nan("")));
  CHECK_THROWS_AS(generator_adversarial(bad), NumericError);
}

TEST_CASE("total loss") {
  const LossWeights w;
  CHECK(total_loss({}, w).total == 0.0);
  LossBreakdown p{.gm = 0.1, .cid = 0.1, .mask = 0.1, .app = 0.1, .adv_global = 0.2};
  CHECK(total_loss(p, w).total == doctest::Approx(4.2).epsilon(1e-14));
  LossWeights w2 = w;
  w2.cid *= 2;
  CHECK(total_loss(p, w2).total > total_loss(p, w).total);

  // Two-point probe: the slope in each component equals its weight.
  const LossWeights odd{1.5, 2.5, 3.5, 4.5, 5.5};
  auto slope = [&](double LossBreakdown::*field) {
    LossBreakdown a = p, b = p;
    a.*field = 0.3;
    b.*field = 0.7;
    return (total_loss(b, odd).total - total_loss(a, odd).total) / 0.4;
  };
  CHECK(slope(&LossBreakdown::gm) == doctest::Approx(1.5));
  CHECK(slope(&LossBreakdown::cid) == doctest::Approx(2.5));
  CHECK(slope(&LossBreakdown::mask) == doctest::Approx(3.5));
  CHECK(slope(&LossBreakdown::app) == doctest::Approx(4.5));
  CHECK(slope(&LossBreakdown::adv_global) == doctest::Approx(5.5));
  CHECK(slope(&LossBreakdown::adv_local) == doctest::Approx(5.5));

  LossBreakdown nan_part = p;
  nan_part.mask = std::nan("");
  try {
    total_loss(nan_part, w);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("mask") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_weights({10, 10, -1, 10, 1}), ConfigError);
  CHECK_NOTHROW(validate_weights({10, 10, 10, 10, 0}));
}

TEST_CASE("zero adversarial weight removes the adversarial gradient") {
  Var x(Tensor(1, 1, 1, 0.3), true);
  Var y(Tensor(1, 1, 1, 0.3), true);
  LossTerms t;
  t.gm = nn::square(x);
  t.adv_global = nn::scale(y, 7.0);
  t.adv_local = nn::mul(y, y);
  LossWeights w;
  w.adv = 0.0;
  LossBreakdown b;
  nn::backward(weighted_total(t, w, &b));
  CHECK(x.grad()[0] == doctest::Approx(10 * 0.6));
  CHECK((y.grad().empty() || y.grad()[0] == 0.0));
  CHECK(b.adv_global == doctest::Approx(2.1));
  CHECK(b.total == doctest::Approx(10 * 0.09));
}

TEST_CASE("toy embedders") {
  const auto embedders = toy_embedders(0);
  REQUIRE(embedders.size() == 4);
  std::mt19937_64 rng(6);
  const Tensor img = random_tensor(3, 32, 32, rng);
  std::vector<Tensor> outs;
  for (const auto& e : embedders) {
    const Tensor z = e->embed(c(img)).value();
    CHECK(z.channels() == 128);
    CHECK(std::abs(std::sqrt(dot(z, z)) - 1.0) <= 1e-6);
    CHECK(e->embed(c(img)).value() == z);
    outs.push_back(z);
  }
  CHECK(dot(outs[0], outs[1]) < 0.999);
  CHECK(dot(outs[2], outs[3]) < 0.999);
  CHECK(embedders[0]->name() == "A");
  CHECK(toy_embedders(0)[2]->embed(c(img)).value() == outs[2]);
}

TEST_CASE("loss gradients match central differences at 16x16") {
  std::mt19937_64 rng(7);
  const int res = 16;
  const Tensor img = random_tensor(3, res, res, rng);
  const Tensor other = random_tensor(3, res, res, rng);
  const Tensor i2 = random_tensor(3, res, res, rng);
  std::mt19937_64 probes(8);

  SUBCASE("geometry") {
    require_grad_ok(check_input_gradients(
        [&](const Var& x) { return geometry_loss(x, other); }, img, 20, probes));
  }
  SUBCASE("identity") {
    const auto e = toy_embedders(3);
    const Var e1a = e[0]->embed(c(other)), e2a = e[0]->embed(c(i2));
    const Var e1b = e[1]->embed(c(other)), e2b = e[1]->embed(c(i2));
    require_grad_ok(check_input_gradients(
        [&](const Var& x) {
          return combined_identity_loss(e[0]->embed(x), e1a, e2a, e[1]->embed(x), e1b, e2b);
        },
        img, 20, probes));
  }
  SUBCASE("mask") {
    const Tensor m = random_tensor(1, res, res, rng);
    const Tensor n = random_tensor(1, res, res, rng);
    require_grad_ok(check_input_gradients(
        [&](const Var& x) { return mask_loss(x, c(n)); }, m, 20, probes));
  }
  SUBCASE("appearance") {
    const auto ex = toy_perceptual_extractor(2);
    const Tensor target = random_tensor(3, 8, 8, rng);
    require_grad_ok(check_input_gradients(
        [&](const Var& x) {
          return appearance_loss(x, other, i2, ex.get(), {}, {},
                                 {{nn::crop(x, 4, 4, 8, 8), target}})
              .total;
        },
        img, 20, probes));
  }
  SUBCASE("adversarial") {
    gan::DiscriminatorConfig dc;
    dc.resolution = res;
    dc.base_channels = 4;
    dc.regions = gan::default_region_table(res);
    gan::DiscriminatorBundle d(dc);
    gan::RegionPatchSet regions;
    regions.bg_mask = make_mask(res, res, 0.5);
    regions.hair_mask = make_mask(res, res, 0.25);
    for (int i = 0; i < 4; ++i) {
      regions.patches[i].size = dc.regions.sizes[i];
      regions.patches[i].placement = {i, 2 * i};
    }
    const auto real = d.discriminate(c(other), regions);
    require_grad_ok(check_input_gradients(
        [&](const Var& x) {
          const auto t = generator_adversarial(d.discriminate(x, regions));
          return nn::add(t.global, t.local);
        },
        img, 20, probes));
    require_grad_ok(check_input_gradients(
        [&](const Var& x) {
          const auto t = discriminator_adversarial({real}, d.discriminate(x, regions));
          return nn::add(t.global, t.local);
        },
        img, 20, probes));
    require_grad_ok(check_input_gradients(
        [&](const Var& x) {
          const auto f = d.discriminate(x, regions);
          const auto r = d.discriminate(c(other), regions);
          std::vector<Var> acc;
          const auto fm = wfm_features(f, 3);
          const auto rm = wfm_features(r, 3);
          std::vector<Tensor> rv;
          for (const auto& v : rm) rv.push_back(v.value());
          return appearance_loss(x, other, i2, toy_perceptual_extractor(2).get(), fm, rv, {})
              .wfm;
        },
        img, 20, probes));
  }
}
