// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run all nine
//   acceptance 3 7        run a subset
//
// Exit status is 0 only when every selected criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gradcheck.hpp"
#include "morphforge/blend/blend.hpp"
#include "morphforge/blend/coder.hpp"
#include "morphforge/blend/parser.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/eval/metrics.hpp"
#include "morphforge/eval/report.hpp"
#include "morphforge/gan/bundle.hpp"
#include "morphforge/loss/losses.hpp"
#include "morphforge/nn/ops.hpp"
#include "morphforge/pipeline/evaluate.hpp"
#include "morphforge/pipeline/train.hpp"
#include "morphforge/warp/delaunay.hpp"
#include "morphforge/warp/face_template.hpp"
#include "morphforge/warp/morph.hpp"

using namespace morphforge;
using morphforge::testing::check_input_gradients;
using morphforge::testing::check_parameter_gradients;
using morphforge::testing::GradCheckResult;
using morphforge::testing::random_readout;
using nn::Var;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates named sub-checks; the first few failures go into the detail.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 5) failures_ += (failures_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failed_ == 0;
    std::ostringstream s;
    s << summary;
    if (failed_ > 0) s << " | " << failed_ << "/" << total_ << " failed: " << failures_;
    o.detail = s.str();
    return o;
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::string failures_;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Tensor random_tensor(int c, int h, int w, std::mt19937_64& rng, double lo = 0.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(c, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("morphforge_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1. metrics

double mmpmr_oracle(const eval::ScoreMatrix& m, double tau) {
  int hits = 0;
  for (const auto& row : m.mated) {
    bool all = true;
    for (double s : row) all = all && (s > tau);
    hits += all;
  }
  return static_cast<double>(hits) / m.mated.size();
}

struct OracleRates {
  double eer = 0.0;
  std::array<double, 4> apcer_at_bpcer{}, bpcer_at_apcer{};
};

// Enumerates every threshold in {-inf} u scores; the step functions cannot
// change anywhere else.
OracleRates mad_oracle(const std::vector<double>& bona, const std::vector<double>& att) {
  std::vector<double> ts = {-std::numeric_limits<double>::infinity()};
  ts.insert(ts.end(), bona.begin(), bona.end());
  ts.insert(ts.end(), att.begin(), att.end());
  OracleRates r;
  r.apcer_at_bpcer.fill(1.0);
  r.bpcer_at_apcer.fill(1.0);
  double best = 2.0;
  for (double t : ts) {
    int a = 0, b = 0;
    for (double s : att) a += (s <= t);
    for (double s : bona) b += (s > t);
    const double apcer = static_cast<double>(a) / att.size();
    const double bpcer = static_cast<double>(b) / bona.size();
    const double gap = std::abs(apcer - bpcer);
    const double mid = 0.5 * (apcer + bpcer);
    if (gap < best) {
      best = gap;
      r.eer = mid;
    } else if (gap == best) {
      r.eer = std::min(r.eer, mid);
    }
    for (int k = 0; k < 4; ++k) {
      const double op = eval::kOperatingPoints[k];
      if (bpcer <= op) r.apcer_at_bpcer[k] = std::min(r.apcer_at_bpcer[k], apcer);
      if (apcer <= op) r.bpcer_at_apcer[k] = std::min(r.bpcer_at_apcer[k], bpcer);
    }
  }
  std::vector<double> sb = bona, sa = att;
  std::sort(sb.begin(), sb.end());
  std::sort(sa.begin(), sa.end());
  if (sb == sa) r.eer = 0.5;
  return r;
}

Outcome criterion_metrics() {
  Checks c;
  std::mt19937_64 rng(1001);
  auto quantized = [&](int levels) {
    return static_cast<double>(rng() % levels) / (levels - 1);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    eval::ScoreMatrix m;
    const int morphs = 1 + static_cast<int>(rng() % 25);
    const int levels = 3 + static_cast<int>(rng() % 30);
    for (int i = 0; i < morphs; ++i) {
      std::vector<double> row(1 + rng() % 4);
      for (double& s : row) s = quantized(levels);
      m.mated.push_back(row);
    }
    // Thresholds on score values exercise the strict comparison.
    const double tau = trial % 2 ? quantized(levels) : quantized(1000);
    c.expect(eval::mmpmr(m, tau) == mmpmr_oracle(m, tau), "mmpmr trial " + std::to_string(trial));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const int levels = 2 + static_cast<int>(rng() % 40);
    std::vector<double> bona(1 + rng() % 40), att(1 + rng() % 40);
    for (double& s : bona) s = quantized(levels);
    for (double& s : att) s = quantized(levels);
    if (trial % 3 == 0) {
      std::normal_distribution<double> n(0.0, 1.0);
      for (double& s : bona) s = n(rng) + 1.0;
      for (double& s : att) s = n(rng);
    }
    const eval::MadRates got = eval::mad_rates(bona, att);
    const OracleRates want = mad_oracle(bona, att);
    c.expect(got.eer == want.eer && got.apcer_at_bpcer == want.apcer_at_bpcer &&
                 got.bpcer_at_apcer == want.bpcer_at_apcer,
             "mad trial " + std::to_string(trial));
  }
  return c.outcome("1000 mmpmr + 1000 mad instances");
}

// -------------------------------------------------------------------- 2. FID

Outcome criterion_fid() {
  Checks c;
  const int d = 4, n = 10000;
  std::mt19937_64 rng(2002);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> a(n, std::vector<double>(d)), b = a;
  for (auto& v : a) {
    for (double& x : v) x = g(rng);
  }
  for (auto& v : b) {
    for (double& x : v) x = g(rng) + 1.0;
  }
  // N(0, I) vs N(1, I): ||mu_a - mu_b||^2 = d, trace term 0.
  const double analytic = d;
  const double sampled = eval::fid(a, b);
  const double rel = std::abs(sampled - analytic) / analytic;
  c.expect(rel < 0.05, "Gaussian FID " + fmt(sampled) + " vs " + fmt(analytic));
  const double same = eval::fid(a, a);
  c.expect(std::abs(same) <= 1e-8, "FID(identical) = " + fmt(same));
  const double asym = std::abs(eval::fid(a, b) - eval::fid(b, a));
  c.expect(asym <= 1e-8, "asymmetry " + fmt(asym));

  // Correlated covariances: closed form from the eigen square root.
  Eigen::Matrix4d la = Eigen::Matrix4d::Random() * 0.5 + Eigen::Matrix4d::Identity();
  Eigen::Matrix4d lb = Eigen::Matrix4d::Random() * 0.5 + Eigen::Matrix4d::Identity();
  const Eigen::Vector4d mb(0.5, -0.25, 1.0, 0.0);
  for (auto& v : a) {
    Eigen::Vector4d z;
    for (int i = 0; i < d; ++i) z[i] = g(rng);
    const Eigen::Vector4d x = la * z;
    for (int i = 0; i < d; ++i) v[i] = x[i];
  }
  for (auto& v : b) {
    Eigen::Vector4d z;
    for (int i = 0; i < d; ++i) z[i] = g(rng);
    const Eigen::Vector4d x = lb * z + mb;
    for (int i = 0; i < d; ++i) v[i] = x[i];
  }
  const Eigen::Matrix4d sa = la * la.transpose(), sb = lb * lb.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> ea(sa);
  const Eigen::Matrix4d ra = ea.operatorSqrt();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> em(ra * sb * ra);
  const double cross = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double analytic2 = mb.squaredNorm() + sa.trace() + sb.trace() - 2 * cross;
  const double sampled2 = eval::fid(a, b);
  c.expect(std::abs(sampled2 - analytic2) / analytic2 < 0.05,
           "correlated FID " + fmt(sampled2) + " vs " + fmt(analytic2));
  return c.outcome("isotropic " + fmt(sampled, 5) + " vs 4 (" + fmt(100 * rel, 2) +
                   "%), correlated " + fmt(sampled2, 5) + " vs " + fmt(analytic2, 5) +
                   ", identical " + fmt(same) + ", asymmetry " + fmt(asym));
}

// ---------------------------------------------------------- 3. gradients

class GradChecks {
 public:
  void add(const std::string& name, const GradCheckResult& r) {
    ++count_;
    max_rel_ = std::max(max_rel_, r.max_rel_error);
    c_.expect(r.probes >= 20 && r.ok(),
              name + " (" + std::to_string(r.failures) + " of " + std::to_string(r.probes) +
                  " probes off, max rel " + fmt(r.max_rel_error) + ")");
  }
  Outcome outcome() const {
    return c_.outcome(std::to_string(count_) + " checks of 20+ probes, max rel err " +
                      fmt(max_rel_));
  }

 private:
  Checks c_;
  int count_ = 0;
  double max_rel_ = 0.0;
};

gan::RegionPatchSet test_regions(const Image& img) {
  const int res = img.width();
  const auto lm = warp::canonical_landmarks(res, res);
  FaceMask bg = make_mask(res, res, 0.0);
  FaceMask face = make_mask(res, res, 0.0);
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      bg.at(0, y, x) = y < res / 4 ? 1.0 : 0.0;
      face.at(0, y, x) = (x > res / 4 && x < 3 * res / 4 && y > res / 3) ? 1.0 : 0.0;
    }
  }
  return gan::extract_regions(img, lm, bg, face, gan::default_region_table(res));
}

pipeline::PipelineConfig small_config(int resolution, std::uint64_t seed) {
  pipeline::PipelineConfig cfg;
  cfg.resolution = resolution;
  cfg.base_channels = 4;
  cfg.max_channels = 16;
  cfg.local_base_channels = 4;
  cfg.fusion_channels = 4;
  cfg.disc_base_channels = 4;
  cfg.coder_steps = 20;
  cfg.identities = 2;
  cfg.images_per_identity = 1;
  cfg.calibration_identities = 8;
  cfg.seed = seed;
  return cfg;
}

Outcome criterion_gradients() {
  GradChecks gc;
  const int res = 16;
  const int probes = 20;
  std::mt19937_64 rng(3003);
  std::mt19937_64 pr(3004);
  const Image img = random_tensor(3, res, res, rng);
  const Image other = random_tensor(3, res, res, rng);
  const Image i2 = random_tensor(3, res, res, rng);
  const gan::RegionPatchSet regions = test_regions(img);

  pipeline::PipelineConfig cfg = small_config(res, 5);
  pipeline::MorphModels models(cfg);
  const auto& g = models.generator;
  const auto& d = models.discriminator;

  // Networks.
  gc.add("global U-Net params",
         check_parameter_gradients(
             [&] { return random_readout(g.generate_global(nn::constant(img)), 1); },
             g.global_parameters(), probes, pr));
  gc.add("global U-Net input",
         check_input_gradients(
             [&](const Var& x) { return random_readout(g.generate_global(x), 2); }, img,
             probes, pr));
  for (gan::Region r : gan::kAllRegions) {
    std::vector<nn::NamedParam> params;
    g.local_net(r).collect("n", params);
    const Tensor& patch = regions[r].patch;
    gc.add(std::string("local net ") + gan::region_name(r),
           check_parameter_gradients(
               [&] { return random_readout(g.local_net(r)(nn::constant(patch)), 3); }, params,
               probes, pr));
    gc.add(std::string("local net input ") + gan::region_name(r),
           check_input_gradients(
               [&](const Var& x) { return random_readout(g.local_net(r)(x), 4); }, patch,
               probes, pr));
  }
  gc.add("local canvas",
         check_parameter_gradients(
             [&] {
               return random_readout(gan::assemble_local(g.generate_locals(regions), regions),
                                     5);
             },
             g.local_parameters(), probes, pr));
  gc.add("fusion params",
         check_parameter_gradients(
             [&] { return random_readout(g.fuse(nn::constant(img), nn::constant(other)), 6); },
             g.fusion_parameters(), probes, pr));
  gc.add("fusion input",
         check_input_gradients(
             [&](const Var& x) { return random_readout(g.fuse(x, nn::constant(other)), 7); },
             img, probes, pr));

  auto disc_readout = [&](const gan::LogitCollection& lc) {
    std::vector<Var> terms;
    for (int s = 0; s < 2; ++s) terms.push_back(random_readout(lc.global[s].logits, 10 + s));
    for (int r = 0; r < gan::kRegionCount; ++r) {
      terms.push_back(random_readout(lc.local[r].logits, 20 + r));
    }
    return nn::add_n(terms);
  };
  gc.add("discriminators params",
         check_parameter_gradients(
             [&] { return disc_readout(d.discriminate(nn::constant(img), regions)); },
             d.parameters(), 2 * probes, pr));
  gc.add("discriminators input",
         check_input_gradients(
             [&](const Var& x) { return disc_readout(d.discriminate(x, regions)); }, img,
             probes, pr));

  gc.add("autoencoder params",
         check_parameter_gradients(
             [&] {
               return random_readout(
                   models.coder.decode_var(models.coder.encode_var(nn::constant(img))), 30);
             },
             models.coder.parameters(), probes, pr));
  gc.add("autoencoder input",
         check_input_gradients(
             [&](const Var& x) {
               return random_readout(models.coder.decode_var(models.coder.encode_var(x)), 31);
             },
             img, probes, pr));
  for (int k = 0; k < loss::kToyEmbedderCount; ++k) {
    const auto& e = models.embedders[k];
    gc.add("recogniser " + e->name(),
           check_input_gradients(
               [&](const Var& x) { return random_readout(e->embed(x), 40 + k); }, img, probes,
               pr));
  }
  gc.add("perceptual extractor",
         check_input_gradients(
             [&](const Var& x) {
               std::vector<Var> terms;
               unsigned s = 50;
               for (const Var& f : models.perceptual->features(x)) {
                 terms.push_back(random_readout(f, s++));
               }
               return nn::add_n(terms);
             },
             img, probes, pr));
  const auto lm = warp::canonical_landmarks(res, res);
  const Tensor target_mask = blend::face_mask(models.parser.parse(nn::constant(other), lm)).value();
  gc.add("face parser",
         check_input_gradients(
             [&](const Var& x) {
               const Var m = blend::face_mask(models.parser.parse(x, lm));
               return nn::mean(nn::square(nn::sub(m, nn::constant(target_mask))));
             },
             img, probes, pr));

  // Loss terms.
  gc.add("geometry loss",
         check_input_gradients([&](const Var& x) { return loss::geometry_loss(x, other); }, img,
                               probes, pr));
  {
    const auto& e = models.embedders;
    const Var e1a = e[0]->embed(nn::constant(other)), e2a = e[0]->embed(nn::constant(i2));
    const Var e1b = e[1]->embed(nn::constant(other)), e2b = e[1]->embed(nn::constant(i2));
    gc.add("identity loss",
           check_input_gradients(
               [&](const Var& x) {
                 return loss::combined_identity_loss(e[0]->embed(x), e1a, e2a, e[1]->embed(x),
                                                     e1b, e2b);
               },
               img, probes, pr));
  }
  {
    const Tensor m = random_tensor(1, res, res, rng);
    const Tensor n = random_tensor(1, res, res, rng);
    gc.add("mask loss",
           check_input_gradients(
               [&](const Var& x) { return loss::mask_loss(x, nn::constant(n)); }, m, probes,
               pr));
  }
  const auto real = d.discriminate(nn::constant(other), regions);
  std::vector<Tensor> real_feats;
  for (const Var& v : loss::wfm_features(real, cfg.wfm_layers)) real_feats.push_back(v.value());
  const Tensor local_target = random_tensor(3, 8, 8, rng);
  auto appearance = [&](const Var& x) {
    return loss::appearance_loss(x, other, i2, models.perceptual.get(),
                                 loss::wfm_features(d.discriminate(x, regions), cfg.wfm_layers),
                                 real_feats, {{nn::crop(x, 4, 4, 8, 8), local_target}});
  };
  gc.add("perceptual loss",
         check_input_gradients([&](const Var& x) { return appearance(x).per; }, img, probes, pr));
  gc.add("weak feature matching loss",
         check_input_gradients([&](const Var& x) { return appearance(x).wfm; }, img, probes, pr));
  gc.add("local appearance loss",
         check_input_gradients([&](const Var& x) { return appearance(x).local; }, img, probes,
                               pr));
  gc.add("generator adversarial loss",
         check_input_gradients(
             [&](const Var& x) {
               const auto t = loss::generator_adversarial(d.discriminate(x, regions));
               return nn::add(t.global, t.local);
             },
             img, probes, pr));
  gc.add("discriminator adversarial loss",
         check_input_gradients(
             [&](const Var& x) {
               const auto t = loss::discriminator_adversarial({real}, d.discriminate(x, regions));
               return nn::add(t.global, t.local);
             },
             img, probes, pr));
  gc.add("discriminator adversarial loss params",
         check_parameter_gradients(
             [&] {
               const auto r = d.discriminate(nn::constant(other), regions);
               const auto t =
                   loss::discriminator_adversarial({r}, d.discriminate(nn::constant(img), regions));
               return nn::add(t.global, t.local);
             },
             d.parameters(), probes, pr));

  // The full weighted generator objective on a toy pair.
  const auto samples = pipeline::toy_samples(2, 1, res, cfg.seed);
  pipeline::fit_coder(models, samples);
  const auto ctx = pipeline::prepare_pair(models, samples[0], samples[1]);
  gc.add("generator objective",
         check_parameter_gradients(
             [&] { return pipeline::generator_objective(models, ctx).total; },
             g.parameters(), 2 * probes, pr));
  gc.add("discriminator objective",
         check_parameter_gradients(
             [&] { return pipeline::discriminator_objective(models, ctx); }, d.parameters(),
             probes, pr));
  return gc.outcome();
}

// ------------------------------------------------------------ 4. blending

Image dense_poisson(const Image& fg, const Image& bg, const FaceMask& mask) {
  const int H = fg.height(), W = fg.width();
  std::vector<int> idx(H * W, -1);
  int n = 0;
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) {
      if (mask.at(0, y, x) > 0.5) idx[y * W + x] = n++;
    }
  }
  Image out = bg;
  if (n == 0) return out;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 3);
  const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) {
      const int i = idx[y * W + x];
      if (i < 0) continue;
      A(i, i) = 4;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k], nx = x + dx[k];
        const int j = idx[ny * W + nx];
        if (j >= 0) A(i, j) = -1;
        for (int c = 0; c < 3; ++c) {
          B(i, c) += fg.at(c, y, x) - fg.at(c, ny, nx) + (j < 0 ? bg.at(c, ny, nx) : 0.0);
        }
      }
    }
  }
  const Eigen::MatrixXd F = A.partialPivLu().solve(B);
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) {
      const int i = idx[y * W + x];
      if (i >= 0) {
        for (int c = 0; c < 3; ++c) out.at(c, y, x) = F(i, c);
      }
    }
  }
  clamp01(out);
  return out;
}

Outcome criterion_blending() {
  Checks c;
  std::mt19937_64 rng(4004);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 4 + static_cast<int>(rng() % 40), w = 4 + static_cast<int>(rng() % 40);
    const Image im = random_tensor(3, h, w, rng);
    const Image aux = random_tensor(3, h, w, rng);
    const std::string t = " trial " + std::to_string(trial);
    c.expect(blend::mask_guided_blend(im, aux, make_mask(h, w, 1.0)) == im, "mask 1" + t);
    c.expect(blend::mask_guided_blend(im, aux, make_mask(h, w, 0.0)) == aux, "mask 0" + t);
    const FaceMask soft = random_tensor(1, h, w, rng);
    const Image mixed = blend::mask_guided_blend(im, aux, soft);
    bool bounded = true;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      bounded = bounded && mixed[i] >= std::min(im[i], aux[i]) &&
                mixed[i] <= std::max(im[i], aux[i]);
    }
    c.expect(bounded, "convex bound" + t);
  }
  double worst_residual = 0.0, worst_diff = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 3 + static_cast<int>(rng() % 30), w = 3 + static_cast<int>(rng() % 30);
    const Image fg = random_tensor(3, h, w, rng);
    const Image bg = random_tensor(3, h, w, rng);
    FaceMask m = random_tensor(1, h, w, rng, 0.0, 1.0 + 0.1 * (trial % 8));
    if (trial % 4 == 0) {
      // Solid blob: a large connected unknown set.
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double u = (x - w / 2.0) / (w / 2.5), v = (y - h / 2.0) / (h / 2.5);
          m.at(0, y, x) = u * u + v * v < 1.0 ? 1.0 : 0.0;
        }
      }
    }
    blend::PoissonReport rep;
    const Image out = blend::poisson_blend(fg, bg, m, &rep);
    const double diff = max_abs_diff(out, dense_poisson(fg, bg, m));
    worst_residual = std::max(worst_residual, rep.max_residual);
    worst_diff = std::max(worst_diff, diff);
    c.expect(rep.max_residual < 1e-6, "residual " + fmt(rep.max_residual));
    c.expect(diff < 1e-6, "dense mismatch " + fmt(diff) + " at " + std::to_string(h) + "x" +
                              std::to_string(w));
  }
  return c.outcome("50 blend identity cases; 20 Poisson masks up to 32x32, residual " +
                   fmt(worst_residual) + ", max diff vs LU " + fmt(worst_diff));
}

// ---------------------------------------------------------------- 5. warping

std::set<std::array<int, 3>> canonical(std::vector<warp::Triangle> tris) {
  std::set<std::array<int, 3>> out;
  for (auto t : tris) {
    std::sort(t.begin(), t.end());
    out.insert(t);
  }
  return out;
}

// Every non-degenerate triple whose circumcircle holds no other point.
std::set<std::array<int, 3>> brute_force_delaunay(const std::vector<warp::Point2>& p) {
  std::set<std::array<int, 3>> out;
  const int n = static_cast<int>(p.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const double ax = p[a].x, ay = p[a].y, bx = p[b].x, by = p[b].y, cx = p[c].x,
                     cy = p[c].y;
        const double dd = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::abs(dd) < 1e-12) continue;
        const double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) +
                           (cx * cx + cy * cy) * (ay - by)) / dd;
        const double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) +
                           (cx * cx + cy * cy) * (bx - ax)) / dd;
        const double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
        bool empty = true;
        for (int k = 0; k < n && empty; ++k) {
          if (k == a || k == b || k == c) continue;
          const double dk = (p[k].x - ux) * (p[k].x - ux) + (p[k].y - uy) * (p[k].y - uy);
          if (dk < r2 * (1 - 1e-12)) empty = false;
        }
        if (empty) out.insert({a, b, c});
      }
    }
  }
  return out;
}

Outcome criterion_warping() {
  Checks c;
  const int res = 64;
  const auto samples = pipeline::toy_samples(4, 1, res, 5005);
  double self_err = 0.0, end_err = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& a = samples[i];
    const auto& b = samples[(i + 1) % samples.size()];
    for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
      const double e =
          max_abs_diff(warp::landmark_morph(a.image, a.landmarks, a.image, a.landmarks, alpha)
                           .image,
                       a.image);
      self_err = std::max(self_err, e);
      c.expect(e < 1e-6, "self-morph " + a.image_id + " err " + fmt(e));
    }
    const double e0 = max_abs_diff(
        warp::landmark_morph(a.image, a.landmarks, b.image, b.landmarks, 0.0).image, a.image);
    const double e1 = max_abs_diff(
        warp::landmark_morph(a.image, a.landmarks, b.image, b.landmarks, 1.0).image, b.image);
    end_err = std::max({end_err, e0, e1});
    c.expect(e0 < 1e-3 && e1 < 1e-3, "endpoint " + a.image_id + " err " + fmt(std::max(e0, e1)));
  }
  std::mt19937_64 rng(5006);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  int trials = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 3 + trial % 10;
    std::vector<warp::Point2> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    if (trial % 5 == 0) {
      // Integer lattice points: collinear and cocircular subsets.
      for (auto& p : pts) p = {static_cast<double>(rng() % 5), static_cast<double>(rng() % 5)};
      std::set<std::pair<double, double>> seen;
      std::vector<warp::Point2> uniq;
      for (const auto& p : pts) {
        if (seen.insert({p.x, p.y}).second) uniq.push_back(p);
      }
      pts = uniq;
      bool collinear = true;
      for (std::size_t k = 2; k < pts.size() && collinear; ++k) {
        collinear = std::abs(warp::orient2d(pts[0], pts[1], pts[k])) < 1e-12;
      }
      if (pts.size() < 3 || collinear) continue;
      // Cocircular quadruples make the oracle's triangle set ambiguous; keep
      // only the property every valid triangulation satisfies.
      const auto tris = warp::delaunay(pts);
      const auto oracle = brute_force_delaunay(pts);
      bool subset = true;
      for (const auto& t : canonical(tris)) subset = subset && oracle.count(t) > 0;
      c.expect(subset, "lattice trial " + std::to_string(trial));
      ++trials;
      continue;
    }
    c.expect(canonical(warp::delaunay(pts)) == brute_force_delaunay(pts),
             "delaunay trial " + std::to_string(trial));
    ++trials;
  }
  return c.outcome("self-morph err " + fmt(self_err) + ", endpoint err " + fmt(end_err) + ", " +
                   std::to_string(trials) + " Delaunay point sets of 3-12");
}

// --------------------------------------------------------------- 6. assembly

Outcome criterion_assembly() {
  Checks c;
  std::mt19937_64 rng(6006);
  int overlapped = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int ch = 1 + static_cast<int>(rng() % 3);
    const int h = 4 + static_cast<int>(rng() % 29), w = 4 + static_cast<int>(rng() % 29);
    const Tensor base = random_tensor(ch, h, w, rng);
    const int count = 2 + static_cast<int>(rng() % 5);
    std::vector<Var> patches;
    std::vector<nn::Placement> at;
    std::vector<Tensor> values;
    for (int k = 0; k < count; ++k) {
      const int ph = 1 + static_cast<int>(rng() % h), pw = 1 + static_cast<int>(rng() % w);
      const nn::Placement p{static_cast<int>(rng() % (h - ph + 1)),
                            static_cast<int>(rng() % (w - pw + 1))};
      // Coarse values so exact ties between patches happen.
      Tensor t(ch, ph, pw);
      for (double& v : t.values()) v = static_cast<double>(rng() % 8) / 7.0;
      values.push_back(t);
      patches.push_back(nn::constant(t));
      at.push_back(p);
    }
    const Tensor got = nn::assemble_min(nn::constant(base), patches, at).value();
    Tensor want = base;
    bool any_overlap = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int covering = 0;
        for (int k = 0; k < count; ++k) {
          const int py = y - at[k].top, px = x - at[k].left;
          if (py < 0 || px < 0 || py >= values[k].height() || px >= values[k].width()) continue;
          for (int cc = 0; cc < ch; ++cc) {
            const double v = values[k].at(cc, py, px);
            want.at(cc, y, x) = covering == 0 ? v : std::min(want.at(cc, y, x), v);
          }
          ++covering;
        }
        any_overlap = any_overlap || covering > 1;
      }
    }
    overlapped += any_overlap;
    c.expect(got == want, "trial " + std::to_string(trial));
  }
  return c.outcome("100 configurations, " + std::to_string(overlapped) + " with overlaps");
}

// ------------------------------------------------------------ 7. training

Outcome criterion_training() {
  Checks c;
  std::vector<double> first, last, untrained, trained;
  std::ostringstream per_seed;
  for (std::uint64_t seed : {0, 1, 2}) {
    pipeline::PipelineConfig cfg;
    cfg.resolution = 64;
    cfg.base_channels = 8;
    cfg.max_channels = 32;
    cfg.local_base_channels = 8;
    cfg.fusion_channels = 8;
    cfg.disc_base_channels = 8;
    cfg.identities = 2;
    cfg.images_per_identity = 1;
    cfg.max_steps = 200;
    cfg.seed = seed;
    const auto samples =
        pipeline::toy_samples(cfg.identities, cfg.images_per_identity, cfg.resolution, seed);
    pipeline::MorphModels models(cfg);
    pipeline::fit_coder(models, samples);
    std::vector<pipeline::PairContext> contexts;
    for (const auto& p : pipeline::select_pairs(samples, seed, 0)) {
      contexts.push_back(pipeline::prepare_pair(models, pipeline::find_sample(samples, p.id1),
                                                pipeline::find_sample(samples, p.id2)));
    }
    auto identity_loss = [&] {
      nn::NoGradGuard guard;
      return pipeline::generator_objective(models, contexts[0]).breakdown.cid;
    };
    const double before = identity_loss();
    const auto result = pipeline::train(models, contexts);
    const double after = identity_loss();
    first.push_back(result.steps.front().generator.total);
    last.push_back(result.steps.back().generator.total);
    untrained.push_back(before);
    trained.push_back(after);
    per_seed << " seed" << seed << ":" << fmt(first.back()) << "->" << fmt(last.back())
             << "/cid " << fmt(before) << "->" << fmt(after);
    c.expect(result.steps.size() == 200, "seed " + std::to_string(seed) + " ran " +
                                             std::to_string(result.steps.size()) + " steps");
  }
  const double m_first = median(first), m_last = median(last);
  const double m_before = median(untrained), m_after = median(trained);
  c.expect(m_last < m_first, "median total " + fmt(m_first) + " -> " + fmt(m_last));
  c.expect(m_after < m_before, "median identity loss " + fmt(m_before) + " -> " + fmt(m_after));
  return c.outcome("median total " + fmt(m_first) + " -> " + fmt(m_last) +
                   ", median identity loss " + fmt(m_before) + " -> " + fmt(m_after) + ";" +
                   per_seed.str());
}

// --------------------------------------------------------------- 8. ablation

Outcome criterion_ablation() {
  Checks c;
  pipeline::PipelineConfig cfg = small_config(32, 8008);
  cfg.identities = 3;
  cfg.images_per_identity = 2;
  cfg.max_steps = 10;
  const auto samples =
      pipeline::toy_samples(cfg.identities, cfg.images_per_identity, cfg.resolution, cfg.seed);
  const auto dir = scratch("ablation");
  const auto run = pipeline::run_ablation(cfg, samples, dir);
  const std::vector<std::string> want = {"full",     "no_geometry", "single_embedder",
                                         "no_local", "no_blending", "poisson_blending"};
  std::vector<std::string> got;
  for (const auto& row : run.tables.rows) {
    got.push_back(row.name);
    c.expect(row.fid && row.ssim && row.psnr, row.name + " has n/a quality columns");
    for (const auto& m : row.mmpmr) c.expect(m.has_value(), row.name + " has n/a MMPMR");
  }
  c.expect(got == want, "variant rows");
  const std::string csv = slurp(dir / "report.csv");
  c.expect(csv.rfind("variant,fid,ssim,psnr,mmpmr_A,mmpmr_B,mmpmr_C,mmpmr_D\n", 0) == 0,
           "report.csv header");
  c.expect(std::count(csv.begin(), csv.end(), '\n') == 7, "report.csv rows");
  c.expect(fs::exists(dir / "report.md"), "report.md");
  int blends = 0;
  for (const auto& r : run.records.at("no_blending")) {
    c.expect(r.i_final == r.i_m, "no_blending changed " + pipeline::pair_name(r.pair));
    ++blends;
  }
  for (const auto& r : run.records.at("poisson_blending")) {
    c.expect(r.backend == pipeline::BlendBackend::kPoisson, "poisson backend not used");
  }
  for (const auto& v : want) {
    c.expect(fs::exists(dir / v / "morphs" / "index.csv") &&
                 fs::exists(dir / v / "report" / "report.csv"),
             v + " outputs missing");
  }
  fs::remove_all(dir);
  return c.outcome("6 variant rows, no_blending exact on " + std::to_string(blends) + " pairs");
}

// ------------------------------------------------------------ 9. determinism

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd =
      "cd '" + cwd.string() + "' && '" MORPHFORGE_CLI "' " + args + " > cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Relative path -> bytes for every file under root.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

Outcome criterion_determinism() {
  Checks c;
  const std::string common =
      "-q --seed 11 --resolution 32 --set base_channels=4 --set max_channels=16"
      " --set local_base_channels=4 --set fusion_channels=4 --set disc_base_channels=4"
      " --set coder_steps=20 --set identities=3 --set calibration_identities=8 --steps 10 ";
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"determinism_a", "determinism_b"}) {
    const auto dir = scratch(name);
    for (const char* cmd : {"train", "morph", "evaluate"}) {
      const int code = run_cli(common + cmd, dir);
      c.expect(code == 0, std::string(name) + " " + cmd + " exited " + std::to_string(code));
    }
    runs.push_back(tree(dir / "out"));
    fs::remove_all(dir);
  }
  int pngs = 0, reports = 0, compared = 0;
  for (const auto& [path, bytes] : runs[0]) {
    // Wall-clock stage timings are the one artefact allowed to differ.
    if (fs::path(path).filename() == "timings.csv") continue;
    const auto it = runs[1].find(path);
    c.expect(it != runs[1].end() && it->second == bytes, path + " differs");
    ++compared;
    pngs += fs::path(path).extension() == ".png";
    reports += fs::path(path).filename().string().rfind("report.", 0) == 0;
  }
  c.expect(runs[0].size() == runs[1].size(), "file sets differ");
  c.expect(pngs > 0 && reports >= 2, "missing morphs or reports");
  return c.outcome(std::to_string(compared) + " files identical (" + std::to_string(pngs) +
                   " PNGs, " + std::to_string(reports) + " reports)");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::kQuiet);
  const std::vector<Criterion> all = {
      {1, "metric oracle equivalence", 30, criterion_metrics},
      {2, "FID correctness", 60, criterion_fid},
      {3, "gradient integrity", 300, criterion_gradients},
      {4, "blending algebra", 0, criterion_blending},
      {5, "warping identities", 0, criterion_warping},
      {6, "assembly oracle", 0, criterion_assembly},
      {7, "toy-scale training", 600, criterion_training},
      {8, "ablation harness", 0, criterion_ablation},
      {9, "determinism", 0, criterion_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& cr : all) {
    if (!selected.empty() && !selected.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs > cr.budget_s) {
      o.pass = false;
      o.detail += " | over the " + fmt(cr.budget_s) + " s budget";
    }
    failed += !o.pass;
    std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
