#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "morphforge/core/error.hpp"
#include "morphforge/eval/detectors.hpp"
#include "morphforge/eval/metrics.hpp"
#include "morphforge/eval/report.hpp"
#include "morphforge/eval/scores.hpp"

using namespace morphforge;
using namespace morphforge::eval;

namespace {

// Naive oracles. Written independently of the library code paths.

double mmpmr_oracle(const ScoreMatrix& m, double tau) {
  int hits = 0;
  for (const auto& row : m.mated) {
    bool all = true;
    for (double s : row) all = all && (s > tau);
    hits += all;
  }
  return static_cast<double>(hits) / m.mated.size();
}

struct OracleRates {
  double eer;
  std::array<double, 4> apcer_at_bpcer, bpcer_at_apcer;
};

OracleRates mad_oracle(const std::vector<double>& bona, const std::vector<double>& att) {
  // Rates are right-continuous step functions, so -inf and every observed
  // score cover every distinct (APCER, BPCER) pair in increasing t order.
  std::vector<double> ts = {-std::numeric_limits<double>::infinity()};
  for (double s : bona) ts.push_back(s);
  for (double s : att) ts.push_back(s);
  std::sort(ts.begin(), ts.end());
  OracleRates r{};
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
    if (gap < best) {
      best = gap;
      r.eer = 0.5 * (apcer + bpcer);
    } else if (gap == best) {
      r.eer = std::min(r.eer, 0.5 * (apcer + bpcer));
    }
    for (int k = 0; k < 4; ++k) {
      if (bpcer <= kOperatingPoints[k]) r.apcer_at_bpcer[k] = std::min(r.apcer_at_bpcer[k], apcer);
      if (apcer <= kOperatingPoints[k]) r.bpcer_at_apcer[k] = std::min(r.bpcer_at_apcer[k], bpcer);
    }
  }
  std::vector<double> sb = bona, sa = att;
  std::sort(sb.begin(), sb.end());
  std::sort(sa.begin(), sa.end());
  if (sb == sa) r.eer = 0.5;
  return r;
}

bool same_rates(const MadRates& got, const OracleRates& want) {
  return got.eer == want.eer && got.apcer_at_bpcer == want.apcer_at_bpcer &&
         got.bpcer_at_apcer == want.bpcer_at_apcer;
}

// All multisets of size n over `alphabet` (non-decreasing index sequences).
void multisets(int n, int k, std::vector<int>& cur, int start,
               std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < k; ++i) {
    cur.push_back(i);
    multisets(n, k, cur, i, out);
    cur.pop_back();
  }
}

Image random_image(int h, int w, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(3, h, w);
  for (double& v : img.values()) v = u(rng);
  return img;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("morphforge_test_eval_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("threshold_at_fmr") {
  std::vector<double> s;
  for (int i = 1; i <= 10; ++i) s.push_back(i / 10.0);
  CHECK(threshold_at_fmr(s, 0.2) == 0.8);
  CHECK(threshold_at_fmr(s, 0.999999) == 0.1);
  const std::vector<double> flat(7, 0.42);
  for (double f : {0.001, 0.3, 0.9}) CHECK(threshold_at_fmr(flat, f) == 0.42);
  CHECK_THROWS_AS(threshold_at_fmr({}, 0.1), DataError);
  CHECK_THROWS_AS(threshold_at_fmr(s, 0.0), ConfigError);
  CHECK_THROWS_AS(threshold_at_fmr(s, 1.0), ConfigError);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(rng() % 15) / 10.0;  // ties likely
    const double fmr = std::uniform_real_distribution<double>(0.001, 0.999)(rng);
    const double tau = threshold_at_fmr(v, fmr);
    auto frac_above = [&](double t) {
      return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x > t; })) /
             n;
    };
    CHECK(frac_above(tau) <= fmr);
    std::vector<double> u = v;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    double gap = 1.0;
    for (std::size_t i = 1; i < u.size(); ++i) gap = std::min(gap, u[i] - u[i - 1]);
    CHECK(frac_above(tau - gap / 2) > fmr);
  }
}

TEST_CASE("mmpmr examples and oracle") {
  ScoreMatrix m{{{0.8, 0.6}, {0.5, 0.9}}};
  CHECK(mmpmr(m, 0.55) == 0.5);
  CHECK(mmpmr(m, -1.0) == 1.0);
  CHECK(mmpmr(m, 2.0) == 0.0);
  CHECK(mmpmr(m, 0.6) == 0.0);  // ties at tau do not match
  CHECK_THROWS_AS(mmpmr(ScoreMatrix{}, 0.5), DataError);
  CHECK_THROWS_AS(mmpmr(ScoreMatrix{{{}}}, 0.5), DataError);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    ScoreMatrix r;
    const int morphs = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < morphs; ++i) {
      std::vector<double> row(1 + rng() % 4);
      for (double& x : row) x = static_cast<double>(rng() % 21) / 20.0;
      r.mated.push_back(row);
    }
    const double tau = static_cast<double>(rng() % 23) / 20.0 - 0.05;
    REQUIRE(mmpmr(r, tau) == mmpmr_oracle(r, tau));
    // Monotone non-increasing in tau.
    double prev = 1.0;
    for (double t = -0.1; t <= 1.1; t += 0.05) {
      const double v = mmpmr(r, t);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("mad_rates examples") {
  const std::vector<double> bona = {0.1, 0.2, 0.3};
  const std::vector<double> att = {0.7, 0.8, 0.9};
  const auto sep = mad_rates(bona, att);
  CHECK(sep.eer == 0.0);
  for (double v : sep.apcer_at_bpcer) CHECK(v == 0.0);
  for (double v : sep.bpcer_at_apcer) CHECK(v == 0.0);
  CHECK_FALSE(sep.degenerate);

  // The enumeration rule reaches APCER = BPCER = 50% at t = 0.4.
  const auto mixed = mad_rates(std::vector<double>{0.1, 0.6}, std::vector<double>{0.9, 0.4});
  CHECK(mixed.eer == 0.5);
  CHECK(mixed.eer_threshold == 0.4);

  const std::vector<double> same = {0.3, 0.5, 0.5};
  const auto deg = mad_rates(same, same);
  CHECK(deg.degenerate);
  CHECK(deg.eer == 0.5);

  CHECK_THROWS_AS(mad_rates({}, att), DataError);

  // Swapping roles and negating scores leaves the EER unchanged (tie-free data).
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> b(1 + rng() % 20), a(1 + rng() % 20);
    for (double& x : b) x = g(rng);
    for (double& x : a) x = g(rng) + 0.8;
    std::vector<double> nb, na;
    for (double x : a) nb.push_back(-x);
    for (double x : b) na.push_back(-x);
    CHECK(mad_rates(b, a).eer == mad_rates(nb, na).eer);
  }
}

TEST_CASE("mad_rates matches enumeration oracle") {
  SUBCASE("random instances") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> b(1 + rng() % 30), a(1 + rng() % 30);
      for (double& x : b) x = static_cast<double>(rng() % 40) / 40.0;
      for (double& x : a) x = static_cast<double>(rng() % 40) / 40.0 + 0.2;
      REQUIRE(same_rates(mad_rates(b, a), mad_oracle(b, a)));
    }
  }
  SUBCASE("exhaustive small multisets") {
    const std::vector<double> alphabet = {0.1, 0.2, 0.3, 0.4};
    std::vector<std::vector<std::vector<int>>> by_size(8);
    for (int n = 1; n < 8; ++n) {
      std::vector<int> cur;
      multisets(n, static_cast<int>(alphabet.size()), cur, 0, by_size[n]);
    }
    long checked = 0;
    for (int nb = 1; nb < 8; ++nb) {
      for (int na = 1; nb + na <= 8; ++na) {
        for (const auto& mb : by_size[nb]) {
          for (const auto& ma : by_size[na]) {
            std::vector<double> b, a;
            for (int i : mb) b.push_back(alphabet[i]);
            for (int i : ma) a.push_back(alphabet[i]);
            REQUIRE(same_rates(mad_rates(b, a), mad_oracle(b, a)));
            ++checked;
          }
        }
      }
    }
    CHECK(checked > 10000);
  }
}

TEST_CASE("fid") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const int d = 4, n = 10000;
  std::vector<std::vector<double>> a(n, std::vector<double>(d)), b = a;
  for (auto& r : a) for (double& x : r) x = g(rng);
  for (auto& r : b) for (double& x : r) x = g(rng) + 1.0;
  const double v = fid(a, b);
  CHECK(std::abs(v - 4.0) / 4.0 < 0.05);
  CHECK(std::abs(fid(a, a)) <= 1e-8);
  CHECK(std::abs(fid(a, b) - fid(b, a)) <= 1e-8);

  // Invariance under a common orthogonal rotation.
  Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(d, d, [&]() { return g(rng); });
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  auto rotate = [&](const std::vector<std::vector<double>>& s) {
    auto out = s;
    for (auto& r : out) {
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(r.data(), d);
      Eigen::VectorXd y = q * x;
      for (int j = 0; j < d; ++j) r[j] = y[j];
    }
    return out;
  };
  CHECK(std::abs(fid(rotate(a), rotate(b)) - v) <= 1e-6);

  // Rank-deficient covariance: eigenvalue clipping keeps the result finite.
  std::vector<std::vector<double>> flat(5, std::vector<double>(d, 0.0));
  for (int i = 0; i < 5; ++i) flat[i][0] = i;
  CHECK(std::isfinite(fid(flat, a)));
  CHECK(fid(flat, flat) == doctest::Approx(0.0).epsilon(1e-8));

  CHECK_THROWS_AS(fid(a, std::vector<std::vector<double>>(3, std::vector<double>(3, 0.0))),
                  StructuralError);
  CHECK_THROWS_AS(fid(a, {{1, 2, 3, 4}}), DataError);
}

TEST_CASE("ssim and psnr") {
  std::mt19937_64 rng(8);
  const Image a = random_image(24, 20, rng, 0.1, 0.9);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isinf(psnr(a, a)));

  Image b = a;
  for (double& v : b.values()) v += (rng() % 2 ? 0.1 : -0.1);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));

  const Image c = random_image(24, 20, rng);
  CHECK(std::abs(ssim(a, c) - ssim(c, a)) <= 1e-12);
  CHECK(ssim(a, c) < ssim(a, b));
  CHECK(ssim(a, c) >= -1.0);
  CHECK(ssim(a, c) <= 1.0);

  // Direct 2-D window oracle for one channel of a small image.
  const Image x = random_image(14, 13, rng), y = random_image(14, 13, rng);
  double wsum = 0.0;
  double kernel[11][11];
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      kernel[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      wsum += kernel[i][j];
    }
  }
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int oy = 0; oy + 11 <= 14; ++oy) {
      for (int ox = 0; ox + 11 <= 13; ++ox) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < 11; ++i) {
          for (int j = 0; j < 11; ++j) {
            const double k = kernel[i][j] / wsum;
            const double u = x.at(c, oy + i, ox + j), v = y.at(c, oy + i, ox + j);
            mx += k * u;
            my += k * v;
            sxx += k * u * u;
            syy += k * v * v;
            sxy += k * u * v;
          }
        }
        const double c1 = 1e-4, c2 = 9e-4;
        total += ((2 * mx * my + c1) * (2 * (sxy - mx * my) + c2)) /
                 ((mx * mx + my * my + c1) * (sxx - mx * mx + syy - my * my + c2));
        ++count;
      }
    }
  }
  CHECK(ssim(x, y) == doctest::Approx(total / count).epsilon(1e-10));

  CHECK_THROWS_AS(ssim(a, c.same_shape(a) ? Image(3, 5, 5) : c), StructuralError);
  CHECK_THROWS_AS(psnr(a, Image(3, 5, 5)), StructuralError);
}

TEST_CASE("report formatting") {
  CHECK(format_fid(40.5) == "40.5");
  CHECK(format_ssim(0.6756) == "0.6756");
  CHECK(format_rate(0.889) == "88.9");
  CHECK(format_psnr(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_fid(std::nullopt) == "n/a");

  ReportTables t;
  t.rows.push_back({"hgfm", 40.5, 0.6756, 18.25, {0.889, 0.5, std::nullopt, 0.0}});
  const auto csv = report_csv(t);
  std::istringstream ss(csv);
  std::string head, row, extra;
  std::getline(ss, head);
  std::getline(ss, row);
  CHECK_FALSE(std::getline(ss, extra));
  CHECK(head == "method,fid,ssim,psnr,mmpmr_A,mmpmr_B,mmpmr_C,mmpmr_D");
  CHECK(row == "hgfm,40.5,0.6756,18.25,88.9,50.0,n/a,0.0");
  CHECK(std::count(row.begin(), row.end(), ',') == 7);

  const auto dir = scratch("report");
  emit_report(dir, ReportTables{});
  CHECK(slurp(dir / "report.csv") == "method,fid,ssim,psnr,mmpmr_A,mmpmr_B,mmpmr_C,mmpmr_D\n");
  CHECK_FALSE(std::filesystem::exists(dir / "mad.csv"));

  t.mad.push_back({"toy/hgfm", mad_rates(std::vector<double>{0.1, 0.6},
                                         std::vector<double>{0.9, 0.4})});
  t.mad.push_back({"toy/missing", std::nullopt});
  emit_report(dir, t);
  const auto first = slurp(dir / "report.md") + slurp(dir / "mad.csv");
  emit_report(dir, t);
  CHECK(first == slurp(dir / "report.md") + slurp(dir / "mad.csv"));
  const auto mad = slurp(dir / "mad.csv");
  CHECK(mad.find("toy/hgfm,50.00,") != std::string::npos);
  CHECK(mad.find("toy/missing,n/a,n/a") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("score files round trip") {
  const auto dir = scratch("scores");
  std::vector<MatedScore> rows = {{"m1", "s1", 0.1 + 0.2}, {"m2", "s3", -0.25}, {"m1", "s2", 1e-17}};
  write_mated_scores(dir / "mated.csv", rows);
  const auto back = read_mated_scores(dir / "mated.csv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].morph_id == rows[i].morph_id);
    CHECK(back[i].subject_id == rows[i].subject_id);
    CHECK(back[i].score == rows[i].score);
  }
  const auto m = to_score_matrix(back);
  REQUIRE(m.mated.size() == 2);
  CHECK(m.mated[0] == std::vector<double>{0.1 + 0.2, 1e-17});

  write_score_list(dir / "list.txt", {0.5, 1.0 / 3.0});
  CHECK(read_score_list(dir / "list.txt") == std::vector<double>{0.5, 1.0 / 3.0});

  std::ofstream(dir / "bad.txt") << "0.5\nabc\n";
  CHECK_THROWS_WITH_AS(read_score_list(dir / "bad.txt"), doctest::Contains(":2:"), DataError);
  CHECK_THROWS_AS(read_score_list(dir / "absent.txt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("toy detectors") {
  std::mt19937_64 rng(17);
  FidFeatures feats(1);
  const Image a = random_image(32, 32, rng);
  const auto fa = feats(a);
  CHECK(fa.size() == static_cast<std::size_t>(kFidFeatureDim));
  CHECK(feats(a) == fa);

  // Smooth gradients vs noisy images: the MAD should separate them.
  auto smooth = [&](double shift) {
    Image img(3, 32, 32);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(c, y, x) = 0.3 + 0.01 * (x + y) / 2 + shift;
    return img;
  };
  std::vector<Image> bona, att;
  for (int i = 0; i < 8; ++i) {
    bona.push_back(smooth(0.02 * i));
    Image n = smooth(0.02 * i);
    for (double& v : n.values()) v = std::clamp(v + (rng() % 2 ? 0.05 : -0.05), 0.0, 1.0);
    att.push_back(n);
  }
  ToyMad mad;
  CHECK_THROWS_AS(mad.score(a), ConfigError);
  mad.train(bona, att);
  const auto rates = mad_rates(mad.score(bona), mad.score(att));
  CHECK(rates.eer == 0.0);
}
