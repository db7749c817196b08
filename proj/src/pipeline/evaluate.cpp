#include "morphforge/pipeline/evaluate.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "morphforge/core/archive.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/eval/detectors.hpp"
#include "morphforge/eval/metrics.hpp"
#include "morphforge/eval/scores.hpp"
#include "morphforge/nn/ops.hpp"
#include "morphforge/pipeline/toy_faces.hpp"
#include "morphforge/pipeline/train.hpp"

namespace morphforge::pipeline {

namespace {

constexpr std::uint64_t kCalibrationStream = 0xCA11B8A7E5EEDull;
const std::array<const char*, 4> kFrsNames = {"A", "B", "C", "D"};

const Image& method_image(const MorphRecord& r, const std::string& method) {
  if (method == "landmark") return r.i_land;
  if (method == "aux") return r.i_aux;
  if (method == "hgfm_stage1") return r.i_m;
  return r.i_final;
}

std::string file_for(const std::string& method) {
  if (method == "landmark") return "landmark.png";
  if (method == "aux") return "aux.png";
  if (method == "hgfm_stage1") return "stage1.png";
  return "final.png";
}

std::vector<double> embedding(const loss::Embedder& frs, const Image& img) {
  nn::NoGradGuard guard;
  const auto v = frs.embed(nn::constant(img)).value();
  return {v.data(), v.data() + v.size()};
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// The capture used to verify a contributor: another capture of the same
// identity if one exists, else the morphed one.
const FaceSample& probe_for(const std::vector<FaceSample>& samples, const std::string& identity,
                            const std::string& used) {
  const FaceSample* fallback = nullptr;
  for (const auto& s : samples) {
    if (s.identity != identity) continue;
    if (s.image_id != used) return s;
    fallback = &s;
  }
  if (!fallback) throw DataError("no bona fide capture of identity '" + identity + "'");
  return *fallback;
}

struct Calibration {
  std::array<std::optional<double>, 4> tau;
};

Calibration calibrate(const MorphModels& m, const std::filesystem::path& scores_dir) {
  Calibration c;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> scores;
    const auto file = scores_dir.empty()
                          ? std::filesystem::path()
                          : scores_dir / ("calibration_" + std::string(kFrsNames[k]) + ".txt");
    if (!file.empty() && std::filesystem::exists(file)) {
      scores = eval::read_score_list(file);
    } else {
      scores = synthetic_impostor_scores(m, k);
    }
    c.tau[k] = eval::threshold_at_fmr(scores, m.cfg.fmr);
  }
  return c;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

std::optional<eval::MadRates> safe_mad(const std::vector<double>& bona,
                                       const std::vector<double>& attack,
                                       const std::string& what) {
  if (bona.empty() || attack.empty()) {
    log_warning("MAD " + what + ": missing scores, reported as n/a");
    return std::nullopt;
  }
  return eval::mad_rates(bona, attack);
}

}  // namespace

MorphSetEntry to_entry(const MorphRecord& r) {
  MorphSetEntry e;
  e.pair = r.pair;
  e.identity1 = r.identity1;
  e.identity2 = r.identity2;
  for (const auto& method : kMethods) e.images[method] = method_image(r, method);
  return e;
}

void write_morphs(const std::filesystem::path& dir, const std::vector<MorphRecord>& records) {
  std::filesystem::create_directories(dir);
  std::string index = "pair,image_id1,image_id2,identity1,identity2\n";
  std::ostringstream timings;
  timings << "pair,stage1_ms,stage2_ms\n";
  for (const auto& r : records) {
    const std::string name = pair_name(r.pair);
    save_record(dir / name, r);
    index += name + "," + r.pair.id1 + "," + r.pair.id2 + "," + r.identity1 + "," + r.identity2 +
             "\n";
    timings << name << "," << r.timings.stage1_ms << "," << r.timings.stage2_ms << "\n";
  }
  write_file_atomic(dir / "index.csv", index);
  write_file_atomic(dir / "timings.csv", timings.str());
}

MorphSet load_morphs(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw DataError("no morph index at " + (dir / "index.csv").string());
  MorphSet out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (++n == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != 5) throw DataError("index.csv:" + std::to_string(n) + ": expected 5 fields");
    MorphSetEntry e{{f[1], f[2]}, f[3], f[4], {}};
    for (const auto& method : kMethods) {
      const auto p = dir / f[0] / file_for(method);
      if (std::filesystem::exists(p)) {
        e.images[method] = load_png(p);
      } else {
        log_warning("missing " + p.string());
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

double similarity(const loss::Embedder& frs, const Image& a, const Image& b) {
  return cosine(embedding(frs, a), embedding(frs, b));
}

std::vector<double> synthetic_impostor_scores(const MorphModels& m, int frs) {
  const auto& cfg = m.cfg;
  std::vector<std::vector<double>> emb;
  for (int i = 0; i < cfg.calibration_identities; ++i) {
    const auto id = make_toy_identity(cfg.seed ^ kCalibrationStream, i);
    const auto face = render_toy_face(id, cfg.resolution, (cfg.seed ^ kCalibrationStream) + i);
    const auto aligned = align_face(face.image, face.landmarks, cfg.resolution);
    emb.push_back(embedding(*m.embedders[frs], aligned.image));
  }
  std::vector<double> scores;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) scores.push_back(cosine(emb[i], emb[j]));
  }
  return scores;
}

eval::ReportTables evaluate(const MorphModels& m, const MorphSet& morphs,
                            const std::vector<FaceSample>& bona_fide,
                            const EvaluationInputs& inputs) {
  eval::ReportTables t;
  const Calibration cal = calibrate(m, inputs.scores_dir);
  const eval::FidFeatures fid_features(m.cfg.seed);
  std::vector<Image> bona_images;
  for (const auto& s : bona_fide) bona_images.push_back(s.image);
  const auto bona_feats = fid_features(bona_images);

  // Toy MAD: trained on bona fide captures against the classical baseline.
  std::vector<Image> landmark_morphs;
  for (const auto& e : morphs) {
    if (auto it = e.images.find("landmark"); it != e.images.end()) {
      landmark_morphs.push_back(it->second);
    }
  }
  eval::ToyMad mad;
  std::vector<double> mad_bona;
  const auto supplied_bona = inputs.scores_dir / "mad_bona_fide.txt";
  const bool supplied_mad = !inputs.scores_dir.empty() && std::filesystem::exists(supplied_bona);
  if (supplied_mad) {
    mad_bona = eval::read_score_list(supplied_bona);
  } else if (!landmark_morphs.empty() && !bona_images.empty()) {
    mad.train(bona_images, landmark_morphs);
    mad_bona = mad.score(bona_images);
  }

  for (const auto& method : kMethods) {
    eval::MethodRow row;
    row.name = method;
    std::vector<Image> images;
    std::vector<const MorphSetEntry*> owners;
    for (const auto& e : morphs) {
      if (auto it = e.images.find(method); it != e.images.end()) {
        images.push_back(it->second);
        owners.push_back(&e);
      }
    }
    if (images.empty()) {
      log_warning("method " + method + ": no morphs, row reported as n/a");
      t.rows.push_back(row);
      t.mad.push_back({(supplied_mad ? "supplied/" : "toy/") + method, std::nullopt});
      continue;
    }
    if (images.size() >= 2 && bona_feats.size() >= 2) {
      row.fid = eval::fid(fid_features(images), bona_feats);
    } else {
      log_warning("method " + method + ": FID needs two morphs and two bona fide images");
    }
    std::vector<double> ssims, psnrs;
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (const auto& id : {owners[i]->pair.id1, owners[i]->pair.id2}) {
        const Image& c = find_sample(bona_fide, id).image;
        ssims.push_back(eval::ssim(images[i], c));
        psnrs.push_back(eval::psnr(images[i], c));
      }
    }
    row.ssim = mean(ssims);
    row.psnr = mean(psnrs);
    for (int k = 0; k < 4; ++k) {
      const auto file = inputs.scores_dir.empty()
                            ? std::filesystem::path()
                            : inputs.scores_dir /
                                  ("mated_" + method + "_" + std::string(kFrsNames[k]) + ".csv");
      eval::ScoreMatrix scores;
      if (!file.empty() && std::filesystem::exists(file)) {
        scores = eval::to_score_matrix(eval::read_mated_scores(file));
      } else {
        const auto& frs = *m.embedders[k];
        for (std::size_t i = 0; i < images.size(); ++i) {
          const auto& e = *owners[i];
          const auto& p1 = probe_for(bona_fide, e.identity1, e.pair.id1);
          const auto& p2 = probe_for(bona_fide, e.identity2, e.pair.id2);
          scores.mated.push_back(
              {similarity(frs, images[i], p1.image), similarity(frs, images[i], p2.image)});
        }
      }
      if (cal.tau[k]) row.mmpmr[k] = eval::mmpmr(scores, *cal.tau[k]);
    }
    t.rows.push_back(row);

    if (supplied_mad) {
      const auto f = inputs.scores_dir / ("mad_" + method + ".txt");
      std::vector<double> attack;
      if (std::filesystem::exists(f)) attack = eval::read_score_list(f);
      t.mad.push_back({"supplied/" + method, safe_mad(mad_bona, attack, method)});
    } else {
      std::vector<double> attack;
      if (mad.trained()) attack = mad.score(images);
      t.mad.push_back({"toy/" + method, safe_mad(mad_bona, attack, method)});
    }
  }
  return t;
}

eval::ReportTables report_from_scores(const PipelineConfig& cfg,
                                      const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("score directory " + dir.string() + " does not exist");
  }
  eval::ReportTables t;
  std::array<std::optional<double>, 4> tau;
  for (int k = 0; k < 4; ++k) {
    const auto f = dir / ("calibration_" + std::string(kFrsNames[k]) + ".txt");
    if (std::filesystem::exists(f)) {
      tau[k] = eval::threshold_at_fmr(eval::read_score_list(f), cfg.fmr);
    } else {
      log_warning("missing " + f.string() + "; FRS " + kFrsNames[k] + " column is n/a");
    }
  }
  std::vector<double> bona;
  if (std::filesystem::exists(dir / "mad_bona_fide.txt")) {
    bona = eval::read_score_list(dir / "mad_bona_fide.txt");
  }
  for (const auto& method : kMethods) {
    eval::MethodRow row;
    row.name = method;
    bool any = false;
    for (int k = 0; k < 4; ++k) {
      const auto f = dir / ("mated_" + method + "_" + std::string(kFrsNames[k]) + ".csv");
      if (!tau[k] || !std::filesystem::exists(f)) continue;
      row.mmpmr[k] = eval::mmpmr(eval::to_score_matrix(eval::read_mated_scores(f)), *tau[k]);
      any = true;
    }
    const auto mf = dir / ("mad_" + method + ".txt");
    const bool has_mad = std::filesystem::exists(mf);
    if (!any && !has_mad) continue;
    t.rows.push_back(row);
    if (has_mad) {
      t.mad.push_back({"supplied/" + method, safe_mad(bona, eval::read_score_list(mf), method)});
    }
  }
  return t;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> v = [] {
    std::vector<AblationVariant> out;
    out.push_back({"full", {}});
    AblationFlags f;
    f.no_geometry = true;
    out.push_back({"no_geometry", f});
    f = {};
    f.single_embedder = true;
    out.push_back({"single_embedder", f});
    f = {};
    f.no_local = true;
    out.push_back({"no_local", f});
    f = {};
    f.no_blending = true;
    out.push_back({"no_blending", f});
    f = {};
    f.poisson_blending = true;
    out.push_back({"poisson_blending", f});
    return out;
  }();
  return v;
}

AblationRun run_ablation(const PipelineConfig& base, const std::vector<FaceSample>& samples,
                         const std::filesystem::path& out_dir) {
  AblationRun run;
  run.tables.title = "Ablation";
  run.tables.key_column = "variant";
  const auto pairs = select_pairs(samples, base.seed, base.max_pairs,
                                  base.protocol.empty() ? std::filesystem::path()
                                                        : std::filesystem::path(base.protocol));
  for (const auto& variant : ablation_variants()) {
    PipelineConfig cfg = base;
    cfg.ablation = variant.flags;
    log_info("ablation: " + variant.name);
    MorphModels models(cfg);
    fit_coder(models, samples);
    std::vector<PairContext> contexts;
    for (const auto& p : pairs) {
      contexts.push_back(
          prepare_pair(models, find_sample(samples, p.id1), find_sample(samples, p.id2)));
    }
    const auto dir = out_dir / variant.name;
    train(models, contexts, {dir, {}});
    std::vector<MorphRecord> records;
    for (const auto& ctx : contexts) records.push_back(run_morph(models, ctx));
    write_morphs(dir / "morphs", records);
    MorphSet set;
    for (const auto& r : records) set.push_back(to_entry(r));
    eval::ReportTables tables = evaluate(models, set, samples);
    eval::emit_report(dir / "report", tables);
    for (auto& row : tables.rows) {
      if (row.name == "hgfm") {
        row.name = variant.name;
        run.tables.rows.push_back(row);
      }
    }
    run.records[variant.name] = std::move(records);
  }
  eval::emit_report(out_dir, run.tables);
  return run;
}

}  // namespace morphforge::pipeline
