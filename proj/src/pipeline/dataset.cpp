#include "morphforge/pipeline/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Geometry>

#include "morphforge/core/archive.hpp"
#include "morphforge/core/error.hpp"
#include "morphforge/core/log.hpp"
#include "morphforge/pipeline/config.hpp"
#include "morphforge/pipeline/toy_faces.hpp"
#include "morphforge/warp/face_template.hpp"
#include "morphforge/warp/warp.hpp"

namespace morphforge::pipeline {

using warp::LandmarkSet;
using warp::Point2;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  return out;
}

Point2 mean_of(const LandmarkSet& lm, int first, int last) {
  Point2 c;
  for (int i = first; i <= last; ++i) {
    c.x += lm[i].x;
    c.y += lm[i].y;
  }
  const double n = last - first + 1;
  return {c.x / n, c.y / n};
}

std::uint64_t capture_seed(std::uint64_t seed, int identity, int capture) {
  return seed * 1000003ull + static_cast<std::uint64_t>(identity) * 1009ull +
         static_cast<std::uint64_t>(capture);
}

std::string capture_id(const ToyIdentity& id, int k) { return id.id + "_" + std::to_string(k); }

}  // namespace

std::array<Point2, 5> five_point_anchors(const LandmarkSet& lm) {
  if (lm.size() != warp::kLandmarkCount) throw StructuralError("alignment expects 68 landmarks");
  return {mean_of(lm, 36, 41), mean_of(lm, 42, 47), lm[30], lm[48], lm[54]};
}

AlignedFace align_face(const Image& img, const LandmarkSet& lm, int resolution) {
  require_image(img, "alignment input");
  const auto src = five_point_anchors(lm);
  const auto dst = five_point_anchors(warp::canonical_landmarks(resolution, resolution));
  Eigen::Matrix<double, 2, 5> s, d;
  for (int i = 0; i < 5; ++i) {
    s.col(i) << src[i].x, src[i].y;
    d.col(i) << dst[i].x, dst[i].y;
  }
  const Eigen::Matrix3d t = Eigen::umeyama(s, d, true);
  if (!t.allFinite() || std::abs(t.topLeftCorner<2, 2>().determinant()) < 1e-12) {
    throw DataError("alignment: degenerate landmark anchors");
  }
  const Eigen::Matrix3d inv = t.inverse();

  AlignedFace out;
  out.image = make_image(resolution, resolution);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const double sx = inv(0, 0) * x + inv(0, 1) * y + inv(0, 2);
      const double sy = inv(1, 0) * x + inv(1, 1) * y + inv(1, 2);
      for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = warp::sample_bilinear(img, c, sx, sy);
    }
  }
  clamp01(out.image);
  out.landmarks = lm;
  const double hi = resolution - 1.0;
  for (auto& p : out.landmarks.points) {
    const double x = t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2);
    const double y = t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2);
    p = {std::clamp(x, 0.0, hi), std::clamp(y, 0.0, hi)};
  }
  return out;
}

std::vector<std::string> Dataset::identities() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.identity);
  return {s.begin(), s.end()};
}

const DatasetEntry& Dataset::find(const std::string& image_id) const {
  for (const auto& e : entries) {
    if (e.image_id == image_id) return e;
  }
  throw DataError("unknown image id '" + image_id + "'");
}

Dataset load_dataset(const std::filesystem::path& root) {
  const auto manifest = root / "manifest.csv";
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open dataset manifest " + manifest.string());
  Dataset ds;
  ds.root = root;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || (n == 1 && line.rfind("image_id", 0) == 0)) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) {
      throw DataError(manifest.string() + ":" + std::to_string(n) + ": expected 3 fields");
    }
    ds.entries.push_back({f[0], f[1], f[2]});
  }
  return ds;
}

Dataset generate_toy_dataset(const PipelineConfig& cfg) {
  const std::filesystem::path root = cfg.data_dir;
  std::filesystem::create_directories(root / "images");
  Dataset ds;
  ds.root = root;
  std::string manifest = "image_id,identity,path\n";
  for (int i = 0; i < cfg.identities; ++i) {
    const ToyIdentity id = make_toy_identity(cfg.seed, i);
    for (int k = 0; k < cfg.images_per_identity; ++k) {
      const ToyFace face = render_toy_face(id, cfg.resolution, capture_seed(cfg.seed, i, k));
      const std::string name = capture_id(id, k);
      const std::filesystem::path rel = std::filesystem::path("images") / (name + ".png");
      save_png(root / rel, face.image);
      warp::save_landmarks(warp::sidecar_path(root / rel), face.landmarks);
      ds.entries.push_back({name, id.id, rel});
      manifest += name + "," + id.id + "," + rel.generic_string() + "\n";
    }
  }
  write_file_atomic(root / "manifest.csv", manifest);
  return ds;
}

Dataset open_or_generate(const PipelineConfig& cfg) {
  const std::filesystem::path root = cfg.data_dir;
  if (std::filesystem::exists(root / "manifest.csv")) return load_dataset(root);
  log_info("no dataset manifest in " + root.string() + "; rendering the toy dataset");
  return generate_toy_dataset(cfg);
}

std::vector<FaceSample> load_samples(const Dataset& ds, int resolution) {
  std::vector<FaceSample> out;
  for (const auto& e : ds.entries) {
    const auto path = ds.root / e.image;
    Image img = load_png(path);
    LandmarkSet lm = warp::load_landmarks(warp::sidecar_path(path));
    warp::validate_landmarks(lm, img.width(), img.height());
    AlignedFace a = align_face(img, lm, resolution);
    out.push_back({e.image_id, e.identity, std::move(a.image), std::move(a.landmarks)});
  }
  return out;
}

const FaceSample& find_sample(const std::vector<FaceSample>& samples, const std::string& image_id) {
  for (const auto& s : samples) {
    if (s.image_id == image_id) return s;
  }
  throw DataError("unknown image id '" + image_id + "'");
}

std::vector<FaceSample> toy_samples(int identities, int images_per_identity, int resolution,
                                    std::uint64_t seed) {
  std::vector<FaceSample> out;
  for (int i = 0; i < identities; ++i) {
    const ToyIdentity id = make_toy_identity(seed, i);
    for (int k = 0; k < images_per_identity; ++k) {
      const ToyFace face = render_toy_face(id, resolution, capture_seed(seed, i, k));
      AlignedFace a = align_face(face.image, face.landmarks, resolution);
      out.push_back({capture_id(id, k), id.id, std::move(a.image), std::move(a.landmarks)});
    }
  }
  return out;
}

std::string pair_name(const MorphPair& p) { return p.id1 + "__" + p.id2; }

std::vector<MorphPair> select_pairs(const std::vector<FaceSample>& samples, std::uint64_t seed,
                                    int max_pairs, const std::filesystem::path& protocol) {
  std::map<std::string, std::vector<std::string>> by_identity;
  for (const auto& s : samples) by_identity[s.identity].push_back(s.image_id);
  if (by_identity.size() < 2) {
    throw DataError("pair selection needs at least two identities, found " +
                    std::to_string(by_identity.size()));
  }
  std::vector<MorphPair> pairs;
  if (!protocol.empty()) {
    std::ifstream in(protocol);
    if (!in) throw DataError("cannot open protocol file " + protocol.string());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty() || (n == 1 && line.rfind("image_id", 0) == 0)) continue;
      const auto f = split_csv(line);
      if (f.size() != 2) {
        throw DataError(protocol.string() + ":" + std::to_string(n) + ": expected 2 image ids");
      }
      find_sample(samples, f[0]);
      find_sample(samples, f[1]);
      pairs.push_back({f[0], f[1]});
    }
    return pairs;
  }
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 5);
  for (auto a = by_identity.begin(); a != by_identity.end(); ++a) {
    for (auto b = std::next(a); b != by_identity.end(); ++b) {
      auto pick = [&](std::vector<std::string> ids) {
        std::sort(ids.begin(), ids.end());
        return ids[rng() % ids.size()];
      };
      const std::string id1 = pick(a->second);
      const std::string id2 = pick(b->second);
      pairs.push_back({id1, id2});
    }
  }
  if (max_pairs > 0 && static_cast<int>(pairs.size()) > max_pairs) pairs.resize(max_pairs);
  return pairs;
}

}  // namespace morphforge::pipeline
