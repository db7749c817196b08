#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "morphforge/core/image.hpp"
#include "morphforge/warp/landmarks.hpp"

namespace morphforge::pipeline {

struct PipelineConfig;

/// Eye centres, nose tip and mouth corners.
std::array<warp::Point2, 5> five_point_anchors(const warp::LandmarkSet& lm);

struct AlignedFace {
  Image image;
  warp::LandmarkSet landmarks;
};

/// Least-squares similarity transform (rotation, uniform scale, shift) taking
/// the five anchors onto those of the canonical template at `resolution`,
/// applied by inverse bilinear sampling. Landmarks are mapped forward and
/// clamped to the frame.
AlignedFace align_face(const Image& img, const warp::LandmarkSet& lm, int resolution);

struct DatasetEntry {
  std::string image_id;
  std::string identity;
  std::filesystem::path image;  // relative to the dataset root
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;

  /// Sorted, unique.
  std::vector<std::string> identities() const;
  const DatasetEntry& find(const std::string& image_id) const;
};

/// manifest.csv: `image_id,identity,path`, with a header line.
Dataset load_dataset(const std::filesystem::path& root);

/// Renders cfg.identities x cfg.images_per_identity toy captures into
/// cfg.data_dir with landmark sidecars and a manifest.
Dataset generate_toy_dataset(const PipelineConfig& cfg);

/// Loads the dataset at cfg.data_dir, generating the toy set when no
/// manifest exists.
Dataset open_or_generate(const PipelineConfig& cfg);

struct FaceSample {
  std::string image_id;
  std::string identity;
  Image image;
  warp::LandmarkSet landmarks;
};

/// Loads every image with its sidecar landmarks and aligns it.
std::vector<FaceSample> load_samples(const Dataset& ds, int resolution);
const FaceSample& find_sample(const std::vector<FaceSample>& samples, const std::string& image_id);

/// In-memory toy captures, aligned, without touching the disk.
std::vector<FaceSample> toy_samples(int identities, int images_per_identity, int resolution,
                                    std::uint64_t seed);

struct MorphPair {
  std::string id1;  // image ids
  std::string id2;

  friend bool operator==(const MorphPair&, const MorphPair&) = default;
};

std::string pair_name(const MorphPair& p);

/// Protocol file given: its rows verbatim (CSV `image_id1,image_id2`).
/// Otherwise every identity combination (a < b) in identity order, each
/// represented by one capture per identity drawn with `seed`, truncated to
/// max_pairs when > 0. DataError with fewer than two identities.
std::vector<MorphPair> select_pairs(const std::vector<FaceSample>& samples, std::uint64_t seed,
                                    int max_pairs, const std::filesystem::path& protocol = {});

}  // namespace morphforge::pipeline
