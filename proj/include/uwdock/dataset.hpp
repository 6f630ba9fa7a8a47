#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwdock/detect.hpp"
#include "uwdock/optics.hpp"
#include "uwdock/rng.hpp"

namespace uwdock {

/// Ground-truth label of one frame. Positions are normalized image
/// coordinates; absent frames carry the centered neutral position.
struct FrameLabel {
  bool present = false;
  double x = 0.5;
  double y = 0.5;
};

/// Where a frame came from, for the dataset manifest.
struct FrameProvenance {
  std::uint64_t seed = 0;
  std::string water = "IC";
  double range = 0.0;          // beacon (or scene) range used in attenuation, m
  std::string augmentation = "none";
};

struct LabeledFrame {
  RasterImage image;
  FrameLabel label;
  FrameProvenance provenance;
};

/// Beacon placement distribution for positive frames: the projected pixel
/// position is uniform over the image rectangle (inverse-projection
/// sampling of the bearing) at a range drawn from [range_min, range_max].
struct PositionSampler {
  double range_min = 2.0;   // m
  double range_max = 15.0;  // m
  double pixel_margin = 1.0;  // keep the beacon center this far from edges
};

/// Generate n frames: exactly floor(n/2) positives with uniformly
/// distributed projected beacon positions, the rest negatives (background
/// plus distractors only). Attenuation is applied at the sampled range.
std::vector<LabeledFrame> generate(int n, const WaterModel& water,
                                   const CameraModel& camera,
                                   const PositionSampler& sampler, Rng& rng,
                                   const SceneParams& scene = SceneParams{});

/// The fixed 10-way augmentation set: 4 translations (+/-5% per axis),
/// 2 rotations (+/-10 deg), horizontal flip, brightness x0.8 and x1.2,
/// and a fixed channel-gain jitter. Position labels are transformed
/// consistently; variants that move the beacon out of frame are relabeled
/// absent.
std::vector<LabeledFrame> augment(const LabeledFrame& frame);

struct SplitRatios {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<LabeledFrame> train;
  std::vector<LabeledFrame> val;
  std::vector<LabeledFrame> test;
  SplitRatios ratios;
};

/// Seeded shuffle and partition. Throws BadRatiosError unless the ratios
/// are non-negative and sum to one. Frames are not augmented here; apply
/// augment_split afterwards so the test split stays pure.
DatasetSplit split(const std::vector<LabeledFrame>& frames,
                   const SplitRatios& ratios, Rng& rng);

/// Expand train and val in place with the 10 augmentation variants per
/// frame; the test split is never touched.
void augment_split(DatasetSplit& dataset);

/// View a frame list as training samples (absent frames target (0, .5, .5)).
/// The frames must outlive the returned samples.
std::vector<TrainSample> to_train_samples(const std::vector<LabeledFrame>& frames);

/// Write frames as PPM files plus a line-delimited manifest
/// (path, label, provenance per record).
void write_frames(const std::vector<LabeledFrame>& frames,
                  const std::string& dir, const std::string& prefix,
                  std::vector<std::string>* manifest_lines);

/// Write a full split to dir/{train,val,test} with dir/manifest.jsonl.
void write_dataset(const DatasetSplit& dataset, const std::string& dir);

/// Load frames back from a directory written by write_dataset or
/// write_frames (reads manifest.jsonl).
std::vector<LabeledFrame> read_dataset(const std::string& dir);

}  // namespace uwdock
