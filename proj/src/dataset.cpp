#include "uwdock/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "uwdock/errors.hpp"
#include "uwdock/image_io.hpp"

namespace uwdock {

namespace {

/// Positive frame: place the beacon so it projects to the target pixel at
/// the requested range, with the camera at the world origin pose.
LabeledFrame make_positive(double u, double v, double range,
                           const WaterModel& water, const CameraModel& camera,
                           const SceneParams& scene, std::uint64_t seed) {
  VehicleState auv;  // identity pose at the origin

  const double f = camera.focal_px();
  // Camera-frame ray through the pixel (z forward, x right, y down).
  const double xc = (u - 0.5 * camera.width) / f;
  const double yc = (v - 0.5 * camera.height) / f;
  const double norm = std::sqrt(xc * xc + yc * yc + 1.0);
  const Vec3 dir_cam = {xc / norm, yc / norm, 1.0 / norm};
  // Back to body axes (x forward): body = (cam z, cam x, cam y).
  const Vec3 dir_body = {dir_cam.z(), dir_cam.x(), dir_cam.y()};
  const Vec3 beacon = camera.mount_translation + range * dir_body;

  Rng frame_rng(Rng::derive(seed, {0xbeacULL}));
  DockPose dock;
  dock.position = {beacon.x(), beacon.y()};
  dock.depth = beacon.z();
  // Entrance roughly facing the camera, with heading jitter.
  dock.heading = wrap_pi(std::atan2(beacon.y(), beacon.x()) +
                         frame_rng.uniform(-deg2rad(30.0), deg2rad(30.0)));

  LabeledFrame frame;
  Rng render_rng(Rng::derive(seed, {0x52454e44ULL}));
  frame.image = attenuate(
      render_unattenuated(&dock, auv, camera, water, scene, render_rng), range,
      water);

  const auto proj = project(beacon_world_position(dock), auv, camera);
  frame.label.present = true;
  frame.label.x = proj->u / (camera.width - 1);
  frame.label.y = proj->v / (camera.height - 1);
  frame.provenance = {seed, water.label, range, "none"};
  return frame;
}

LabeledFrame make_negative(double range, const WaterModel& water,
                           const CameraModel& camera, const SceneParams& scene,
                           std::uint64_t seed) {
  VehicleState auv;
  LabeledFrame frame;
  Rng render_rng(Rng::derive(seed, {0x52454e44ULL}));
  frame.image = attenuate(
      render_unattenuated(nullptr, auv, camera, water, scene, render_rng),
      range, water);
  frame.label = {false, 0.5, 0.5};
  frame.provenance = {seed, water.label, range, "none"};
  return frame;
}

}  // namespace

std::vector<LabeledFrame> generate(int n, const WaterModel& water,
                                   const CameraModel& camera,
                                   const PositionSampler& sampler, Rng& rng,
                                   const SceneParams& scene) {
  if (n < 1) throw ConfigError("generate: n must be >= 1");
  camera.validate();
  water.validate();
  if (!(sampler.range_min > 0.0) || sampler.range_max < sampler.range_min) {
    throw ConfigError("generate: bad range interval");
  }

  const int positives = n / 2;
  const std::uint64_t base = rng.next_u64();
  std::vector<LabeledFrame> frames;
  frames.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = Rng::derive(base, {static_cast<std::uint64_t>(i)});
    Rng draw(seed);
    const double range = draw.uniform(sampler.range_min, sampler.range_max);
    if (i < positives) {
      const double u = draw.uniform(sampler.pixel_margin,
                                    camera.width - 1 - sampler.pixel_margin);
      const double v = draw.uniform(sampler.pixel_margin,
                                    camera.height - 1 - sampler.pixel_margin);
      frames.push_back(make_positive(u, v, range, water, camera, scene, seed));
    } else {
      frames.push_back(make_negative(range, water, camera, scene, seed));
    }
  }
  return frames;
}

namespace {

/// Resample with an inverse pixel map (output pixel -> source pixel),
/// bilinear, edge-clamped.
RasterImage warp(const RasterImage& src, auto&& inverse_map) {
  RasterImage out(src.width, src.height);
  auto sample = [&](const std::vector<double>& plane, double sx, double sy) {
    sx = clamp(sx, 0.0, src.width - 1.0);
    sy = clamp(sy, 0.0, src.height - 1.0);
    const int x0 = std::min(static_cast<int>(sx), src.width - 2);
    const int y0 = std::min(static_cast<int>(sy), src.height - 2);
    const double tx = sx - x0, ty = sy - y0;
    const double v00 = plane[src.idx(x0, y0)], v10 = plane[src.idx(x0 + 1, y0)];
    const double v01 = plane[src.idx(x0, y0 + 1)], v11 = plane[src.idx(x0 + 1, y0 + 1)];
    return (v00 * (1 - tx) + v10 * tx) * (1 - ty) +
           (v01 * (1 - tx) + v11 * tx) * ty;
  };
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const auto [sx, sy] = inverse_map(x + 0.0, y + 0.0);
      const size_t i = out.idx(x, y);
      out.r[i] = sample(src.r, sx, sy);
      out.g[i] = sample(src.g, sx, sy);
      out.b[i] = sample(src.b, sx, sy);
    }
  }
  return out;
}

RasterImage scale_image(const RasterImage& src, double kr, double kg, double kb) {
  RasterImage out = src;
  for (auto& v : out.r) v = clamp(v * kr, 0.0, 1.0);
  for (auto& v : out.g) v = clamp(v * kg, 0.0, 1.0);
  for (auto& v : out.b) v = clamp(v * kb, 0.0, 1.0);
  return out;
}

struct LabelXY {
  double x, y;  // pixel coordinates
};

/// One geometric variant: image warp plus the matching label transform.
LabeledFrame geometric_variant(const LabeledFrame& frame, const char* name,
                               auto&& inverse_map, auto&& label_map) {
  LabeledFrame out;
  out.image = warp(frame.image, inverse_map);
  out.provenance = frame.provenance;
  out.provenance.augmentation = name;
  if (!frame.label.present) {
    out.label = frame.label;
    return out;
  }
  const double w1 = frame.image.width - 1.0;
  const double h1 = frame.image.height - 1.0;
  const LabelXY moved = label_map({frame.label.x * w1, frame.label.y * h1});
  const double nx = moved.x / w1;
  const double ny = moved.y / h1;
  if (nx < 0.0 || nx > 1.0 || ny < 0.0 || ny > 1.0) {
    out.label = {false, 0.5, 0.5};  // beacon left the frame
  } else {
    out.label = {true, nx, ny};
  }
  return out;
}

LabeledFrame photometric_variant(const LabeledFrame& frame, const char* name,
                                 double kr, double kg, double kb) {
  LabeledFrame out;
  out.image = scale_image(frame.image, kr, kg, kb);
  out.label = frame.label;
  out.provenance = frame.provenance;
  out.provenance.augmentation = name;
  return out;
}

}  // namespace

std::vector<LabeledFrame> augment(const LabeledFrame& frame) {
  const double w = frame.image.width;
  const double h = frame.image.height;
  const double tx = 0.05 * w;
  const double ty = 0.05 * h;
  const double cx = 0.5 * (w - 1.0);
  const double cy = 0.5 * (h - 1.0);

  auto translate = [&](double dx, double dy, const char* name) {
    return geometric_variant(
        frame, name,
        [=](double x, double y) { return std::pair{x - dx, y - dy}; },
        [=](LabelXY p) { return LabelXY{p.x + dx, p.y + dy}; });
  };
  auto rotate = [&](double angle, const char* name) {
    const double c = std::cos(angle), s = std::sin(angle);
    return geometric_variant(
        frame, name,
        [=](double x, double y) {
          // inverse rotation about the image center
          const double rx = x - cx, ry = y - cy;
          return std::pair{c * rx + s * ry + cx, -s * rx + c * ry + cy};
        },
        [=](LabelXY p) {
          const double rx = p.x - cx, ry = p.y - cy;
          return LabelXY{c * rx - s * ry + cx, s * rx + c * ry + cy};
        });
  };

  std::vector<LabeledFrame> variants;
  variants.reserve(10);
  variants.push_back(translate(tx, 0.0, "translate_x_pos"));
  variants.push_back(translate(-tx, 0.0, "translate_x_neg"));
  variants.push_back(translate(0.0, ty, "translate_y_pos"));
  variants.push_back(translate(0.0, -ty, "translate_y_neg"));
  variants.push_back(rotate(deg2rad(10.0), "rotate_pos"));
  variants.push_back(rotate(deg2rad(-10.0), "rotate_neg"));
  variants.push_back(geometric_variant(
      frame, "hflip",
      [=](double x, double y) { return std::pair{w - 1.0 - x, y}; },
      [=](LabelXY p) { return LabelXY{w - 1.0 - p.x, p.y}; }));
  variants.push_back(photometric_variant(frame, "brightness_down", 0.8, 0.8, 0.8));
  variants.push_back(photometric_variant(frame, "brightness_up", 1.2, 1.2, 1.2));
  variants.push_back(photometric_variant(frame, "channel_jitter", 1.05, 0.95, 1.10));
  return variants;
}

DatasetSplit split(const std::vector<LabeledFrame>& frames,
                   const SplitRatios& ratios, Rng& rng) {
  if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw BadRatiosError("split: ratios must be non-negative and sum to 1");
  }
  std::vector<size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = order.size(); i > 1; --i) {
    const size_t j = rng.uniform_index(i);
    std::swap(order[i - 1], order[j]);
  }

  const auto n = static_cast<double>(frames.size());
  const size_t n_train = static_cast<size_t>(std::llround(n * ratios.train));
  const size_t n_val = static_cast<size_t>(std::llround(n * ratios.val));
  if (n_train + n_val > frames.size()) {
    throw BadRatiosError("split: rounded partition exceeds the frame count");
  }

  DatasetSplit out;
  out.ratios = ratios;
  for (size_t k = 0; k < order.size(); ++k) {
    const LabeledFrame& f = frames[order[k]];
    if (k < n_train) {
      out.train.push_back(f);
    } else if (k < n_train + n_val) {
      out.val.push_back(f);
    } else {
      out.test.push_back(f);
    }
  }
  return out;
}

void augment_split(DatasetSplit& dataset) {
  auto expand = [](std::vector<LabeledFrame>& frames) {
    const size_t original = frames.size();
    frames.reserve(original * 11);
    for (size_t i = 0; i < original; ++i) {
      auto variants = augment(frames[i]);
      for (auto& v : variants) frames.push_back(std::move(v));
    }
  };
  expand(dataset.train);
  expand(dataset.val);
}

std::vector<TrainSample> to_train_samples(const std::vector<LabeledFrame>& frames) {
  std::vector<TrainSample> samples;
  samples.reserve(frames.size());
  for (const auto& f : frames) {
    TrainSample s;
    s.image = &f.image;
    s.target = {f.label.present ? 1.0 : 0.0, f.label.x, f.label.y};
    samples.push_back(s);
  }
  return samples;
}

namespace {

nlohmann::json frame_record(const LabeledFrame& f, const std::string& path) {
  return {{"path", path},
          {"present", f.label.present ? 1 : 0},
          {"x", f.label.x},
          {"y", f.label.y},
          {"seed", f.provenance.seed},
          {"water", f.provenance.water},
          {"range", f.provenance.range},
          {"augmentation", f.provenance.augmentation}};
}

}  // namespace

void write_frames(const std::vector<LabeledFrame>& frames,
                  const std::string& dir, const std::string& prefix,
                  std::vector<std::string>* manifest_lines) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string rel = prefix + "_" + std::to_string(i) + ".ppm";
    write_ppm(frames[i].image, dir + "/" + rel);
    if (manifest_lines != nullptr) {
      manifest_lines->push_back(frame_record(frames[i], prefix + "/" + rel).dump());
    }
  }
}

void write_dataset(const DatasetSplit& dataset, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> manifest;
  write_frames(dataset.train, dir + "/train", "train", &manifest);
  write_frames(dataset.val, dir + "/val", "val", &manifest);
  write_frames(dataset.test, dir + "/test", "test", &manifest);
  std::ofstream out(dir + "/manifest.jsonl");
  if (!out) throw ConfigError("write_dataset: cannot open manifest");
  for (const auto& line : manifest) out << line << "\n";
}

std::vector<LabeledFrame> read_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.jsonl");
  if (!in) throw ConfigError("read_dataset: cannot open " + dir + "/manifest.jsonl");
  std::vector<LabeledFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    LabeledFrame f;
    const std::string rel = j.at("path").get<std::string>();
    // Manifest paths are "<split>/<split>_<i>.ppm" relative to dir, where
    // frames live at dir/<split>/<file>.
    const auto slash = rel.find('/');
    const std::string split_dir = rel.substr(0, slash);
    const std::string file = rel.substr(slash + 1);
    f.image = read_ppm(dir + "/" + split_dir + "/" + file);
    f.label.present = j.at("present").get<int>() != 0;
    f.label.x = j.at("x").get<double>();
    f.label.y = j.at("y").get<double>();
    f.provenance.seed = j.at("seed").get<std::uint64_t>();
    f.provenance.water = j.at("water").get<std::string>();
    f.provenance.range = j.at("range").get<double>();
    f.provenance.augmentation = j.at("augmentation").get<std::string>();
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace uwdock
