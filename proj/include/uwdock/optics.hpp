#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uwdock/guidance.hpp"
#include "uwdock/math_util.hpp"
#include "uwdock/rng.hpp"
#include "uwdock/vehicle.hpp"

namespace uwdock {

/// Pinhole camera with a fixed mount on the AUV body (default: nose mount
/// looking along body +x; image x right = body +y, image y down = body +z).
struct CameraModel {
  int width = 128;
  int height = 128;
  double hfov = 1.4;                     // rad
  Vec3 mount_translation = {0.7, 0.0, 0.0};  // body frame, m

  double focal_px() const { return 0.5 * width / std::tan(0.5 * hfov); }

  void validate() const;
};

/// Fixed-size RGB grid with double samples in [0, 1].
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> r, g, b;

  RasterImage() = default;
  RasterImage(int w, int h)
      : width(w), height(h),
        r(static_cast<size_t>(w) * h, 0.0),
        g(static_cast<size_t>(w) * h, 0.0),
        b(static_cast<size_t>(w) * h, 0.0) {}

  size_t idx(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }

  /// Per-pixel luminance (mean of the three channels).
  double luminance(int x, int y) const {
    const size_t i = idx(x, y);
    return (r[i] + g[i] + b[i]) / 3.0;
  }
};

/// Per-channel attenuation/veiling description of a water type plus the
/// style blend weight. K_style = 1 - K_gen by construction.
struct WaterModel {
  std::string label = "IC";
  Vec3 beta = {0.02, 0.016, 0.019};     // 1/m, [r, g, b]
  Vec3 beta_inf = {0.10, 0.28, 0.24};   // veiling light, [0, 1]
  double k_gen = 0.7;

  double k_style() const { return 1.0 - k_gen; }

  /// Calibrated presets (see the water calibration procedure in README).
  static WaterModel jerlov(const std::string& label);

  void validate() const;
};

/// Appearance constants of the procedural scene (geometric render and the
/// styled water texture standing in for the learned style transfer).
struct SceneParams {
  double beacon_radius_m = 0.12;     // physical beacon radius
  double beacon_min_sigma_px = 0.8;  // blob sigma floor at long range
  double background = 0.02;          // geometric render background level
  double silhouette_level = 0.14;    // dim dock silhouette intensity
  double dock_half_width = 0.45;     // m, silhouette extent
  double dock_half_height = 0.35;    // m
  double glare_probability = 0.30;   // chance of glare distractors per frame
  double glare_intensity = 0.80;     // styled-texture value of glare pixels
};

/// Projection of a world point into the image.
struct Projection {
  double u = 0.0;  // pixel column, continuous, [0, width]
  double v = 0.0;  // pixel row, continuous, [0, height]
  double range = 0.0;  // line-of-sight distance, m
};

/// Pinhole projection of a world point through the camera mount transform.
/// Returns nullopt when the point is at or behind the image plane.
std::optional<Projection> project(const Vec3& world_point,
                                  const VehicleState& auv,
                                  const CameraModel& camera);

/// World position of the beacon (mounted at the dock entrance center).
Vec3 beacon_world_position(const DockPose& dock);

/// Geometric render: dark background, dim dock silhouette, radially
/// decaying beacon blob whose pixel radius scales as 1/range. When
/// dock == nullptr the frame contains background only.
RasterImage render_geometric(const DockPose* dock, const VehicleState& auv,
                             const CameraModel& camera,
                             const SceneParams& scene);

/// Procedural water texture: low-frequency blue-green gradient plus seeded
/// smooth noise and optional surface-glare ellipses.
RasterImage render_styled(const CameraModel& camera, const SceneParams& scene,
                          Rng& rng);

/// Unattenuated underwater frame: k_gen * styled + k_style * geometric.
RasterImage render_unattenuated(const DockPose* dock, const VehicleState& auv,
                                const CameraModel& camera,
                                const WaterModel& water,
                                const SceneParams& scene, Rng& rng);

/// Range attenuation and veiling light per channel:
/// out = in * exp(-beta*d) + beta_inf * (1 - exp(-beta*d)), clamped to [0,1].
RasterImage attenuate(const RasterImage& image, double range,
                      const WaterModel& water);

}  // namespace uwdock
