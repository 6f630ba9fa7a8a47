#include "uwdock/optics.hpp"

#include <algorithm>
#include <cmath>

#include "uwdock/errors.hpp"

namespace uwdock {

void CameraModel::validate() const {
  if (width < 16 || height < 16) {
    throw ConfigError("camera: width and height must be >= 16");
  }
  if (!(hfov > 0.0) || !(hfov < kPi)) {
    throw ConfigError("camera: hfov must lie in (0, pi)");
  }
}

void WaterModel::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (beta[i] < 0.0) throw ConfigError("water: beta must be non-negative");
    if (beta_inf[i] < 0.0 || beta_inf[i] > 1.0) {
      throw ConfigError("water: beta_inf must lie in [0, 1]");
    }
  }
  if (k_gen < 0.0 || k_gen > 1.0) {
    throw ConfigError("water: k_gen must lie in [0, 1]");
  }
}

WaterModel WaterModel::jerlov(const std::string& label) {
  // Green-channel betas calibrated so the brightest-pixel detector loses
  // the beacon at ~12 m (IC), ~6 m (5C) and ~4 m (7C); red/blue scaled by
  // fixed ratios (1.5x, 1.2x). See `uwdock calibrate`.
  WaterModel w;
  w.label = label;
  auto from_green = [](double g) { return Vec3{1.5 * g, g, 1.2 * g}; };
  if (label == "IC") {
    w.beta = from_green(0.0274);
    w.beta_inf = {0.08, 0.26, 0.22};
  } else if (label == "5C") {
    w.beta = from_green(0.0626);
    w.beta_inf = {0.10, 0.28, 0.24};
  } else if (label == "7C") {
    w.beta = from_green(0.1016);
    w.beta_inf = {0.11, 0.30, 0.26};
  } else if (label == "clear") {
    w.beta = Vec3::Zero();
    w.beta_inf = Vec3::Zero();
  } else {
    throw ConfigError("water: unknown label '" + label + "'");
  }
  return w;
}

std::optional<Projection> project(const Vec3& world_point,
                                  const VehicleState& auv,
                                  const CameraModel& camera) {
  const Mat3 r_eb = rotation_j1(auv.eta2);
  const Vec3 body = r_eb.transpose() * (world_point - auv.eta1);
  const Vec3 rel = body - camera.mount_translation;
  // Camera frame: z forward (body x), x right (body y), y down (body z).
  const double xc = rel.y();
  const double yc = rel.z();
  const double zc = rel.x();
  if (zc <= 1e-9) return std::nullopt;

  const double f = camera.focal_px();
  Projection p;
  p.u = 0.5 * camera.width + f * xc / zc;
  p.v = 0.5 * camera.height + f * yc / zc;
  p.range = rel.norm();
  return p;
}

Vec3 beacon_world_position(const DockPose& dock) {
  return {dock.position.x(), dock.position.y(), dock.depth};
}

namespace {

/// Smooth lattice value noise in [-1, 1], bilinear with smoothstep easing.
class ValueNoise {
 public:
  ValueNoise(int cells_x, int cells_y, Rng& rng)
      : nx_(cells_x + 1), ny_(cells_y + 1), values_(static_cast<size_t>(nx_) * ny_) {
    for (auto& v : values_) v = rng.uniform(-1.0, 1.0);
  }

  double at(double fx, double fy) const {  // fx, fy in [0, 1]
    const double gx = fx * (nx_ - 1);
    const double gy = fy * (ny_ - 1);
    const int ix = std::min(static_cast<int>(gx), nx_ - 2);
    const int iy = std::min(static_cast<int>(gy), ny_ - 2);
    const double tx = smoothstep(gx - ix);
    const double ty = smoothstep(gy - iy);
    const double v00 = values_[idx(ix, iy)], v10 = values_[idx(ix + 1, iy)];
    const double v01 = values_[idx(ix, iy + 1)], v11 = values_[idx(ix + 1, iy + 1)];
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
  }

 private:
  static double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * nx_ + x; }

  int nx_, ny_;
  std::vector<double> values_;
};

struct GlareEllipse {
  double cx, cy, rx, ry, intensity;
};

}  // namespace

RasterImage render_geometric(const DockPose* dock, const VehicleState& auv,
                             const CameraModel& camera,
                             const SceneParams& scene) {
  RasterImage img(camera.width, camera.height);
  const double bg = scene.background;
  std::fill(img.r.begin(), img.r.end(), 0.5 * bg);
  std::fill(img.g.begin(), img.g.end(), bg);
  std::fill(img.b.begin(), img.b.end(), bg);
  if (dock == nullptr) return img;

  const auto beacon = project(beacon_world_position(*dock), auv, camera);
  if (!beacon) return img;

  // Dim silhouette: the dock face as a camera-facing rectangle around the
  // beacon, scaled by perspective.
  const double f = camera.focal_px();
  const double half_w = f * scene.dock_half_width / beacon->range;
  const double half_h = f * scene.dock_half_height / beacon->range;
  const int x0 = std::max(0, static_cast<int>(std::floor(beacon->u - half_w)));
  const int x1 = std::min(camera.width - 1, static_cast<int>(std::ceil(beacon->u + half_w)));
  const int y0 = std::max(0, static_cast<int>(std::floor(beacon->v - half_h)));
  const int y1 = std::min(camera.height - 1, static_cast<int>(std::ceil(beacon->v + half_h)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const size_t i = img.idx(x, y);
      img.r[i] = std::max(img.r[i], scene.silhouette_level * 0.9);
      img.g[i] = std::max(img.g[i], scene.silhouette_level);
      img.b[i] = std::max(img.b[i], scene.silhouette_level);
    }
  }

  // Beacon blob: white Gaussian falloff, pixel sigma ~ 1/range.
  const double sigma =
      std::max(scene.beacon_min_sigma_px, f * scene.beacon_radius_m / beacon->range);
  const double reach = 4.0 * sigma;
  const int bx0 = std::max(0, static_cast<int>(std::floor(beacon->u - reach)));
  const int bx1 = std::min(camera.width - 1, static_cast<int>(std::ceil(beacon->u + reach)));
  const int by0 = std::max(0, static_cast<int>(std::floor(beacon->v - reach)));
  const int by1 = std::min(camera.height - 1, static_cast<int>(std::ceil(beacon->v + reach)));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      const double dx = (x + 0.5) - beacon->u;
      const double dy = (y + 0.5) - beacon->v;
      // The pixel containing the source saturates: a sub-pixel light keeps
      // its full radiance no matter the range.
      const double a = (std::abs(dx) <= 0.5 && std::abs(dy) <= 0.5)
                           ? 1.0
                           : std::exp(-(dx * dx + dy * dy) * inv2s2);
      const size_t i = img.idx(x, y);
      img.r[i] = std::max(img.r[i], a);
      img.g[i] = std::max(img.g[i], a);
      img.b[i] = std::max(img.b[i], a);
    }
  }
  return img;
}

RasterImage render_styled(const CameraModel& camera, const SceneParams& scene,
                          Rng& rng) {
  RasterImage img(camera.width, camera.height);
  const ValueNoise coarse(6, 6, rng);
  const ValueNoise fine(14, 14, rng);

  std::vector<GlareEllipse> glares;
  if (rng.bernoulli(scene.glare_probability)) {
    const int count = 1 + static_cast<int>(rng.uniform_index(2));
    for (int i = 0; i < count; ++i) {
      GlareEllipse e;
      e.cx = rng.uniform(0.08, 0.92) * camera.width;
      e.cy = rng.uniform(0.03, 0.30) * camera.height;  // near the surface
      e.rx = rng.uniform(0.03, 0.10) * camera.width;
      e.ry = rng.uniform(0.015, 0.05) * camera.height;
      e.intensity = scene.glare_intensity * rng.uniform(0.85, 1.05);
      glares.push_back(e);
    }
  }

  for (int y = 0; y < camera.height; ++y) {
    const double fy = static_cast<double>(y) / (camera.height - 1);
    // Light fades with depth: brighter blue-green at the top.
    const double grade = 1.0 - 0.62 * fy;
    for (int x = 0; x < camera.width; ++x) {
      const double fx = static_cast<double>(x) / (camera.width - 1);
      const double n = 0.06 * coarse.at(fx, fy) + 0.025 * fine.at(fx, fy);
      const size_t i = img.idx(x, y);
      img.r[i] = clamp(0.10 * grade + 0.4 * n, 0.0, 1.0);
      img.g[i] = clamp(0.40 * grade + n, 0.0, 1.0);
      img.b[i] = clamp(0.34 * grade + n, 0.0, 1.0);

      for (const auto& e : glares) {
        const double ex = (x + 0.5 - e.cx) / e.rx;
        const double ey = (y + 0.5 - e.cy) / e.ry;
        const double q = ex * ex + ey * ey;
        if (q < 4.0) {
          const double a = e.intensity * std::exp(-1.2 * q);
          img.r[i] = clamp(std::max(img.r[i], 0.97 * a), 0.0, 1.0);
          img.g[i] = clamp(std::max(img.g[i], a), 0.0, 1.0);
          img.b[i] = clamp(std::max(img.b[i], 0.92 * a), 0.0, 1.0);
        }
      }
    }
  }
  return img;
}

RasterImage render_unattenuated(const DockPose* dock, const VehicleState& auv,
                                const CameraModel& camera,
                                const WaterModel& water,
                                const SceneParams& scene, Rng& rng) {
  const RasterImage geo = render_geometric(dock, auv, camera, scene);
  const RasterImage styled = render_styled(camera, scene, rng);
  RasterImage out(camera.width, camera.height);
  const double kg = water.k_gen;
  const double ks = water.k_style();
  const size_t n = out.r.size();
  for (size_t i = 0; i < n; ++i) {
    out.r[i] = kg * styled.r[i] + ks * geo.r[i];
    out.g[i] = kg * styled.g[i] + ks * geo.g[i];
    out.b[i] = kg * styled.b[i] + ks * geo.b[i];
  }
  return out;
}

RasterImage attenuate(const RasterImage& image, double range,
                      const WaterModel& water) {
  if (range < 0.0) throw ConfigError("attenuate: range must be non-negative");
  RasterImage out(image.width, image.height);
  const Vec3 decay = {std::exp(-water.beta[0] * range),
                      std::exp(-water.beta[1] * range),
                      std::exp(-water.beta[2] * range)};
  const Vec3 veil = {water.beta_inf[0] * (1.0 - decay[0]),
                     water.beta_inf[1] * (1.0 - decay[1]),
                     water.beta_inf[2] * (1.0 - decay[2])};
  const size_t n = image.r.size();
  for (size_t i = 0; i < n; ++i) {
    out.r[i] = clamp(image.r[i] * decay[0] + veil[0], 0.0, 1.0);
    out.g[i] = clamp(image.g[i] * decay[1] + veil[1], 0.0, 1.0);
    out.b[i] = clamp(image.b[i] * decay[2] + veil[2], 0.0, 1.0);
  }
  return out;
}

}  // namespace uwdock
