#include "uwdock/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "uwdock/errors.hpp"
#include "uwdock/rng.hpp"

namespace uwdock {

Detection brightest_pixel(const RasterImage& image, double threshold) {
  double best = -1.0;
  int best_x = 0, best_y = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double lum = image.luminance(x, y);
      if (lum > best) {  // strict: first maximum in row-major order wins
        best = lum;
        best_x = x;
        best_y = y;
      }
    }
  }
  Detection det;
  if (best >= threshold) {
    det.present = 1.0;
    det.x = image.width > 1 ? static_cast<double>(best_x) / (image.width - 1) : 0.5;
    det.y = image.height > 1 ? static_cast<double>(best_y) / (image.height - 1) : 0.5;
  }
  return det;
}

TinyNet::TinyNet(int in_c, int in_h, int in_w, const std::vector<LayerSpec>& spec)
    : in_c_(in_c), in_h_(in_h), in_w_(in_w), spec_(spec) {
  int c = in_c, h = in_h, w = in_w;
  size_t offset = 0;
  bool flattened = false;
  for (const auto& s : spec) {
    Layer layer;
    layer.kind = s.kind;
    layer.in_c = c;
    layer.in_h = h;
    layer.in_w = w;
    switch (s.kind) {
      case LayerKind::Conv: {
        if (flattened) throw ConfigError("net: conv after dense");
        if (s.kernel % 2 == 0 || s.kernel <= 0) {
          throw ConfigError("net: conv kernel must be odd");
        }
        layer.kernel = s.kernel;
        layer.out_c = s.channels;
        layer.out_h = h;
        layer.out_w = w;
        layer.w_count = static_cast<size_t>(s.channels) * c * s.kernel * s.kernel;
        layer.b_count = static_cast<size_t>(s.channels);
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Sigmoid:
        layer.out_c = c;
        layer.out_h = h;
        layer.out_w = w;
        break;
      case LayerKind::AvgPool: {
        if (s.pool <= 0 || h % s.pool != 0 || w % s.pool != 0) {
          throw ConfigError("net: pool must divide the activation size");
        }
        layer.pool = s.pool;
        layer.out_c = c;
        layer.out_h = h / s.pool;
        layer.out_w = w / s.pool;
        break;
      }
      case LayerKind::Dense: {
        const size_t in_units = static_cast<size_t>(c) * h * w;
        layer.out_c = s.units;
        layer.out_h = 1;
        layer.out_w = 1;
        layer.w_count = in_units * s.units;
        layer.b_count = static_cast<size_t>(s.units);
        flattened = true;
        break;
      }
    }
    layer.w_off = offset;
    offset += layer.w_count;
    layer.b_off = offset;
    offset += layer.b_count;
    layers_.push_back(layer);
    c = layer.out_c;
    h = layer.out_h;
    w = layer.out_w;
  }
  if (c != 3 || h != 1 || w != 1) {
    throw ConfigError("net: output head must be exactly 3 units");
  }
  params_.assign(offset, 0.0);
}

void TinyNet::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& layer : layers_) {
    if (layer.w_count == 0) continue;
    size_t fan_in = 0;
    if (layer.kind == LayerKind::Conv) {
      fan_in = static_cast<size_t>(layer.in_c) * layer.kernel * layer.kernel;
    } else {
      fan_in = static_cast<size_t>(layer.in_c) * layer.in_h * layer.in_w;
    }
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (size_t i = 0; i < layer.w_count; ++i) {
      params_[layer.w_off + i] = rng.normal(0.0, std);
    }
    for (size_t i = 0; i < layer.b_count; ++i) params_[layer.b_off + i] = 0.0;
  }
}

Tensor TinyNet::to_input(const RasterImage& image) const {
  if (in_c_ != 3 || image.width != in_w_ || image.height != in_h_) {
    throw ShapeMismatchError("net: image dims do not match input spec");
  }
  Tensor t(3, in_h_, in_w_);
  const size_t plane = static_cast<size_t>(in_h_) * in_w_;
  std::copy(image.r.begin(), image.r.end(), t.v.begin());
  std::copy(image.g.begin(), image.g.end(), t.v.begin() + plane);
  std::copy(image.b.begin(), image.b.end(), t.v.begin() + 2 * plane);
  return t;
}

namespace {

void conv_forward(const Tensor& in, Tensor& out, const double* w,
                  const double* b, int kernel) {
  const int half = kernel / 2;
  for (int oc = 0; oc < out.c; ++oc) {
    const double bias = b[oc];
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        double acc = bias;
        for (int ic = 0; ic < in.c; ++ic) {
          const double* wk =
              w + ((static_cast<size_t>(oc) * in.c + ic) * kernel) * kernel;
          for (int ky = 0; ky < kernel; ++ky) {
            const int sy = y + ky - half;
            if (sy < 0 || sy >= in.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int sx = x + kx - half;
              if (sx < 0 || sx >= in.w) continue;
              acc += wk[ky * kernel + kx] * in.at(ic, sy, sx);
            }
          }
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
}

void conv_backward(const Tensor& in, const Tensor& d_out, Tensor& d_in,
                   const double* w, double* dw, double* db, int kernel) {
  const int half = kernel / 2;
  for (int oc = 0; oc < d_out.c; ++oc) {
    double bias_grad = 0.0;
    for (int y = 0; y < d_out.h; ++y) {
      for (int x = 0; x < d_out.w; ++x) {
        const double g = d_out.at(oc, y, x);
        if (g == 0.0) continue;
        bias_grad += g;
        for (int ic = 0; ic < in.c; ++ic) {
          const size_t wbase =
              ((static_cast<size_t>(oc) * in.c + ic) * kernel) * kernel;
          for (int ky = 0; ky < kernel; ++ky) {
            const int sy = y + ky - half;
            if (sy < 0 || sy >= in.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int sx = x + kx - half;
              if (sx < 0 || sx >= in.w) continue;
              dw[wbase + ky * kernel + kx] += g * in.at(ic, sy, sx);
              d_in.at(ic, sy, sx) += g * w[wbase + ky * kernel + kx];
            }
          }
        }
      }
    }
    db[oc] += bias_grad;
  }
}

}  // namespace

std::array<double, 3> TinyNet::forward_cached(const Tensor& input,
                                              Cache& cache) const {
  cache.acts.clear();
  cache.acts.reserve(layers_.size() + 1);
  cache.acts.push_back(input);
  for (const auto& layer : layers_) {
    const Tensor& in = cache.acts.back();
    Tensor out(layer.out_c, layer.out_h, layer.out_w);
    switch (layer.kind) {
      case LayerKind::Conv:
        conv_forward(in, out, params_.data() + layer.w_off,
                     params_.data() + layer.b_off, layer.kernel);
        break;
      case LayerKind::ReLU:
        for (size_t i = 0; i < in.size(); ++i) out.v[i] = std::max(0.0, in.v[i]);
        break;
      case LayerKind::Sigmoid:
        for (size_t i = 0; i < in.size(); ++i) {
          out.v[i] = 1.0 / (1.0 + std::exp(-in.v[i]));
        }
        break;
      case LayerKind::AvgPool: {
        const int p = layer.pool;
        const double inv = 1.0 / (p * p);
        for (int c = 0; c < out.c; ++c) {
          for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
              double acc = 0.0;
              for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                  acc += in.at(c, y * p + dy, x * p + dx);
                }
              }
              out.at(c, y, x) = acc * inv;
            }
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const size_t n_in = in.size();
        const double* w = params_.data() + layer.w_off;
        const double* b = params_.data() + layer.b_off;
        for (int u = 0; u < layer.out_c; ++u) {
          double acc = b[u];
          const double* row = w + static_cast<size_t>(u) * n_in;
          for (size_t i = 0; i < n_in; ++i) acc += row[i] * in.v[i];
          out.v[u] = acc;
        }
        break;
      }
    }
    cache.acts.push_back(std::move(out));
  }
  const Tensor& head = cache.acts.back();
  return {head.v[0], head.v[1], head.v[2]};
}

std::array<double, 3> TinyNet::forward_raw(const Tensor& input) const {
  Cache cache;
  return forward_cached(input, cache);
}

Detection TinyNet::forward(const RasterImage& image) const {
  const auto out = forward_raw(to_input(image));
  return {out[0], out[1], out[2]};
}

void TinyNet::backward(const Cache& cache, const std::array<double, 3>& d_out,
                       std::vector<double>& grad) const {
  if (grad.size() != params_.size()) {
    throw ConfigError("net: gradient buffer size mismatch");
  }
  Tensor delta(3, 1, 1);
  delta.v = {d_out[0], d_out[1], d_out[2]};
  for (size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const Tensor& in = cache.acts[li];
    const Tensor& out = cache.acts[li + 1];
    Tensor d_in(layer.in_c, layer.in_h, layer.in_w);
    switch (layer.kind) {
      case LayerKind::Conv:
        conv_backward(in, delta, d_in, params_.data() + layer.w_off,
                      grad.data() + layer.w_off, grad.data() + layer.b_off,
                      layer.kernel);
        break;
      case LayerKind::ReLU:
        for (size_t i = 0; i < in.size(); ++i) {
          d_in.v[i] = in.v[i] > 0.0 ? delta.v[i] : 0.0;
        }
        break;
      case LayerKind::Sigmoid:
        for (size_t i = 0; i < in.size(); ++i) {
          d_in.v[i] = delta.v[i] * out.v[i] * (1.0 - out.v[i]);
        }
        break;
      case LayerKind::AvgPool: {
        const int p = layer.pool;
        const double inv = 1.0 / (p * p);
        for (int c = 0; c < out.c; ++c) {
          for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
              const double g = delta.at(c, y, x) * inv;
              for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                  d_in.at(c, y * p + dy, x * p + dx) = g;
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const size_t n_in = in.size();
        const double* w = params_.data() + layer.w_off;
        double* dw = grad.data() + layer.w_off;
        double* db = grad.data() + layer.b_off;
        for (int u = 0; u < layer.out_c; ++u) {
          const double g = delta.v[u];
          db[u] += g;
          const double* row = w + static_cast<size_t>(u) * n_in;
          double* drow = dw + static_cast<size_t>(u) * n_in;
          for (size_t i = 0; i < n_in; ++i) {
            drow[i] += g * in.v[i];
            d_in.v[i] += g * row[i];
          }
        }
        break;
      }
    }
    delta = std::move(d_in);
  }
}

TinyNet TinyNet::make_teacher(int in_h, int in_w) {
  TinyNet net(3, in_h, in_w,
              {LayerSpec::avg_pool(4), LayerSpec::conv(8), LayerSpec::relu(),
               LayerSpec::avg_pool(2), LayerSpec::conv(16), LayerSpec::relu(),
               LayerSpec::avg_pool(2), LayerSpec::dense(32), LayerSpec::relu(),
               LayerSpec::dense(3), LayerSpec::sigmoid()});
  return net;
}

TinyNet TinyNet::make_student(int in_h, int in_w) {
  // The extra pool matches the teacher's spatial resolution and keeps the
  // student's dense head a quarter of the teacher's parameter count.
  TinyNet net(3, in_h, in_w,
              {LayerSpec::avg_pool(4), LayerSpec::conv(8), LayerSpec::relu(),
               LayerSpec::avg_pool(2), LayerSpec::avg_pool(2),
               LayerSpec::dense(16), LayerSpec::relu(), LayerSpec::dense(3),
               LayerSpec::sigmoid()});
  return net;
}

namespace {

double norm_value(const std::array<double, 3>& a, const std::array<double, 3>& b,
                  LossNorm norm) {
  if (norm == LossNorm::L1) {
    return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
  }
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

double distill_sample_loss(const std::array<double, 3>& student_out,
                           const std::array<double, 3>* teacher_out,
                           const std::array<double, 3>& truth, double v,
                           LossNorm norm) {
  const double base = norm_value(truth, student_out, norm);
  double teacher_term = 0.0;
  if (teacher_out != nullptr) {
    const double teacher_err = norm_value(truth, *teacher_out, norm);
    if (base > teacher_err) teacher_term = base;
  }
  return base + v * teacher_term;
}

double distill_loss(const std::vector<std::array<double, 3>>& student_out,
                    const std::vector<std::array<double, 3>>& teacher_out,
                    const std::vector<std::array<double, 3>>& truth, double v,
                    LossNorm norm) {
  if (student_out.size() != truth.size() ||
      (!teacher_out.empty() && teacher_out.size() != truth.size())) {
    throw ConfigError("distill_loss: batch size mismatch");
  }
  if (truth.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const std::array<double, 3>* t =
        teacher_out.empty() ? nullptr : &teacher_out[i];
    acc += distill_sample_loss(student_out[i], t, truth[i], v, norm);
  }
  return acc / static_cast<double>(truth.size());
}

std::array<double, 3> distill_sample_grad(
    const std::array<double, 3>& student_out,
    const std::array<double, 3>* teacher_out,
    const std::array<double, 3>& truth, double v, LossNorm norm) {
  const double base = norm_value(truth, student_out, norm);
  double scale = 1.0;
  if (teacher_out != nullptr) {
    const double teacher_err = norm_value(truth, *teacher_out, norm);
    if (base > teacher_err) scale = 1.0 + v;
  }
  std::array<double, 3> g = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    const double diff = student_out[i] - truth[i];
    if (norm == LossNorm::L1) {
      g[i] = scale * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
    } else {
      g[i] = base > 0.0 ? scale * diff / base : 0.0;
    }
  }
  return g;
}

void TrainConfig::validate() const {
  if (v < 0.0) throw ConfigError("train: v must be non-negative");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
}

namespace {

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  double position_l1 = 0.0;
};

EvalStats evaluate(const TinyNet& net, const std::vector<TrainSample>& split,
                   const TrainConfig& cfg, const TinyNet* teacher) {
  EvalStats stats;
  if (split.empty()) return stats;
  size_t correct = 0;
  size_t positives = 0;
  double pos_err = 0.0;
  for (const auto& sample : split) {
    const Tensor in = net.to_input(*sample.image);
    const auto out = net.forward_raw(in);
    std::array<double, 3> tout{};
    const std::array<double, 3>* tptr = nullptr;
    if (teacher != nullptr) {
      tout = teacher->forward_raw(teacher->to_input(*sample.image));
      tptr = &tout;
    }
    stats.loss += distill_sample_loss(out, tptr, sample.target, cfg.v, cfg.norm);
    const bool pred = out[0] >= 0.5;
    const bool truth = sample.target[0] >= 0.5;
    correct += pred == truth ? 1 : 0;
    if (truth) {
      ++positives;
      pos_err += 0.5 * (std::abs(out[1] - sample.target[1]) +
                        std::abs(out[2] - sample.target[2]));
    }
  }
  const double n = static_cast<double>(split.size());
  stats.loss /= n;
  stats.accuracy = static_cast<double>(correct) / n;
  stats.position_l1 = positives > 0 ? pos_err / static_cast<double>(positives) : 0.0;
  return stats;
}

}  // namespace

TrainResult train(TinyNet& net, const std::vector<TrainSample>& train_split,
                  const std::vector<TrainSample>& val_split,
                  const TrainConfig& config, const TinyNet* teacher) {
  config.validate();
  if (train_split.empty() || val_split.empty()) {
    throw ConfigError("train: train and val splits must be non-empty");
  }

  Rng rng(Rng::derive(config.seed, {0x7261696eULL}));
  std::vector<size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), 0);

  // Teacher outputs are fixed during training; compute them once.
  std::vector<std::array<double, 3>> teacher_out;
  if (teacher != nullptr) {
    teacher_out.reserve(train_split.size());
    for (const auto& sample : train_split) {
      teacher_out.push_back(
          teacher->forward_raw(teacher->to_input(*sample.image)));
    }
  }

  TrainResult result;
  std::vector<double> grad(net.param_count(), 0.0);
  TinyNet::Cache cache;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Seeded Fisher-Yates shuffle.
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t k = start; k < end; ++k) {
        const auto& sample = train_split[order[k]];
        const Tensor in = net.to_input(*sample.image);
        const auto out = net.forward_cached(in, cache);
        const std::array<double, 3>* tptr =
            teacher ? &teacher_out[order[k]] : nullptr;
        batch_loss +=
            distill_sample_loss(out, tptr, sample.target, config.v, config.norm);
        auto d_out = distill_sample_grad(out, tptr, sample.target, config.v,
                                         config.norm);
        net.backward(cache, d_out, grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw NonFiniteLossError("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      }
      auto& params = net.params();
      for (size_t i = 0; i < params.size(); ++i) {
        params[i] -= config.learning_rate * grad[i] * inv;
      }
      epoch_loss += batch_loss;
      ++batches;
    }

    EpochStats stats;
    stats.train_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
    const EvalStats val = evaluate(net, val_split, config, teacher);
    stats.val_loss = val.loss;
    stats.val_accuracy = val.accuracy;
    stats.val_position_l1 = val.position_l1;
    result.curves.push_back(stats);
  }
  return result;
}

namespace {

constexpr char kWeightsMagic[8] = {'U', 'W', 'D', 'N', 'E', 'T', '0', '1'};

nlohmann::json layer_spec_to_json(const std::vector<LayerSpec>& spec) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : spec) {
    nlohmann::json j;
    switch (s.kind) {
      case LayerKind::Conv:
        j = {{"kind", "conv"}, {"channels", s.channels}, {"kernel", s.kernel}};
        break;
      case LayerKind::ReLU: j = {{"kind", "relu"}}; break;
      case LayerKind::AvgPool: j = {{"kind", "avg_pool"}, {"pool", s.pool}}; break;
      case LayerKind::Dense: j = {{"kind", "dense"}, {"units", s.units}}; break;
      case LayerKind::Sigmoid: j = {{"kind", "sigmoid"}}; break;
    }
    arr.push_back(j);
  }
  return arr;
}

std::vector<LayerSpec> layer_spec_from_json(const nlohmann::json& arr) {
  std::vector<LayerSpec> spec;
  for (const auto& j : arr) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv") {
      spec.push_back(LayerSpec::conv(j.at("channels").get<int>(),
                                     j.value("kernel", 3)));
    } else if (kind == "relu") {
      spec.push_back(LayerSpec::relu());
    } else if (kind == "avg_pool") {
      spec.push_back(LayerSpec::avg_pool(j.at("pool").get<int>()));
    } else if (kind == "dense") {
      spec.push_back(LayerSpec::dense(j.at("units").get<int>()));
    } else if (kind == "sigmoid") {
      spec.push_back(LayerSpec::sigmoid());
    } else {
      throw ConfigError("weights: unknown layer kind '" + kind + "'");
    }
  }
  return spec;
}

}  // namespace

void save_weights(const TinyNet& net, const std::string& path,
                  const std::string& meta_json) {
  nlohmann::json header;
  header["input"] = {net.input_channels(), net.input_height(), net.input_width()};
  header["layers"] = layer_spec_to_json(net.spec());
  header["param_count"] = net.param_count();
  header["meta"] = nlohmann::json::parse(meta_json);
  const std::string encoded = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("weights: cannot open " + path);
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(encoded.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(encoded.data(), static_cast<std::streamsize>(encoded.size()));
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.param_count() * sizeof(double)));
}

TinyNet load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("weights: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
    throw ConfigError("weights: bad magic in " + path);
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string encoded(len, '\0');
  in.read(encoded.data(), len);
  if (!in) throw ConfigError("weights: truncated header in " + path);
  const nlohmann::json header = nlohmann::json::parse(encoded);

  const auto input = header.at("input");
  TinyNet net(input[0].get<int>(), input[1].get<int>(), input[2].get<int>(),
              layer_spec_from_json(header.at("layers")));
  if (net.param_count() != header.at("param_count").get<size_t>()) {
    throw ConfigError("weights: parameter count mismatch in " + path);
  }
  in.read(reinterpret_cast<char*>(net.params().data()),
          static_cast<std::streamsize>(net.param_count() * sizeof(double)));
  if (!in) throw ConfigError("weights: truncated parameters in " + path);
  return net;
}

void write_curves_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("curves: cannot open " + path);
  out << "epoch,train_loss,val_loss,val_accuracy,val_position_l1\n";
  for (size_t i = 0; i < result.curves.size(); ++i) {
    const auto& s = result.curves[i];
    out << i << "," << s.train_loss << "," << s.val_loss << ","
        << s.val_accuracy << "," << s.val_position_l1 << "\n";
  }
}

}  // namespace uwdock
