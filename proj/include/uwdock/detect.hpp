#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uwdock/optics.hpp"

namespace uwdock {

/// Dock-present probability plus normalized image-frame position
/// (origin top-left, x right, y down), all in [0, 1].
struct Detection {
  double present = 0.0;
  double x = 0.5;
  double y = 0.5;
};

/// Classical baseline: per-pixel luminance argmax. When the maximum
/// luminance reaches the threshold the detection carries the argmax
/// position (ties broken by row-major scan order, coordinates normalized
/// by dimension - 1); otherwise present = 0 at the centered neutral
/// position (0.5, 0.5).
Detection brightest_pixel(const RasterImage& image, double threshold);

enum class LayerKind { Conv, ReLU, AvgPool, Dense, Sigmoid };

/// One entry of a network layer specification; shapes are resolved at
/// construction time from the input dimensions.
struct LayerSpec {
  LayerKind kind;
  int channels = 0;  // Conv: output channels
  int kernel = 3;    // Conv: square kernel size (odd, 'same' padding)
  int pool = 2;      // AvgPool: kernel = stride
  int units = 0;     // Dense: output units

  static LayerSpec conv(int out_channels, int kernel = 3) {
    return {LayerKind::Conv, out_channels, kernel, 0, 0};
  }
  static LayerSpec relu() { return {LayerKind::ReLU, 0, 0, 0, 0}; }
  static LayerSpec avg_pool(int p) { return {LayerKind::AvgPool, 0, 0, p, 0}; }
  static LayerSpec dense(int units) { return {LayerKind::Dense, 0, 0, 0, units}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid, 0, 0, 0, 0}; }
};

/// Channel-major activation buffer used inside the network.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}

  size_t size() const { return v.size(); }
  double& at(int ci, int yi, int xi) {
    return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
  }
  double at(int ci, int yi, int xi) const {
    return v[(static_cast<size_t>(ci) * h + yi) * w + xi];
  }
};

/// Minimal convolutional detector with explicit backpropagation.
///
/// The output head is three sigmoid units (presence, x, y). Weights live in
/// one flat parameter vector so gradient checking, SGD and serialization
/// all address the same storage.
class TinyNet {
 public:
  TinyNet() = default;
  TinyNet(int in_c, int in_h, int in_w, const std::vector<LayerSpec>& spec);

  /// He-normal initialization (biases zero).
  void init_weights(std::uint64_t seed);

  /// Forward pass; throws ShapeMismatchError when the image dimensions do
  /// not match the input spec.
  Detection forward(const RasterImage& image) const;

  std::array<double, 3> forward_raw(const Tensor& input) const;

  struct Cache {
    std::vector<Tensor> acts;  // acts[0] = input, acts[i+1] = layer i output
  };
  std::array<double, 3> forward_cached(const Tensor& input, Cache& cache) const;

  /// Accumulate dLoss/dParams into grad (sized param_count()) given the
  /// gradient at the output head.
  void backward(const Cache& cache, const std::array<double, 3>& d_out,
                std::vector<double>& grad) const;

  Tensor to_input(const RasterImage& image) const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t param_count() const { return params_.size(); }

  int input_channels() const { return in_c_; }
  int input_height() const { return in_h_; }
  int input_width() const { return in_w_; }
  const std::vector<LayerSpec>& spec() const { return spec_; }

  /// Reference architectures (input may be any size divisible by 16).
  static TinyNet make_teacher(int in_h, int in_w);
  static TinyNet make_student(int in_h, int in_w);

 private:
  struct Layer {
    LayerKind kind;
    int in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0, out_h = 0, out_w = 0;
    int kernel = 0;
    int pool = 0;
    size_t w_off = 0;  // weights, then biases, inside params_
    size_t w_count = 0;
    size_t b_off = 0;
    size_t b_count = 0;
  };

  int in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<LayerSpec> spec_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

enum class LossNorm { L1, L2 };

/// Teacher-bounded distillation loss for one sample:
/// base = ||y - student||, teacher term = base when the student's error
/// exceeds the teacher's and 0 otherwise, loss = base + v * teacher_term.
/// Without a teacher the loss reduces to the supervised norm.
double distill_sample_loss(const std::array<double, 3>& student_out,
                           const std::array<double, 3>* teacher_out,
                           const std::array<double, 3>& truth, double v,
                           LossNorm norm = LossNorm::L1);

/// Batch loss: mean of the per-sample losses.
double distill_loss(const std::vector<std::array<double, 3>>& student_out,
                    const std::vector<std::array<double, 3>>& teacher_out,
                    const std::vector<std::array<double, 3>>& truth, double v,
                    LossNorm norm = LossNorm::L1);

/// Gradient of distill_sample_loss with respect to the student output.
std::array<double, 3> distill_sample_grad(
    const std::array<double, 3>& student_out,
    const std::array<double, 3>* teacher_out,
    const std::array<double, 3>& truth, double v, LossNorm norm = LossNorm::L1);

/// One training example: image plus target (present, x, y); absent frames
/// carry the centered neutral position target.
struct TrainSample {
  const RasterImage* image = nullptr;
  std::array<double, 3> target = {0.0, 0.5, 0.5};
};

struct TrainConfig {
  double v = 0.5;          // teacher-term weight
  int batch_size = 8;
  double learning_rate = 1e-3;
  int epochs = 60;
  std::uint64_t seed = 0;
  LossNorm norm = LossNorm::L1;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;  // presence thresholded at 0.5
  double val_position_l1 = 0.0;  // mean per-axis error on positive frames
};

struct TrainResult {
  std::vector<EpochStats> curves;
};

/// Minibatch SGD on the distillation loss (supervised when teacher is
/// null). Deterministic for a given seed; throws NonFiniteLossError with
/// diagnostics if the loss diverges.
TrainResult train(TinyNet& net, const std::vector<TrainSample>& train_split,
                  const std::vector<TrainSample>& val_split,
                  const TrainConfig& config, const TinyNet* teacher = nullptr);

/// Weight files: magic, JSON header (layer spec, input dims, metadata),
/// then the flat parameter vector as little-endian doubles.
void save_weights(const TinyNet& net, const std::string& path,
                  const std::string& meta_json = "{}");
TinyNet load_weights(const std::string& path);

/// Write per-epoch curves as CSV (epoch, train_loss, val_loss, val_accuracy,
/// val_position_l1).
void write_curves_csv(const TrainResult& result, const std::string& path);

}  // namespace uwdock
