#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "uwdock/dataset.hpp"
#include "uwdock/errors.hpp"
#include "uwdock/image_io.hpp"
#include "uwdock/scenario.hpp"
#include "uwdock/sim.hpp"

namespace {

using namespace uwdock;

ScenarioConfig scenario_from_flags(const std::string& scenario_file) {
  if (scenario_file.empty()) return ScenarioConfig{};
  return load_scenario(scenario_file);
}

/// Build the mixed-water training corpus used by the `train` subcommand:
/// equal thirds of IC/5C/7C frames with positive ranges capped near each
/// water's visibility so presence labels stay learnable.
std::vector<LabeledFrame> synth_corpus(int n, const CameraModel& camera,
                                       std::uint64_t seed) {
  const struct {
    const char* label;
    double max_range;
  } waters[] = {{"IC", 14.0}, {"5C", 8.0}, {"7C", 5.5}};
  std::vector<LabeledFrame> frames;
  int produced = 0;
  for (int wi = 0; wi < 3; ++wi) {
    const int share = (n - produced) / (3 - wi);
    produced += share;
    Rng rng(Rng::derive(seed, {static_cast<std::uint64_t>(wi)}));
    PositionSampler sampler;
    sampler.range_min = 2.0;
    sampler.range_max = waters[wi].max_range;
    auto part = generate(share, WaterModel::jerlov(waters[wi].label), camera,
                         sampler, rng);
    for (auto& f : part) frames.push_back(std::move(f));
  }
  return frames;
}

int cmd_episode(const std::string& scenario_file, std::uint64_t seed,
                const std::string& out_dir, const std::string& nn_weights,
                bool dump_frames) {
  ScenarioConfig cfg = scenario_from_flags(scenario_file);
  std::filesystem::create_directories(out_dir);

  TinyNet net;
  EpisodeOptions opts;
  opts.trajectory_path = out_dir + "/trajectory.jsonl";
  if (dump_frames) opts.frames_dir = out_dir + "/frames";
  std::string weights = !nn_weights.empty() ? nn_weights : cfg.nn_weights;
  if (cfg.detector == DetectorKind::NN) {
    if (weights.empty()) {
      std::cerr << "episode: NN detector needs --nn-weights\n";
      return 2;
    }
    net = load_weights(weights);
    opts.nn = &net;
  }

  const EpisodeResult r = run_episode(cfg, seed, opts);
  nlohmann::json j = {{"success", r.success},
                      {"attempts", r.attempts},
                      {"retries", r.retries_used},
                      {"termination", r.termination},
                      {"duration_s", r.duration_s},
                      {"cte_mean", r.cte_mean},
                      {"cte_max", r.cte_max},
                      {"cte_terminal_mean", r.cte_terminal_mean},
                      {"min_lateral_miss", r.min_lateral_miss},
                      {"seed", r.seed}};
  std::ofstream(out_dir + "/episode.json") << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return r.success ? 0 : 1;
}

int cmd_bench(const std::string& preset, const std::string& matrix_file,
              std::uint64_t base_seed, const std::string& out_dir, int jobs,
              const std::string& nn_weights) {
  std::vector<ScenarioConfig> matrix;
  if (!matrix_file.empty()) {
    std::ifstream in(matrix_file);
    if (!in) throw ConfigError("bench: cannot open " + matrix_file);
    nlohmann::json j;
    in >> j;
    for (const auto& entry : j.at("scenarios")) {
      matrix.push_back(load_scenario(entry.get<std::string>()));
    }
  } else {
    matrix = preset_matrix(preset);
  }

  TinyNet net;
  const TinyNet* nn = nullptr;
  bool needs_nn = false;
  for (const auto& cell : matrix) needs_nn |= cell.detector == DetectorKind::NN;
  if (needs_nn) {
    if (nn_weights.empty()) {
      std::cerr << "bench: matrix contains NN cells, pass --nn-weights\n";
      return 2;
    }
    net = load_weights(nn_weights);
    nn = &net;
  }

  std::filesystem::create_directories(out_dir);
  const BenchReport report = run_bench(matrix, base_seed, jobs, nn, &std::cout);
  write_bench_csv(report, out_dir + "/results.csv");
  write_bench_jsonl(report, out_dir + "/episodes.jsonl");
  std::cout << "wrote " << out_dir << "/results.csv\n";
  return 0;
}

int cmd_calibrate(double target, const std::string& out_file) {
  const CameraModel camera;
  const SceneParams scene;
  const ScenarioConfig defaults;
  const WaterModel calibrated = calibrate_water(
      target, camera, scene, defaults.bp_threshold, WaterModel::jerlov("IC"));
  nlohmann::json j = {
      {"target_range_m", target},
      {"beta", {calibrated.beta[0], calibrated.beta[1], calibrated.beta[2]}},
      {"beta_inf",
       {calibrated.beta_inf[0], calibrated.beta_inf[1], calibrated.beta_inf[2]}}};
  std::cout << j.dump(2) << "\n";
  if (!out_file.empty()) std::ofstream(out_file) << j.dump(2) << "\n";
  return 0;
}

int cmd_dataset(int n, const std::string& water_label, std::uint64_t seed,
                const std::string& out_dir) {
  const CameraModel camera;
  Rng rng(seed);
  auto frames = generate(n, WaterModel::jerlov(water_label), camera,
                         PositionSampler{}, rng);
  Rng split_rng(Rng::derive(seed, {0x5eedULL}));
  DatasetSplit ds = split(frames, SplitRatios{}, split_rng);
  augment_split(ds);
  write_dataset(ds, out_dir);
  std::cout << "train " << ds.train.size() << ", val " << ds.val.size()
            << ", test " << ds.test.size() << " -> " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& role, const std::string& dataset_dir,
              int synthetic_n, std::uint64_t seed, int epochs, double lr,
              double v, const std::string& teacher_weights,
              const std::string& out_file, const std::string& curves_file) {
  const CameraModel camera;
  std::vector<LabeledFrame> frames;
  if (!dataset_dir.empty()) {
    frames = read_dataset(dataset_dir);
  } else {
    frames = synth_corpus(synthetic_n, camera, Rng::derive(seed, {0xda7aULL}));
  }
  Rng split_rng(Rng::derive(seed, {0x5eedULL}));
  DatasetSplit ds = split(frames, SplitRatios{}, split_rng);

  const auto train_samples = to_train_samples(ds.train);
  const auto val_samples = to_train_samples(ds.val);

  TinyNet net = role == "teacher"
                    ? TinyNet::make_teacher(camera.height, camera.width)
                    : TinyNet::make_student(camera.height, camera.width);
  net.init_weights(Rng::derive(seed, {0x1a17ULL}));

  TinyNet teacher;
  const TinyNet* teacher_ptr = nullptr;
  if (!teacher_weights.empty()) {
    teacher = load_weights(teacher_weights);
    teacher_ptr = &teacher;
  }

  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.v = v;
  const TrainResult result = train(net, train_samples, val_samples, cfg, teacher_ptr);

  nlohmann::json meta = {{"role", role},
                         {"seed", seed},
                         {"epochs", epochs},
                         {"learning_rate", lr},
                         {"v", v},
                         {"distilled", teacher_ptr != nullptr}};
  save_weights(net, out_file, meta.dump());
  if (!curves_file.empty()) write_curves_csv(result, curves_file);

  const auto& last = result.curves.back();
  std::cout << "params " << net.param_count() << ", val_loss " << last.val_loss
            << ", val_acc " << last.val_accuracy << ", val_pos_l1 "
            << last.val_position_l1 << "\n";
  return 0;
}

int cmd_render(const std::string& water_label, double dist, std::uint64_t seed,
               const std::string& out_file) {
  const CameraModel camera;
  const SceneParams scene;
  const WaterModel water = WaterModel::jerlov(water_label);
  VehicleState auv;
  auv.eta1 = {0.0, 0.0, 2.0};
  DockPose dock;
  dock.position = {camera.mount_translation.x() + dist, 0.0};
  dock.depth = 2.0;
  dock.heading = kPi;
  Rng rng(seed);
  const RasterImage frame = attenuate(
      render_unattenuated(&dock, auv, camera, water, scene, rng), dist, water);
  write_ppm(frame, out_file);
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uwdock: underwater docking simulator and benchmark"};
  app.require_subcommand(1);

  // episode
  std::string scenario_file, out_dir = "out", nn_weights;
  std::uint64_t seed = 0;
  bool dump_frames = false;
  auto* episode = app.add_subcommand("episode", "run one docking episode");
  episode->add_option("--scenario", scenario_file, "scenario JSON file");
  episode->add_option("--seed", seed, "episode seed");
  episode->add_option("--out", out_dir, "output directory");
  episode->add_option("--nn-weights", nn_weights, "weights for the NN detector");
  episode->add_flag("--frames", dump_frames, "dump camera frames as PPM");

  // bench
  std::string preset = "all", matrix_file;
  std::uint64_t base_seed = 42;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  auto* bench = app.add_subcommand("bench", "run a scenario matrix");
  bench->add_option("--preset", preset, "preset matrix: t1|t2|t3|all");
  bench->add_option("--matrix", matrix_file, "JSON listing scenario files");
  bench->add_option("--base-seed", base_seed, "base seed");
  bench->add_option("--out", out_dir, "output directory");
  bench->add_option("--jobs", jobs, "worker threads");
  bench->add_option("--nn-weights", nn_weights, "weights for NN cells");

  // calibrate
  double target_range = 6.0;
  std::string calib_out;
  auto* calibrate = app.add_subcommand("calibrate", "calibrate water attenuation");
  calibrate->add_option("--target-range", target_range, "BP detection range, m")
      ->required();
  calibrate->add_option("--out", calib_out, "write calibrated water JSON");

  // dataset
  int n_frames = 1000;
  std::string water_label = "IC";
  auto* dataset = app.add_subcommand("dataset", "generate a labeled dataset");
  dataset->add_option("--n", n_frames, "frame count before augmentation");
  dataset->add_option("--water", water_label, "water label: IC|5C|7C|clear");
  dataset->add_option("--seed", seed, "generation seed");
  dataset->add_option("--out", out_dir, "dataset directory");

  // train
  std::string role = "teacher", dataset_dir, teacher_weights,
              weights_out = "weights.bin", curves_file;
  int synthetic_n = 600, epochs = 60;
  double lr = 1e-3, v = 0.5;
  auto* train_cmd = app.add_subcommand("train", "train a detector");
  train_cmd->add_option("--role", role, "teacher|student");
  train_cmd->add_option("--dataset", dataset_dir, "dataset directory (PPM+manifest)");
  train_cmd->add_option("--synthetic", synthetic_n,
                        "generate this many frames in-memory instead");
  train_cmd->add_option("--seed", seed, "training seed");
  train_cmd->add_option("--epochs", epochs, "epochs");
  train_cmd->add_option("--lr", lr, "learning rate");
  train_cmd->add_option("--v", v, "teacher-term weight");
  train_cmd->add_option("--teacher", teacher_weights, "teacher weights (distill)");
  train_cmd->add_option("--out", weights_out, "output weights file");
  train_cmd->add_option("--curves", curves_file, "loss curves CSV");

  // render
  double dist = 6.0;
  std::string render_out = "frame.ppm";
  auto* render = app.add_subcommand("render", "render one beacon frame");
  render->add_option("--water", water_label, "water label");
  render->add_option("--dist", dist, "beacon range, m");
  render->add_option("--seed", seed, "render seed");
  render->add_option("--out", render_out, "output PPM");

  CLI11_PARSE(app, argc, argv);

  try {
    if (episode->parsed()) {
      return cmd_episode(scenario_file, seed, out_dir, nn_weights, dump_frames);
    }
    if (bench->parsed()) {
      return cmd_bench(preset, matrix_file, base_seed, out_dir, jobs, nn_weights);
    }
    if (calibrate->parsed()) return cmd_calibrate(target_range, calib_out);
    if (dataset->parsed()) {
      return cmd_dataset(n_frames, water_label, seed, out_dir);
    }
    if (train_cmd->parsed()) {
      return cmd_train(role, dataset_dir, synthetic_n, seed, epochs, lr, v,
                       teacher_weights, weights_out, curves_file);
    }
    if (render->parsed()) {
      return cmd_render(water_label, dist, seed, render_out);
    }
  } catch (const uwdock::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
