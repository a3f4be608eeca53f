#include "mloc/cli.hpp"

#include <CLI11.hpp>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/dimest.hpp"
#include "mloc/evalx.hpp"
#include "mloc/io.hpp"
#include "mloc/localize.hpp"
#include "mloc/rng.hpp"

namespace mloc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct GenerateConfig {
  std::string out;
  std::uint64_t seed = 0;
  int landmarks = 12;
  double ambient = 0.1;
  int p = 1024;
  double max_range = 30.0;
  double falloff = 1.0;
  std::string extractor = "random_projection";
  int m = 64;
  std::uint64_t extractor_seed = 0;
  std::string scheme = "grid";
  int nx = 10, ny = 10, n_headings = 5;
  double heading_span = 2.0, heading_center = 0.0;
  int traj_n = 2500;
  double dt = 0.1, speed = 0.8, noise_v = 0.0, noise_w = 0.0;
  double margin = 1.0, row_spacing = 1.5;
  double x_lo = -3.0, x_hi = 3.0, y_lo = -3.0, y_hi = 3.0;
  bool exclude_heading = false;
};

int run_generate(const GenerateConfig& c, bool extractor_seed_given) {
  PoseSpace space;
  space.x_range = {c.x_lo, c.x_hi};
  space.y_range = {c.y_lo, c.y_hi};
  space.include_heading = !c.exclude_heading;
  space.validate();

  const auto world =
      appearance::make_ring_world(derive_seed(c.seed, 1), c.landmarks, 7.0, 12.0, c.ambient);
  appearance::SensorSpec sensor;
  sensor.p = c.p;
  sensor.max_range = c.max_range;
  sensor.falloff = c.falloff;
  appearance::FeatureExtractorSpec extractor;
  extractor.kind = appearance::extractor_kind_from_name(c.extractor);
  extractor.m = c.m;
  extractor.seed = extractor_seed_given ? c.extractor_seed : derive_seed(c.seed, 3);

  appearance::SamplingScheme scheme;
  if (c.scheme == "grid") {
    appearance::GridScheme grid;
    grid.nx = c.nx;
    grid.ny = c.ny;
    grid.n_headings = c.n_headings;
    grid.heading_span = c.heading_span;
    grid.heading_center = c.heading_center;
    scheme = grid;
  } else {
    appearance::TrajectoryScheme traj;
    traj.n = c.traj_n;
    traj.dt = c.dt;
    traj.speed = c.speed;
    traj.noise_v = c.noise_v;
    traj.noise_w = c.noise_w;
    traj.noise_seed = derive_seed(c.seed, 4);
    traj.margin = c.margin;
    traj.row_spacing = c.row_spacing;
    scheme = traj;
  }

  const auto ds =
      appearance::generate_dataset(world, sensor, space, extractor, scheme, derive_seed(c.seed, 2));
  io::save_dataset(ds, c.out);
  std::cout << "generated dataset: n=" << ds.n() << " p=" << ds.p() << " m=" << ds.m()
            << " seed=" << c.seed << "\n"
            << "written to " << c.out << "\n";
  return 0;
}

struct DimestConfig {
  std::string data;
  std::string method = "all";
  int k = 10;
  double threshold = 0.05;
  bool on_pixels = false;
  std::string out;
};

int run_dimest(const DimestConfig& c) {
  const auto ds = io::load_dataset(c.data);
  const Mat& points = c.on_pixels ? ds.images : ds.features;

  std::vector<dimest::DimEstimate> estimates;
  const bool all = c.method == "all";
  if (all || c.method == "global")
    estimates.push_back(dimest::global_isomap_dim(points, c.k, c.threshold));
  if (all || c.method == "local") estimates.push_back(dimest::correlation_dim(points));
  if (all || c.method == "pointwise") estimates.push_back(dimest::mle_dim(points, c.k));

  json report = {{"input", c.on_pixels ? "pixels" : "features"},
                 {"n", ds.n()},
                 {"dim", points.cols()},
                 {"estimates", json::array()}};
  for (const auto& est : estimates) {
    report["estimates"].push_back(est.to_json());
    std::cout << dimest::dim_method_name(est.method) << ": value=" << fmt6(est.value)
              << " rounded=" << est.rounded << "\n";
  }
  if (!c.out.empty()) {
    io::save_text(c.out, report.dump(2) + "\n");
    std::cout << "report written to " << c.out << "\n";
  }
  return 0;
}

struct TrainConfig {
  std::string data;
  std::string out;
  int k = 12;
  double feature_scale = 0.0;
  double bandwidth_factor = 0.4;
  double cutoff_factor = 3.0;
  double grassmann_bandwidth = kPi / 4.0;
  double heading_weight = 1.0;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 0;
  double sigma_v = 0.1;
  double sigma_omega = 0.05;
  double dt = 0.1;
};

int run_train(const TrainConfig& c) {
  const auto ds = io::load_dataset(c.data);
  const auto split = evalx::split_dataset(ds.n(), c.train_fraction, c.split_seed);
  if (static_cast<int>(split.train.size()) <= c.k)
    throw ValidationError("training split has " + std::to_string(split.train.size()) +
                          " points; need more than k=" + std::to_string(c.k));

  localize::TrainOptions options;
  options.k = c.k;
  options.feature_scale = c.feature_scale;
  options.bandwidth_factor = c.bandwidth_factor;
  options.cutoff_factor = c.cutoff_factor;
  options.grassmann_bandwidth = c.grassmann_bandwidth;
  options.heading_weight = c.heading_weight;
  options.dt = c.dt;
  options.odometry = {c.sigma_v, c.sigma_omega};

  const auto maps = localize::build_localization_maps(ds, split.train, split.test, options);
  io::save_model(maps, c.out);

  // Diagnostics come from the container as written, so they describe exactly
  // what eval and track will load.
  const auto reloaded = io::load_model(c.out);
  const auto recon = evalx::reconstruction_errors(reloaded.model, ds, reloaded.test_indices);
  const auto tangents = evalx::tangent_angles(reloaded.model, ds, reloaded.test_indices);

  std::cout << "trained model: n_train=" << split.train.size()
            << " n_test=" << split.test.size() << " k=" << c.k << " q=" << maps.model.q << "\n"
            << "reconstruction median relative error: " << fmt6(recon.median) << " (skipped "
            << recon.skipped << ")\n"
            << "tangent median max angle: " << fmt6(tangents.median_deg) << " deg (skipped "
            << tangents.skipped << ")\n"
            << "model written to " << c.out << "\n";
  return 0;
}

struct EvalConfig {
  std::string model;
  std::string data;
  std::string out_dir = ".";
  bool knr_on_pixels = false;
  int knr_grid = 15;
  double knr_lo = 0.1;
  double knr_hi = 10.0;
};

int run_eval(const EvalConfig& c) {
  const auto maps = io::load_model(c.model);
  const auto ds = io::load_dataset(c.data);
  if (maps.model.m != ds.m() || maps.sensor.p != ds.p())
    throw ValidationError("model/dataset dimension mismatch: model (m=" +
                          std::to_string(maps.model.m) + ", p=" +
                          std::to_string(maps.sensor.p) + ") vs dataset (m=" +
                          std::to_string(ds.m()) + ", p=" + std::to_string(ds.p()) + ")");
  for (const auto& idx : {maps.train_indices, maps.test_indices})
    for (int i : idx)
      if (i < 0 || i >= ds.n())
        throw ValidationError("model split index " + std::to_string(i) +
                              " out of range for dataset of size " + std::to_string(ds.n()));

  evalx::BenchmarkConfig config;
  config.seed = ds.meta.seed;
  config.knr_on_pixels = c.knr_on_pixels;
  config.knr_grid_size = c.knr_grid;
  config.knr_grid_lo = c.knr_lo;
  config.knr_grid_hi = c.knr_hi;
  const auto report = evalx::evaluate_split(ds, maps, config);

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create directory " + c.out_dir + ": " + ec.message());
  const std::string json_path = (fs::path(c.out_dir) / "eval_report.json").string();
  const std::string csv_path = (fs::path(c.out_dir) / "eval_report.csv").string();
  io::save_text(json_path, report.to_json().dump(2) + "\n");
  io::save_text(csv_path, report.to_csv());

  std::cout << "pipeline rrmse: " << fmt6(report.pipeline.rrmse_position) << "\n"
            << "knr rrmse: " << fmt6(report.knr.rrmse_position)
            << " (bandwidth " << fmt6(report.knr_bandwidth) << ")\n"
            << "reconstruction median relative error: " << fmt6(report.reconstruction.median)
            << "\n"
            << "tangent median max angle: " << fmt6(report.tangents.median_deg) << " deg\n"
            << "evaluated " << report.n_evaluated << "/" << report.n_test
            << " held-out points (" << report.n_skipped << " out of support)\n"
            << "reports written to " << json_path << " and " << csv_path << "\n";
  return 0;
}

struct TrackConfig {
  std::string model;
  std::string scenario;
  std::string out_dir = ".";
};

int run_track(const TrackConfig& c) {
  const auto maps = io::load_model(c.model);
  const auto scenario_file = io::load_scenario(c.scenario);

  localize::MotionModel motion;
  motion.dt = scenario_file.dt;
  // The filter should model the odometry quality the scenario actually
  // simulates, not the level the maps were trained with.
  motion.process_noise =
      localize::process_noise_from_odometry(motion, scenario_file.base.odometry_noise);

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create directory " + c.out_dir + ": " + ec.message());

  std::vector<double> filtered_rmse, reckoning_rmse;
  json runs = json::array();
  bool any_truncated = false;
  for (int r = 0; r < scenario_file.repeats; ++r) {
    localize::TrackScenario scenario = scenario_file.base;
    scenario.seed = derive_seed(scenario_file.base.seed, static_cast<std::uint64_t>(r));
    const auto report = localize::track_trajectory(scenario, maps, motion);
    const std::string csv_path =
        (fs::path(c.out_dir) / ("track_run_" + std::to_string(r) + ".csv")).string();
    io::save_text(csv_path, report.to_csv());
    json entry = report.summary_json();
    entry["run"] = r;
    entry["seed"] = scenario.seed;
    runs.push_back(entry);
    filtered_rmse.push_back(report.filtered_rmse_pos);
    reckoning_rmse.push_back(report.dead_reckoning_rmse_pos);
    any_truncated = any_truncated || report.truncated;
    std::cout << "run " << r << ": filtered rmse " << fmt6(report.filtered_rmse_pos)
              << ", dead-reckoning rmse " << fmt6(report.dead_reckoning_rmse_pos)
              << (report.truncated ? " (truncated: " + report.truncation_reason + ")" : "")
              << "\n";
  }

  const double med_filtered = median_of(filtered_rmse);
  const double med_reckoning = median_of(reckoning_rmse);
  const bool improved = med_filtered <= med_reckoning;
  json summary = {
      {"runs", runs},
      {"median_filtered_rmse_pos", med_filtered},
      {"median_dead_reckoning_rmse_pos", med_reckoning},
      {"improvement_factor", med_filtered > 0.0 ? med_reckoning / med_filtered : 0.0},
      {"any_truncated", any_truncated},
      {"variant", localize::filter_variant_name(scenario_file.base.variant)},
  };
  const std::string summary_path = (fs::path(c.out_dir) / "track_summary.json").string();
  io::save_text(summary_path, summary.dump(2) + "\n");
  std::cout << "median filtered rmse: " << fmt6(med_filtered)
            << ", median dead-reckoning rmse: " << fmt6(med_reckoning) << "\n"
            << "summary written to " << summary_path << "\n";
  if (any_truncated) {
    std::cout << "tracking truncated in at least one run\n";
    return 1;
  }
  return improved ? 0 : 1;
}

void add_threads_option(CLI::App* sub, int& threads) {
  sub->add_option("--threads", threads, "worker thread cap (results are thread-count invariant)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_config_option(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path,
                  "flat key=value config file; command-line values take precedence");
}

std::string strip_spaces(const std::string& s) {
  size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

// The bundled CLI11 never reads config files attached to subcommands, so the
// key=value file is expanded into ordinary --key=value tokens before parsing.
// That routes every entry through the normal option validation, makes unknown
// keys fail the parse, and keeps explicit command-line values authoritative.
std::vector<std::string> expand_config_tokens(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  bool found = false;
  for (size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    std::string candidate;
    if (a == "--config") {
      if (i + 1 >= args.size()) return args;  // let the parser report the missing value
      candidate = args[i + 1];
      ++i;
    } else if (a.rfind("--config=", 0) == 0) {
      candidate = a.substr(9);
    } else {
      continue;
    }
    if (found) throw ValidationError("--config given more than once");
    path = candidate;
    found = true;
  }
  if (!found) return args;

  std::ifstream in(path);
  if (!in.good()) throw IoError("cannot read config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = strip_spaces(line);
    if (entry.empty() || entry[0] == '#' || entry[0] == ';') continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("config file " + path + " line " + std::to_string(line_no) +
                            ": expected key=value");
    const std::string key = strip_spaces(entry.substr(0, eq));
    const std::string value = strip_spaces(entry.substr(eq + 1));
    if (key == "config")
      throw ValidationError("config file " + path + " cannot set --config");
    const std::string token = "--" + key;
    bool overridden = false;
    for (const std::string& a : args)
      if (a == token || a.rfind(token + "=", 0) == 0) {
        overridden = true;
        break;
      }
    if (!overridden) args.push_back(token + "=" + value);
  }
  return args;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"appearance-based localization on a learned regression manifold"};
  app.require_subcommand(1);
  int threads = 1;
  std::string config_path;

  GenerateConfig gen;
  auto* generate = app.add_subcommand("generate", "render a labeled synthetic dataset");
  add_config_option(generate, config_path);
  generate->add_option("--out", gen.out, "output dataset directory")->required();
  generate->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  generate->add_option("--landmarks", gen.landmarks, "landmark count")
      ->check(CLI::Range(3, 1000))
      ->capture_default_str();
  generate->add_option("--ambient", gen.ambient, "ambient intensity floor")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  generate->add_option("--p", gen.p, "rays per image")->check(CLI::Range(16, 1 << 20))
      ->capture_default_str();
  generate->add_option("--max-range", gen.max_range, "nominal sensor range")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--falloff", gen.falloff, "distance attenuation exponent")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate
      ->add_option("--extractor", gen.extractor,
                   "feature extractor: identity | random_projection | block_average")
      ->check(CLI::IsMember({"identity", "random_projection", "block_average"}))
      ->capture_default_str();
  generate->add_option("--m", gen.m, "feature dimension")->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* extractor_seed_opt = generate->add_option(
      "--extractor-seed", gen.extractor_seed, "extractor seed (default derived from --seed)");
  generate->add_option("--scheme", gen.scheme, "sampling scheme: grid | trajectory")
      ->check(CLI::IsMember({"grid", "trajectory"}))
      ->capture_default_str();
  generate->add_option("--nx", gen.nx, "grid columns")->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--ny", gen.ny, "grid rows")->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--n-headings", gen.n_headings, "headings per grid node")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate
      ->add_option("--heading-span", gen.heading_span,
                   "sampled heading arc in radians; >= 2*pi covers the full circle")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--heading-center", gen.heading_center, "center of the heading arc")
      ->capture_default_str();
  generate->add_option("--n", gen.traj_n, "trajectory sample count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--dt", gen.dt, "trajectory step seconds")->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--speed", gen.speed, "trajectory forward speed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--traj-noise-v", gen.noise_v, "trajectory speed noise std")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  generate->add_option("--traj-noise-w", gen.noise_w, "trajectory turn-rate noise std")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  generate->add_option("--margin", gen.margin, "serpentine boundary clearance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--row-spacing", gen.row_spacing, "serpentine row pitch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--x-lo", gen.x_lo, "workspace x lower bound")->capture_default_str();
  generate->add_option("--x-hi", gen.x_hi, "workspace x upper bound")->capture_default_str();
  generate->add_option("--y-lo", gen.y_lo, "workspace y lower bound")->capture_default_str();
  generate->add_option("--y-hi", gen.y_hi, "workspace y upper bound")->capture_default_str();
  generate->add_flag("--no-heading", gen.exclude_heading,
                     "2-D pose space (heading fixed; requires --n-headings 1)");
  add_threads_option(generate, threads);
  generate->callback(
      [&gen, extractor_seed_opt] { run_generate(gen, extractor_seed_opt->count() > 0); });

  DimestConfig dim;
  auto* dimest_cmd = app.add_subcommand("dimest", "estimate intrinsic dimension of a dataset");
  add_config_option(dimest_cmd, config_path);
  dimest_cmd->add_option("--data", dim.data, "dataset directory")->required();
  dimest_cmd
      ->add_option("--method", dim.method, "global | local | pointwise | all")
      ->check(CLI::IsMember({"global", "local", "pointwise", "all"}))
      ->capture_default_str();
  dimest_cmd->add_option("--k", dim.k, "neighbor count (global and pointwise)")
      ->check(CLI::Range(3, 1000))
      ->capture_default_str();
  dimest_cmd->add_option("--threshold", dim.threshold, "residual variance threshold (global)")
      ->check(CLI::Range(1e-6, 0.999))
      ->capture_default_str();
  dimest_cmd->add_flag("--on-pixels", dim.on_pixels, "estimate on raw images, not features");
  dimest_cmd->add_option("--out", dim.out, "write the JSON report here");
  add_threads_option(dimest_cmd, threads);
  dimest_cmd->callback([&dim] { run_dimest(dim); });

  TrainConfig train;
  auto* train_cmd = app.add_subcommand("train", "fit the chart, regressors and covariances");
  add_config_option(train_cmd, config_path);
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--out", train.out, "model container path")->required();
  train_cmd->add_option("--k", train.k, "neighbor count")->check(CLI::Range(3, 10000))
      ->capture_default_str();
  train_cmd
      ->add_option("--feature-scale", train.feature_scale,
                   "feature block scale; <= 0 selects 1/sqrt(m)")
      ->capture_default_str();
  train_cmd->add_option("--bandwidth-factor", train.bandwidth_factor, "kernel bandwidth scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--cutoff-factor", train.cutoff_factor, "support cutoff scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd
      ->add_option("--grassmann-bandwidth", train.grassmann_bandwidth,
                   "tangent-agreement kernel bandwidth; <= 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--heading-weight", train.heading_weight,
                        "meters-per-radian heading scale in pose kernels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--train-fraction", train.train_fraction, "training split fraction")
      ->check(CLI::Range(0.01, 0.99))
      ->capture_default_str();
  train_cmd->add_option("--split-seed", train.split_seed, "split seed")->capture_default_str();
  train_cmd->add_option("--sigma-v", train.sigma_v, "odometry speed noise std")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--sigma-omega", train.sigma_omega, "odometry turn-rate noise std")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--dt", train.dt, "filter step seconds")->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_threads_option(train_cmd, threads);
  train_cmd->callback([&train] { run_train(train); });

  EvalConfig eval;
  auto* eval_cmd = app.add_subcommand("eval", "compare the pipeline against the KNR baseline");
  add_config_option(eval_cmd, config_path);
  eval_cmd->add_option("--model", eval.model, "model container path")->required();
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval.out_dir, "report output directory")->capture_default_str();
  eval_cmd->add_flag("--knr-on-pixels", eval.knr_on_pixels,
                     "feed the baseline raw images instead of features");
  eval_cmd->add_option("--knr-grid", eval.knr_grid, "bandwidth grid size")
      ->check(CLI::Range(2, 200))
      ->capture_default_str();
  eval_cmd->add_option("--knr-lo", eval.knr_lo, "grid lower multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--knr-hi", eval.knr_hi, "grid upper multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_threads_option(eval_cmd, threads);
  eval_cmd->callback([&eval] { run_eval(eval); });

  TrackConfig track;
  auto* track_cmd = app.add_subcommand("track", "run the tracking filter on a scenario");
  add_config_option(track_cmd, config_path);
  track_cmd->add_option("--model", track.model, "model container path")->required();
  track_cmd->add_option("--scenario", track.scenario, "scenario JSON path")->required();
  track_cmd->add_option("--out", track.out_dir, "report output directory")
      ->capture_default_str();
  add_threads_option(track_cmd, threads);
  int track_rc = 0;
  track_cmd->callback([&track, &track_rc] { track_rc = run_track(track); });

  try {
    const std::vector<std::string> args = expand_config_tokens(argc, argv);
    std::vector<const char*> ptrs;
    ptrs.reserve(args.size());
    for (const std::string& a : args) ptrs.push_back(a.c_str());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return track_rc;
}

}  // namespace mloc::cli
