#include "mloc/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

namespace mloc::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kModelMagic[8] = {'M', 'L', 'O', 'C', 'M', 'D', 'L', '1'};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in && !in.eof()) throw IoError("read failed: " + path);
  return buf.str();
}

std::string floats_of_matrix_rowmajor(const Mat& m) {
  std::string bytes;
  bytes.resize(static_cast<size_t>(m.size()) * sizeof(float));
  auto* out = reinterpret_cast<float*>(bytes.data());
  size_t idx = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[idx++] = static_cast<float>(m(r, c));
  return bytes;
}

Mat matrix_from_floats_rowmajor(const std::string& bytes, Eigen::Index rows,
                                Eigen::Index cols, const std::string& what) {
  if (bytes.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols) * sizeof(float))
    throw IoError(what + ": expected " +
                  std::to_string(static_cast<size_t>(rows) * static_cast<size_t>(cols) *
                                 sizeof(float)) +
                  " bytes, found " + std::to_string(bytes.size()));
  Mat m(rows, cols);
  const auto* in = reinterpret_cast<const float*>(bytes.data());
  size_t idx = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<double>(in[idx++]);
  return m;
}

json world_to_json(const appearance::World& world) {
  json landmarks = json::array();
  for (const auto& lm : world.landmarks)
    landmarks.push_back({{"x", lm.position.x()},
                         {"y", lm.position.y()},
                         {"intensity", lm.intensity},
                         {"angular_width", lm.angular_width}});
  return {{"landmarks", landmarks}, {"ambient_level", world.ambient_level}, {"seed", world.seed}};
}

appearance::World world_from_json(const json& j) {
  appearance::World world;
  world.ambient_level = j.at("ambient_level").get<double>();
  world.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& lm : j.at("landmarks")) {
    appearance::Landmark landmark;
    landmark.position = {lm.at("x").get<double>(), lm.at("y").get<double>()};
    landmark.intensity = lm.at("intensity").get<double>();
    landmark.angular_width = lm.at("angular_width").get<double>();
    world.landmarks.push_back(landmark);
  }
  world.validate();
  return world;
}

json sensor_to_json(const appearance::SensorSpec& sensor) {
  return {{"p", sensor.p}, {"max_range", sensor.max_range}, {"falloff", sensor.falloff}};
}

appearance::SensorSpec sensor_from_json(const json& j) {
  appearance::SensorSpec sensor;
  sensor.p = j.at("p").get<int>();
  sensor.max_range = j.at("max_range").get<double>();
  sensor.falloff = j.at("falloff").get<double>();
  sensor.validate();
  return sensor;
}

json space_to_json(const PoseSpace& space) {
  return {{"x_lo", space.x_range.lo},
          {"x_hi", space.x_range.hi},
          {"y_lo", space.y_range.lo},
          {"y_hi", space.y_range.hi},
          {"include_heading", space.include_heading}};
}

PoseSpace space_from_json(const json& j) {
  PoseSpace space;
  space.x_range = {j.at("x_lo").get<double>(), j.at("x_hi").get<double>()};
  space.y_range = {j.at("y_lo").get<double>(), j.at("y_hi").get<double>()};
  space.include_heading = j.at("include_heading").get<bool>();
  space.validate();
  return space;
}

json extractor_to_json(const appearance::FeatureExtractorSpec& spec) {
  return {{"kind", appearance::extractor_kind_name(spec.kind)},
          {"m", spec.m},
          {"seed", spec.seed}};
}

appearance::FeatureExtractorSpec extractor_from_json(const json& j) {
  appearance::FeatureExtractorSpec spec;
  spec.kind = appearance::extractor_kind_from_name(j.at("kind").get<std::string>());
  spec.m = j.at("m").get<int>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

json scheme_to_json(const appearance::SamplingScheme& scheme) {
  if (const auto* grid = std::get_if<appearance::GridScheme>(&scheme)) {
    return {{"kind", "grid"},
            {"nx", grid->nx},
            {"ny", grid->ny},
            {"n_headings", grid->n_headings},
            {"heading_span", grid->heading_span},
            {"heading_center", grid->heading_center}};
  }
  const auto& traj = std::get<appearance::TrajectoryScheme>(scheme);
  return {{"kind", "trajectory"}, {"n", traj.n},
          {"dt", traj.dt},        {"speed", traj.speed},
          {"noise_v", traj.noise_v}, {"noise_w", traj.noise_w},
          {"noise_seed", traj.noise_seed}, {"margin", traj.margin},
          {"row_spacing", traj.row_spacing}};
}

appearance::SamplingScheme scheme_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "grid") {
    appearance::GridScheme grid;
    grid.nx = j.at("nx").get<int>();
    grid.ny = j.at("ny").get<int>();
    grid.n_headings = j.at("n_headings").get<int>();
    grid.heading_span = j.at("heading_span").get<double>();
    grid.heading_center = j.at("heading_center").get<double>();
    return grid;
  }
  if (kind == "trajectory") {
    appearance::TrajectoryScheme traj;
    traj.n = j.at("n").get<int>();
    traj.dt = j.at("dt").get<double>();
    traj.speed = j.at("speed").get<double>();
    traj.noise_v = j.at("noise_v").get<double>();
    traj.noise_w = j.at("noise_w").get<double>();
    traj.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    traj.margin = j.at("margin").get<double>();
    traj.row_spacing = j.at("row_spacing").get<double>();
    return traj;
  }
  throw IoError("manifest scheme.kind: unknown value '" + kind + "'");
}

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw IoError(path + ": " + err.what());
  }
}

}  // namespace

void save_text(const std::string& path, const std::string& content) {
  write_file_atomic(path, content);
}

std::string load_text(const std::string& path) { return read_file(path); }

void save_dataset(const appearance::LabeledDataset& ds, const std::string& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  json manifest = {
      {"format", "dataset-v1"},
      {"n", ds.n()},
      {"p", ds.p()},
      {"m", ds.m()},
      {"seed", ds.meta.seed},
      {"world_hash", ds.meta.world_hash},
      {"scheme", scheme_to_json(ds.meta.scheme)},
      {"extractor", extractor_to_json(ds.meta.extractor)},
      {"world", world_to_json(ds.meta.world)},
      {"sensor", sensor_to_json(ds.meta.sensor)},
      {"space", space_to_json(ds.meta.space)},
  };
  write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  write_file_atomic((fs::path(dir) / "images.f32").string(),
                    floats_of_matrix_rowmajor(ds.images));
  write_file_atomic((fs::path(dir) / "features.f32").string(),
                    floats_of_matrix_rowmajor(ds.features));

  std::ostringstream poses;
  poses << "id,x,y,heading\n";
  for (int i = 0; i < ds.n(); ++i) {
    const Pose& pose = ds.poses[static_cast<size_t>(i)];
    poses << i << ',' << format_double(pose.x) << ',' << format_double(pose.y) << ','
          << format_double(pose.heading) << '\n';
  }
  write_file_atomic((fs::path(dir) / "poses.csv").string(), poses.str());
}

appearance::LabeledDataset load_dataset(const std::string& dir) {
  const json manifest = parse_json_file((fs::path(dir) / "manifest.json").string());
  appearance::LabeledDataset ds;
  try {
    if (manifest.at("format").get<std::string>() != "dataset-v1")
      throw IoError("manifest format: expected dataset-v1");
    const int n = manifest.at("n").get<int>();
    const int p = manifest.at("p").get<int>();
    const int m = manifest.at("m").get<int>();
    if (n < 1 || p < 1 || m < 1) throw IoError("manifest n/p/m: non-positive dimension");
    ds.meta.seed = manifest.at("seed").get<std::uint64_t>();
    ds.meta.world_hash = manifest.at("world_hash").get<std::string>();
    ds.meta.scheme = scheme_from_json(manifest.at("scheme"));
    ds.meta.extractor = extractor_from_json(manifest.at("extractor"));
    ds.meta.world = world_from_json(manifest.at("world"));
    ds.meta.sensor = sensor_from_json(manifest.at("sensor"));
    ds.meta.space = space_from_json(manifest.at("space"));

    if (appearance::world_hash(ds.meta.world) != ds.meta.world_hash)
      throw IoError("manifest world_hash: does not match stored world parameters");

    ds.images = matrix_from_floats_rowmajor(
        read_file((fs::path(dir) / "images.f32").string()), n, p, dir + "/images.f32");
    ds.features = matrix_from_floats_rowmajor(
        read_file((fs::path(dir) / "features.f32").string()), n, m, dir + "/features.f32");

    const std::string poses_text = read_file((fs::path(dir) / "poses.csv").string());
    std::istringstream lines(poses_text);
    std::string line;
    if (!std::getline(lines, line) || line != "id,x,y,heading")
      throw IoError(dir + "/poses.csv: bad header, expected 'id,x,y,heading'");
    ds.poses.reserve(static_cast<size_t>(n));
    int row = 0;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      int id = -1;
      double x = 0.0, y = 0.0, heading = 0.0;
      if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &id, &x, &y, &heading) != 4)
        throw IoError(dir + "/poses.csv: malformed row " + std::to_string(row + 2));
      if (id != row)
        throw IoError(dir + "/poses.csv: id " + std::to_string(id) + " out of order at row " +
                      std::to_string(row + 2));
      ds.poses.push_back(Pose{x, y, heading});
      ++row;
    }
    if (row != n)
      throw IoError(dir + "/poses.csv: expected " + std::to_string(n) + " rows, found " +
                    std::to_string(row));
  } catch (const json::exception& err) {
    throw IoError(dir + "/manifest.json: " + err.what());
  }
  ds.validate();
  return ds;
}

namespace {

struct ArrayWriter {
  json directory = json::array();
  std::string payload;

  void add(const std::string& name, const Mat& m) {
    directory.push_back({{"name", name},
                         {"rows", m.rows()},
                         {"cols", m.cols()},
                         {"count", 1},
                         {"offset", payload.size()}});
    payload += floats_of_matrix_rowmajor(m);
  }

  void add_list(const std::string& name, const std::vector<Mat>& list, Eigen::Index rows,
                Eigen::Index cols) {
    json entry = {{"name", name}, {"rows", rows},      {"cols", cols},
                  {"count", list.size()}, {"offset", payload.size()}};
    directory.push_back(entry);
    for (const Mat& m : list) {
      if (m.rows() != rows || m.cols() != cols)
        throw IoError("save_model: inconsistent shape in array list " + name);
      payload += floats_of_matrix_rowmajor(m);
    }
  }

  void add_vec(const std::string& name, const Vec& v) { add(name, Mat(v)); }
};

struct ArrayReader {
  const json* directory = nullptr;
  const std::string* payload = nullptr;

  const json& find(const std::string& name) const {
    for (const auto& entry : *directory)
      if (entry.at("name").get<std::string>() == name) return entry;
    throw IoError("model container: missing array '" + name + "'");
  }

  std::string slice(size_t offset, size_t bytes, const std::string& name) const {
    if (offset + bytes > payload->size())
      throw IoError("model container: array '" + name + "' exceeds payload bounds");
    return payload->substr(offset, bytes);
  }

  Mat matrix(const std::string& name) const {
    const json& entry = find(name);
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    if (entry.at("count").get<size_t>() != 1)
      throw IoError("model container: array '" + name + "' is a list, expected single");
    const size_t bytes = static_cast<size_t>(rows) * static_cast<size_t>(cols) * sizeof(float);
    return matrix_from_floats_rowmajor(slice(entry.at("offset").get<size_t>(), bytes, name),
                                       rows, cols, name);
  }

  Vec vector(const std::string& name) const {
    const Mat m = matrix(name);
    if (m.cols() != 1) throw IoError("model container: array '" + name + "' is not a vector");
    return m.col(0);
  }

  std::vector<Mat> list(const std::string& name) const {
    const json& entry = find(name);
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto count = entry.at("count").get<size_t>();
    const size_t item_bytes =
        static_cast<size_t>(rows) * static_cast<size_t>(cols) * sizeof(float);
    size_t offset = entry.at("offset").get<size_t>();
    std::vector<Mat> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i, offset += item_bytes)
      out.push_back(matrix_from_floats_rowmajor(slice(offset, item_bytes, name), rows, cols,
                                                name));
    return out;
  }
};

json regressor_header(const jacreg::JacobianRegressor& reg) {
  return {{"kind", reg.kind == jacreg::InputKind::feature_space ? "feature_space"
                                                                : "pose_space"},
          {"d_in", reg.d_in},
          {"d_out", reg.d_out},
          {"grassmann_bandwidth", reg.grassmann_bandwidth},
          {"heading_weight", reg.heading_weight},
          {"n_frames", reg.frames.size()}};
}

void write_regressor(ArrayWriter& writer, const std::string& prefix,
                     const jacreg::JacobianRegressor& reg) {
  writer.add(prefix + ".anchors", reg.anchors);
  writer.add(prefix + ".values", reg.values);
  writer.add_list(prefix + ".jacobians", reg.jacobians, reg.d_out, reg.d_in);
  writer.add_vec(prefix + ".bandwidths", reg.bandwidths);
  if (!reg.frames.empty())
    writer.add_list(prefix + ".frames", reg.frames, reg.frames.front().rows(),
                    reg.frames.front().cols());
}

jacreg::JacobianRegressor read_regressor(const ArrayReader& reader, const json& header,
                                         const std::string& prefix) {
  jacreg::JacobianRegressor reg;
  const std::string kind = header.at("kind").get<std::string>();
  if (kind == "feature_space")
    reg.kind = jacreg::InputKind::feature_space;
  else if (kind == "pose_space")
    reg.kind = jacreg::InputKind::pose_space;
  else
    throw IoError("model container: unknown regressor kind '" + kind + "'");
  reg.d_in = header.at("d_in").get<int>();
  reg.d_out = header.at("d_out").get<int>();
  reg.grassmann_bandwidth = header.at("grassmann_bandwidth").get<double>();
  reg.heading_weight = header.at("heading_weight").get<double>();
  reg.anchors = reader.matrix(prefix + ".anchors");
  reg.values = reader.matrix(prefix + ".values");
  reg.jacobians = reader.list(prefix + ".jacobians");
  reg.bandwidths = reader.vector(prefix + ".bandwidths");
  if (header.at("n_frames").get<size_t>() > 0) reg.frames = reader.list(prefix + ".frames");
  return reg;
}

}  // namespace

void save_model(const localize::LocalizationMaps& maps, const std::string& path) {
  const auto& model = maps.model;
  ArrayWriter writer;
  writer.add("model.z_points", model.z_points);
  writer.add("model.y_points", model.y_points);
  writer.add("model.anchor_feats", model.anchor_feats);
  writer.add_list("model.frames", model.frames, model.m + 3, model.q);
  writer.add_list("model.tangent_to_y", model.tangent_to_y, model.q, model.q);
  writer.add_list("model.y_to_z", model.y_to_z, model.m + 3, model.q);
  writer.add_list("model.feature_bases", model.feature_bases, model.m, model.q);
  writer.add_vec("model.bandwidth_z", model.bandwidth_z);
  writer.add_vec("model.bandwidth_y", model.bandwidth_y);
  write_regressor(writer, "feature_reg", maps.feature_reg);
  write_regressor(writer, "pose_reg", maps.pose_reg);
  writer.add("noise.embedding", maps.noise_embedding);
  writer.add("noise.feature", maps.noise_feature);
  writer.add("noise.pose", maps.noise_pose);
  writer.add("noise.process", Mat(maps.process_noise));

  json header = {
      {"format", "model-container-v1"},
      {"model",
       {{"q", model.q},
        {"m", model.m},
        {"n", model.n},
        {"k", model.k},
        {"feature_scale", model.feature_scale},
        {"cutoff_z", model.cutoff_z},
        {"cutoff_y", model.cutoff_y},
        {"bandwidth_factor", model.options.bandwidth_factor},
        {"cutoff_factor", model.options.cutoff_factor}}},
      {"extractor", extractor_to_json(maps.extractor_spec)},
      {"world", world_to_json(maps.world)},
      {"sensor", sensor_to_json(maps.sensor)},
      {"space", space_to_json(maps.space)},
      {"feature_reg", regressor_header(maps.feature_reg)},
      {"pose_reg", regressor_header(maps.pose_reg)},
      {"train_indices", maps.train_indices},
      {"test_indices", maps.test_indices},
      {"diagnostics", maps.diagnostics},
      {"arrays", writer.directory},
  };
  const std::string header_text = header.dump();

  std::string bytes;
  bytes.append(kModelMagic, sizeof(kModelMagic));
  const std::uint64_t header_size = header_text.size();
  bytes.append(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
  bytes += header_text;
  bytes += writer.payload;
  write_file_atomic(path, bytes);
}

localize::LocalizationMaps load_model(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kModelMagic) + sizeof(std::uint64_t) ||
      bytes.compare(0, sizeof(kModelMagic), kModelMagic, sizeof(kModelMagic)) != 0)
    throw IoError(path + ": not a model container");
  std::uint64_t header_size = 0;
  std::memcpy(&header_size, bytes.data() + sizeof(kModelMagic), sizeof(header_size));
  const size_t header_start = sizeof(kModelMagic) + sizeof(std::uint64_t);
  if (header_start + header_size > bytes.size())
    throw IoError(path + ": truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_size));
  } catch (const json::parse_error& err) {
    throw IoError(path + ": header " + err.what());
  }
  const std::string payload = bytes.substr(header_start + header_size);

  localize::LocalizationMaps maps;
  try {
    if (header.at("format").get<std::string>() != "model-container-v1")
      throw IoError(path + ": unknown container format");
    const json& mh = header.at("model");
    auto& model = maps.model;
    model.q = mh.at("q").get<int>();
    model.m = mh.at("m").get<int>();
    model.n = mh.at("n").get<int>();
    model.k = mh.at("k").get<int>();
    model.feature_scale = mh.at("feature_scale").get<double>();
    model.cutoff_z = mh.at("cutoff_z").get<double>();
    model.cutoff_y = mh.at("cutoff_y").get<double>();
    model.options.bandwidth_factor = mh.at("bandwidth_factor").get<double>();
    model.options.cutoff_factor = mh.at("cutoff_factor").get<double>();

    ArrayReader reader;
    reader.directory = &header.at("arrays");
    reader.payload = &payload;
    model.z_points = reader.matrix("model.z_points");
    model.y_points = reader.matrix("model.y_points");
    model.anchor_feats = reader.matrix("model.anchor_feats");
    model.frames = reader.list("model.frames");
    model.tangent_to_y = reader.list("model.tangent_to_y");
    model.y_to_z = reader.list("model.y_to_z");
    model.feature_bases = reader.list("model.feature_bases");
    model.bandwidth_z = reader.vector("model.bandwidth_z");
    model.bandwidth_y = reader.vector("model.bandwidth_y");

    maps.feature_reg = read_regressor(reader, header.at("feature_reg"), "feature_reg");
    maps.pose_reg = read_regressor(reader, header.at("pose_reg"), "pose_reg");
    maps.noise_embedding = reader.matrix("noise.embedding");
    maps.noise_feature = reader.matrix("noise.feature");
    maps.noise_pose = reader.matrix("noise.pose");
    maps.process_noise = reader.matrix("noise.process");

    maps.extractor_spec = extractor_from_json(header.at("extractor"));
    maps.world = world_from_json(header.at("world"));
    maps.sensor = sensor_from_json(header.at("sensor"));
    maps.space = space_from_json(header.at("space"));
    maps.train_indices = header.at("train_indices").get<std::vector<int>>();
    maps.test_indices = header.at("test_indices").get<std::vector<int>>();
    maps.diagnostics = header.at("diagnostics");
  } catch (const json::exception& err) {
    throw IoError(path + ": header field error: " + err.what());
  }

  const auto& model = maps.model;
  if (model.z_points.rows() != model.m + 3 || model.z_points.cols() != model.n ||
      model.y_points.rows() != model.q || model.y_points.cols() != model.n ||
      static_cast<int>(model.frames.size()) != model.n)
    throw IoError(path + ": array shapes inconsistent with header dims");
  return maps;
}

ScenarioFile load_scenario(const std::string& path) {
  const json j = parse_json_file(path);
  ScenarioFile file;
  try {
    auto& base = file.base;
    const json& start = j.at("start");
    base.start = Pose{start.at("x").get<double>(), start.at("y").get<double>(),
                      start.at("heading").get<double>()}
                     .wrapped();
    base.steps = j.at("steps").get<int>();
    if (base.steps < 1) throw IoError(path + ": steps must be positive");

    const json& controls = j.at("controls");
    const std::string kind = controls.at("kind").get<std::string>();
    if (kind == "weave") {
      base.controls = localize::make_weave_controls(
          base.steps, controls.at("v").get<double>(), controls.at("amplitude").get<double>(),
          controls.at("period_steps").get<double>());
    } else if (kind == "explicit") {
      for (const auto& item : controls.at("items")) {
        if (!item.is_array() || item.size() != 2)
          throw IoError(path + ": explicit control items must be [v, omega] pairs");
        base.controls.push_back({item[0].get<double>(), item[1].get<double>()});
      }
      if (static_cast<int>(base.controls.size()) < base.steps)
        throw IoError(path + ": fewer controls than steps");
    } else {
      throw IoError(path + ": unknown controls.kind '" + kind + "'");
    }

    if (j.contains("odometry_noise")) {
      const json& noise = j.at("odometry_noise");
      base.odometry_noise.sigma_v = noise.at("sigma_v").get<double>();
      base.odometry_noise.sigma_omega = noise.at("sigma_omega").get<double>();
    }
    base.pixel_noise = j.value("pixel_noise", 0.0);
    base.seed = j.value("seed", std::uint64_t{0});
    base.variant = localize::filter_variant_from_name(j.value("variant", "embedding"));
    if (j.contains("initial_cov_diag")) {
      const auto diag = j.at("initial_cov_diag").get<std::vector<double>>();
      if (diag.size() != 3) throw IoError(path + ": initial_cov_diag needs 3 entries");
      base.initial_cov = Eigen::Matrix3d::Zero();
      for (int i = 0; i < 3; ++i) base.initial_cov(i, i) = diag[static_cast<size_t>(i)];
    }
    file.repeats = j.value("repeats", 1);
    if (file.repeats < 1) throw IoError(path + ": repeats must be positive");
    file.dt = j.value("dt", 0.1);
    if (!(file.dt > 0.0)) throw IoError(path + ": dt must be positive");
  } catch (const json::exception& err) {
    throw IoError(path + ": " + err.what());
  }
  return file;
}

}  // namespace mloc::io
