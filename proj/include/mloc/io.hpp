#pragma once

#include <string>

#include "mloc/appearance.hpp"
#include "mloc/localize.hpp"

namespace mloc::io {

// Dataset directory layout: manifest.json + images.f32 + features.f32 +
// poses.csv ("id,x,y,heading"). Binaries are row-major little-endian
// float32; the reader validates byte counts against the manifest and the
// world hash against the stored world parameters.
void save_dataset(const appearance::LabeledDataset& ds, const std::string& dir);
appearance::LabeledDataset load_dataset(const std::string& dir);

// Single-file model container: magic + u64 header length + JSON header
// (dims, config echo, split indices, diagnostics, array directory) + packed
// row-major float32 arrays. save(load(path)) writes bit-identical bytes.
void save_model(const localize::LocalizationMaps& maps, const std::string& path);
localize::LocalizationMaps load_model(const std::string& path);

struct ScenarioFile {
  localize::TrackScenario base;
  int repeats = 1;   // seeded reruns; run r uses seed derived from (seed, r)
  double dt = 0.1;   // filter and simulation step
};

// JSON scenario: start pose, step count, controls (explicit list or weave
// parameters), noise levels, seed, repeats, filter variant.
ScenarioFile load_scenario(const std::string& path);

// Atomic text write (temp file + rename).
void save_text(const std::string& path, const std::string& content);
std::string load_text(const std::string& path);

}  // namespace mloc::io
