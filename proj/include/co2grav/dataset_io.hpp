#pragma once

#include "co2grav/grid.hpp"
#include "co2grav/metrics.hpp"
#include "co2grav/synth_geo.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace co2grav {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kNormalizationTag = "per_map_zscore_population_std";

/// Per-map z-score with population std. Throws NormalizationError when the
/// std is <= 1e-12 (a constant map signals a degenerate sample).
GravityMap zscore(const GravityMap& map);

/// Rounds every value to the nearest float32, the precision of the payloads.
std::vector<double> quantize_f32(std::span<const double> values);
VolumeField quantize_f32(const VolumeField& field);
GravityMap quantize_f32(const GravityMap& map);

// ---------------------------------------------------------------------------
// Payloads: little-endian IEEE-754 float32, no header, x-fastest.

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);
std::string crc32_hex(std::uint32_t crc);

/// Writes the values as float32 and returns the CRC-32 of the bytes written.
std::uint32_t write_f32(const std::filesystem::path& file, std::span<const double> values);

/// Reads a payload of exactly `count` floats. Throws DimensionError on a size
/// mismatch (including truncation) and ChecksumError when the CRC differs.
std::vector<double> read_f32(const std::filesystem::path& file, std::size_t count,
                             std::uint32_t expected_crc);

nlohmann::json grid_to_json(const ReservoirGrid& grid);
/// Geometry from `j`; the mask comes from `mask` (all-inside when empty).
ReservoirGrid grid_from_json(const nlohmann::json& j, std::vector<std::uint8_t> mask = {});
nlohmann::json sensors_to_json(const SensorGrid& sensors);
SensorGrid sensors_from_json(const nlohmann::json& j);
nlohmann::json geostats_to_json(const GeoStatsParams& p);
GeoStatsParams geostats_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const InjectionScenario& s);
InjectionScenario scenario_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Field directories: <dir>/manifest.json plus one payload per field.
//
// manifest.json = {
//   "format_version": 1,
//   "id": "...",
//   "grid": {...}, "sensors": {...},            (when relevant)
//   "fields": { name: {"file", "kind", "units", "dims", "crc32"} },
//   ... record metadata ...
// }

/// Writes a volume payload `<dir>/<name>.f32` and returns its field entry.
nlohmann::json write_volume(const std::filesystem::path& dir, const std::string& name,
                            const VolumeField& field);
/// Reads a volume described by `entry` (relative to `dir`) onto `grid`.
VolumeField read_volume(const std::filesystem::path& dir, const nlohmann::json& entry,
                        GridPtr grid);
nlohmann::json write_map(const std::filesystem::path& dir, const std::string& name,
                         const GravityMap& map);
GravityMap read_map(const std::filesystem::path& dir, const nlohmann::json& entry,
                    SensorGridPtr sensors);

/// Parses <dir>/manifest.json; throws FormatError on a missing file, bad JSON
/// or an unsupported format version.
nlohmann::json read_manifest(const std::filesystem::path& dir);
void write_json(const std::filesystem::path& file, const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Samples

struct SampleRecord {
  std::string id;
  std::size_t realization = 0;
  double time_step = 0.0;  // years
  std::uint64_t seed = 0;
  double corr_length = 0.0;  // cells
  GeoStatsParams geostats;
  GravityMap gravity_raw;
  GravityMap gravity_norm;
  VolumeField density_change;
  VolumeField saturation;
  VolumeField plume_mask;
};

/// Builds a record from its physical fields: gravity_norm = zscore(raw),
/// plume_mask = (saturation > 0). Values are rounded to float32 first so the
/// record round-trips through the file format unchanged.
SampleRecord make_record(std::string id, std::size_t realization, double time_step,
                         std::uint64_t seed, double corr_length, const GeoStatsParams& geostats,
                         const GravityMap& gravity_raw, const VolumeField& density,
                         const VolumeField& saturation);

/// Writes gravity_raw.f32, gravity_norm.f32, density.f32, saturation.f32,
/// mask.f32 and manifest.json under `dir`, creating it.
void write_sample(const SampleRecord& record, const std::filesystem::path& dir);

/// Reads a sample written by write_sample. The grid supplies the reservoir
/// mask, which sample manifests do not carry; its geometry and the sensor
/// layout must match the manifest.
SampleRecord read_sample(const std::filesystem::path& dir, GridPtr grid, SensorGridPtr sensors);

/// Prediction volume for one sample: <dir>/<id>/density.f32 + manifest.json.
void write_prediction(const std::filesystem::path& dir, const std::string& id,
                      const VolumeField& prediction);
VolumeField read_prediction(const std::filesystem::path& dir, const std::string& id,
                            GridPtr grid);

// ---------------------------------------------------------------------------
// Splits and manifests

inline constexpr std::size_t kFolds = 5;

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;  // excludes validation samples
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::array<std::vector<std::size_t>, kFolds> folds;  // test indices per fold

  std::size_t train_with_val() const noexcept { return train.size() + val.size(); }
};

/// Shuffled 90/10 train/test split with 5% of train held out for validation,
/// plus five disjoint cross-validation test folds covering every sample.
/// Deterministic in `seed`; throws ValidationError for n < 20.
SplitAssignment make_splits(std::size_t n, std::uint64_t seed);

struct SampleEntry {
  std::string id;
  std::string path;  // relative to the dataset root
  std::size_t realization = 0;
  double time_step = 0.0;
};

struct DatasetManifest {
  GridPtr grid;
  SensorGridPtr sensors;
  std::vector<SampleEntry> samples;
  std::optional<SplitAssignment> splits;  // absent below 20 samples
  ClassWeights class_weights;
  std::uint64_t n_background = 0;
  std::uint64_t n_foreground = 0;
  GeoStatsParams geostats;
  InjectionScenario scenario;
  nlohmann::json reproducibility = nlohmann::json::object();

  std::size_t index_of(const std::string& id) const;
};

/// Writes <root>/manifest.json and <root>/reservoir_mask.f32.
void write_dataset_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);
DatasetManifest read_dataset_manifest(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Sequences

inline constexpr std::size_t kSequenceLength = 10;

struct SequenceSample {
  std::array<std::size_t, kSequenceLength> records;  // indices into the input, oldest first
  std::array<double, kSequenceLength> time_steps;
  std::size_t target() const noexcept { return records.back(); }
};

/// Sliding windows of ten consecutive snapshots of one realization, one per
/// index i >= 9 with the target at i. Throws ValidationError for fewer than
/// ten records or time steps that are not strictly increasing.
std::vector<SequenceSample> build_sequences(std::span<const double> time_steps);
std::vector<SequenceSample> build_sequences(std::span<const SampleRecord> records);

} // namespace co2grav
