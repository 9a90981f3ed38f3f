#pragma once

#include "co2grav/l2_inversion.hpp"
#include "co2grav/synth_geo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace co2grav::cli {

struct GenerateOptions {
  std::filesystem::path out;
  std::size_t samples = 4;
  std::size_t grid_n = 16;
  double spacing = 500.0;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  GeoStatsParams geostats;
  InjectionScenario scenario;
  /// Series mode: `samples` realizations, each with `snapshots` snapshots
  /// every `cadence` years, for the sequence dataset.
  bool series = false;
  std::size_t snapshots = 12;
  double cadence = 1.0;
  bool export_kernel = false;
};

struct SelectOptions {
  std::filesystem::path dataset;
  std::string split = "test";  // train | val | test | all
  std::vector<std::string> ids;  // overrides split when nonempty
};

struct InvertOptions {
  SelectOptions select;
  std::filesystem::path out;
  std::optional<std::filesystem::path> init;  // prediction dir for refine
  std::size_t max_iters = 500;
  double tol = 1e-8;
  bool unconstrained = false;
  std::size_t threads = 0;
};

struct EvaluateOptions {
  SelectOptions select;
  std::filesystem::path predictions;
  std::filesystem::path report;
  std::optional<std::filesystem::path> csv;
  std::optional<double> threshold;
  std::size_t threads = 0;
};

struct ForwardOptions {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> predictions;
  std::vector<std::string> ids;
  std::filesystem::path out;
  std::optional<double> spacing;
  bool export_kernel = false;
  std::size_t threads = 0;
};

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// {"tool", "seed", "config_hash", "format_version", "config"}
nlohmann::json reproducibility_block(const std::string& tool, std::uint64_t seed,
                                     const nlohmann::json& config);

void cmd_generate(const GenerateOptions& opt);
void cmd_invert(const InvertOptions& opt);
void cmd_refine(const InvertOptions& opt);
nlohmann::json cmd_evaluate(const EvaluateOptions& opt);
void cmd_forward(const ForwardOptions& opt);
void cmd_split(const std::filesystem::path& dataset, std::uint64_t seed);
void cmd_sequences(const std::filesystem::path& dataset, const std::filesystem::path& out);

/// Writes <dir>/kernel.f64 (row-major stations x cells, float64-le, µGal per
/// kg/m^3) and <dir>/kernel.json describing it.
void export_kernel(const ForwardOperator& op, const std::filesystem::path& dir);

/// Parses argv and dispatches. Returns 0 on success, 1 on a failed
/// operation, 2 on a usage error.
int run(int argc, char** argv);

} // namespace co2grav::cli
