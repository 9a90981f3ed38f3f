#include "co2grav/dataset_io.hpp"

#include "co2grav/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace co2grav {

namespace fs = std::filesystem;
using nlohmann::json;

GravityMap zscore(const GravityMap& map) {
  const auto v = map.values();
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v)
    var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 1e-12))
    throw NormalizationError("cannot z-score a constant gravity map");
  std::vector<double> out(v.size());
  for (std::size_t s = 0; s < out.size(); ++s)
    out[s] = (v[s] - mean) / sd;
  return {map.sensors_ptr(), std::move(out), true};
}

std::vector<double> quantize_f32(std::span<const double> values) {
  std::vector<double> out(values.size());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = static_cast<double>(static_cast<float>(values[n]));
  return out;
}

VolumeField quantize_f32(const VolumeField& field) {
  return {field.grid_ptr(), field.kind(), quantize_f32(field.values())};
}

GravityMap quantize_f32(const GravityMap& map) {
  return {map.sensors_ptr(), quantize_f32(map.values()), map.normalized()};
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string crc32_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

namespace {

std::uint32_t parse_crc(const json& entry) {
  const auto s = entry.at("crc32").get<std::string>();
  if (s.size() != 8 || s.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw FormatError("malformed crc32 '" + s + "'");
  return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16));
}

std::vector<std::uint8_t> encode_f32(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t n = 0; n < values.size(); ++n) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[n]));
    for (int b = 0; b < 4; ++b)
      bytes[4 * n + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return bytes;
}

} // namespace

std::uint32_t write_f32(const fs::path& file, std::span<const double> values) {
  const auto bytes = encode_f32(values);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os)
    throw FormatError("cannot open " + file.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os)
    throw FormatError("failed writing " + file.string());
  return crc32_of(bytes);
}

std::vector<double> read_f32(const fs::path& file, std::size_t count, std::uint32_t expected_crc) {
  std::ifstream is(file, std::ios::binary);
  if (!is)
    throw FormatError("cannot open " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() != count * 4)
    throw DimensionError(file.string() + " holds " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(count * 4));
  if (crc32_of(bytes) != expected_crc)
    throw ChecksumError("checksum mismatch in " + file.string());
  std::vector<double> out(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(bytes[4 * n + static_cast<std::size_t>(b)]) << (8 * b);
    out[n] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

json grid_to_json(const ReservoirGrid& g) {
  return {{"dims", {g.nx(), g.ny(), g.nz()}},
          {"cell_size", {g.dx(), g.dy(), g.dz()}},
          {"origin", {g.origin().x, g.origin().y, g.origin().z}},
          {"units", "m"},
          {"order", "x-fastest"}};
}

ReservoirGrid grid_from_json(const json& j, std::vector<std::uint8_t> mask) {
  try {
    const auto d = j.at("dims").get<std::array<std::size_t, 3>>();
    const auto c = j.at("cell_size").get<std::array<double, 3>>();
    const auto o = j.at("origin").get<std::array<double, 3>>();
    if (mask.empty())
      mask.assign(d[0] * d[1] * d[2], 1);
    return {d[0], d[1], d[2], c[0], c[1], c[2], {o[0], o[1], o[2]}, std::move(mask)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad grid description: ") + e.what());
  }
}

json sensors_to_json(const SensorGrid& s) {
  return {{"spacing", s.spacing()},
          {"base_spacing", s.base_spacing()},
          {"stride", s.stride()},
          {"counts", {s.m1(), s.m2()}},
          {"origin", {s.x0(), s.y0(), s.z()}},
          {"units", "m"}};
}

SensorGrid sensors_from_json(const json& j) {
  try {
    const auto n = j.at("counts").get<std::array<std::size_t, 2>>();
    const auto o = j.at("origin").get<std::array<double, 3>>();
    const double base = j.contains("base_spacing") ? j.at("base_spacing").get<double>()
                                                   : j.at("spacing").get<double>();
    const std::size_t stride = j.value("stride", std::size_t{1});
    return {base, n[0], n[1], o[0], o[1], o[2], stride};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad sensor description: ") + e.what());
  }
}

json geostats_to_json(const GeoStatsParams& p) {
  return {{"porosity_mean", p.porosity_mean},   {"porosity_std", p.porosity_std},
          {"porosity_lower", p.porosity_lower}, {"porosity_upper", p.porosity_upper},
          {"logperm_mean", p.logperm_mean},     {"logperm_std", p.logperm_std},
          {"logperm_lower", p.logperm_lower},   {"logperm_upper", p.logperm_upper},
          {"corr_length_mean", p.corr_length_mean}, {"corr_length_std", p.corr_length_std},
          {"poro_perm_corr", p.poro_perm_corr}};
}

GeoStatsParams geostats_from_json(const json& j) {
  GeoStatsParams p;
  p.porosity_mean = j.value("porosity_mean", p.porosity_mean);
  p.porosity_std = j.value("porosity_std", p.porosity_std);
  p.porosity_lower = j.value("porosity_lower", p.porosity_lower);
  p.porosity_upper = j.value("porosity_upper", p.porosity_upper);
  p.logperm_mean = j.value("logperm_mean", p.logperm_mean);
  p.logperm_std = j.value("logperm_std", p.logperm_std);
  p.logperm_lower = j.value("logperm_lower", p.logperm_lower);
  p.logperm_upper = j.value("logperm_upper", p.logperm_upper);
  p.corr_length_mean = j.value("corr_length_mean", p.corr_length_mean);
  p.corr_length_std = j.value("corr_length_std", p.corr_length_std);
  p.poro_perm_corr = j.value("poro_perm_corr", p.poro_perm_corr);
  return p;
}

json scenario_to_json(const InjectionScenario& s) {
  json j = {{"rate_m3_per_day", s.rate},   {"injection_years", s.injection_years},
            {"migration_years", s.migration_years}, {"rho_co2", s.rho_co2},
            {"rho_brine", s.rho_brine},    {"s_max", s.s_max},
            {"sweeps_per_year", s.sweeps_per_year}};
  if (s.well_cell)
    j["well_cell"] = {s.well_cell->i, s.well_cell->j, s.well_cell->k};
  return j;
}

InjectionScenario scenario_from_json(const json& j) {
  InjectionScenario s;
  s.rate = j.value("rate_m3_per_day", s.rate);
  s.injection_years = j.value("injection_years", s.injection_years);
  s.migration_years = j.value("migration_years", s.migration_years);
  s.rho_co2 = j.value("rho_co2", s.rho_co2);
  s.rho_brine = j.value("rho_brine", s.rho_brine);
  s.s_max = j.value("s_max", s.s_max);
  s.sweeps_per_year = j.value("sweeps_per_year", s.sweeps_per_year);
  if (j.contains("well_cell")) {
    const auto w = j.at("well_cell").get<std::array<std::size_t, 3>>();
    s.well_cell = Index3{w[0], w[1], w[2]};
  }
  return s;
}

json write_volume(const fs::path& dir, const std::string& name, const VolumeField& field) {
  const std::string file = name + ".f32";
  const auto crc = write_f32(dir / file, field.values());
  const auto& g = field.grid();
  return {{"file", file},
          {"kind", std::string(to_string(field.kind()))},
          {"units", std::string(units_of(field.kind()))},
          {"dims", {g.nx(), g.ny(), g.nz()}},
          {"dtype", "float32-le"},
          {"crc32", crc32_hex(crc)}};
}

VolumeField read_volume(const fs::path& dir, const json& entry, GridPtr grid) {
  try {
    const auto dims = entry.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3 || dims[0] != grid->nx() || dims[1] != grid->ny() ||
        dims[2] != grid->nz())
      throw DimensionError("volume dims in manifest do not match the grid");
    const auto kind = field_kind_from_string(entry.at("kind").get<std::string>());
    auto values =
        read_f32(dir / entry.at("file").get<std::string>(), grid->size(), parse_crc(entry));
    return {std::move(grid), kind, std::move(values)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field entry: ") + e.what());
  }
}

json write_map(const fs::path& dir, const std::string& name, const GravityMap& map) {
  const std::string file = name + ".f32";
  const auto crc = write_f32(dir / file, map.values());
  return {{"file", file},
          {"kind", map.normalized() ? "gravity_zscore" : "gravity"},
          {"units", map.normalized() ? "1" : "uGal"},
          {"dims", {map.sensors().m1(), map.sensors().m2()}},
          {"dtype", "float32-le"},
          {"crc32", crc32_hex(crc)}};
}

GravityMap read_map(const fs::path& dir, const json& entry, SensorGridPtr sensors) {
  try {
    const auto dims = entry.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 2 || dims[0] != sensors->m1() || dims[1] != sensors->m2())
      throw DimensionError("map dims in manifest do not match the sensor grid");
    const auto kind = entry.at("kind").get<std::string>();
    if (kind != "gravity" && kind != "gravity_zscore")
      throw FormatError("unknown map kind '" + kind + "'");
    auto values =
        read_f32(dir / entry.at("file").get<std::string>(), sensors->size(), parse_crc(entry));
    return {std::move(sensors), std::move(values), kind == "gravity_zscore"};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field entry: ") + e.what());
  }
}

json read_manifest(const fs::path& dir) {
  const auto file = dir / "manifest.json";
  std::ifstream is(file);
  if (!is)
    throw FormatError("missing " + file.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError("cannot parse " + file.string() + ": " + e.what());
  }
  if (j.value("format_version", -1) != kFormatVersion)
    throw FormatError("unsupported format version in " + file.string());
  return j;
}

void write_json(const fs::path& file, const json& j) {
  const auto tmp = fs::path(file.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os)
      throw FormatError("cannot open " + tmp.string() + " for writing");
    os << j.dump(2) << '\n';
    if (!os)
      throw FormatError("failed writing " + tmp.string());
  }
  fs::rename(tmp, file);
}

SampleRecord make_record(std::string id, std::size_t realization, double time_step,
                         std::uint64_t seed, double corr_length, const GeoStatsParams& geostats,
                         const GravityMap& gravity_raw, const VolumeField& density,
                         const VolumeField& saturation) {
  auto raw = quantize_f32(gravity_raw);
  auto norm = quantize_f32(zscore(raw));
  auto sat = quantize_f32(saturation);
  std::vector<double> mask(sat.size());
  for (std::size_t c = 0; c < mask.size(); ++c)
    mask[c] = sat[c] > 0.0 ? 1.0 : 0.0;
  VolumeField plume(sat.grid_ptr(), FieldKind::binary_mask, std::move(mask));
  return {std::move(id),   realization,           time_step,
          seed,            corr_length,           geostats,
          std::move(raw),  std::move(norm),       quantize_f32(density),
          std::move(sat),  std::move(plume)};
}

void write_sample(const SampleRecord& r, const fs::path& dir) {
  fs::create_directories(dir);
  json fields;
  fields["gravity_raw"] = write_map(dir, "gravity_raw", r.gravity_raw);
  fields["gravity_norm"] = write_map(dir, "gravity_norm", r.gravity_norm);
  fields["density"] = write_volume(dir, "density", r.density_change);
  fields["saturation"] = write_volume(dir, "saturation", r.saturation);
  fields["mask"] = write_volume(dir, "mask", r.plume_mask);
  json j = {{"format_version", kFormatVersion},
            {"id", r.id},
            {"realization", r.realization},
            {"time_step_years", r.time_step},
            {"seed", r.seed},
            {"corr_length_cells", r.corr_length},
            {"geostats", geostats_to_json(r.geostats)},
            {"grid", grid_to_json(r.density_change.grid())},
            {"sensors", sensors_to_json(r.gravity_raw.sensors())},
            {"normalization", kNormalizationTag},
            {"fields", fields}};
  write_json(dir / "manifest.json", j);
}

namespace {

void check_grid_matches(const json& j, const ReservoirGrid& grid) {
  const auto g = grid_from_json(j);
  if (g.nx() != grid.nx() || g.ny() != grid.ny() || g.nz() != grid.nz())
    throw DimensionError("sample grid dims differ from the dataset grid");
  if (g.dx() != grid.dx() || g.dy() != grid.dy() || g.dz() != grid.dz() ||
      g.origin().x != grid.origin().x || g.origin().y != grid.origin().y ||
      g.origin().z != grid.origin().z)
    throw FormatError("sample grid geometry differs from the dataset grid");
}

} // namespace

SampleRecord read_sample(const fs::path& dir, GridPtr grid, SensorGridPtr sensors) {
  const auto j = read_manifest(dir);
  try {
    check_grid_matches(j.at("grid"), *grid);
    if (!sensors_from_json(j.at("sensors")).same_as(*sensors))
      throw FormatError("sample sensor layout differs from the dataset layout");
    const auto& f = j.at("fields");
    auto raw = read_map(dir, f.at("gravity_raw"), sensors);
    auto norm = read_map(dir, f.at("gravity_norm"), sensors);
    auto density = read_volume(dir, f.at("density"), grid);
    auto sat = read_volume(dir, f.at("saturation"), grid);
    auto mask = read_volume(dir, f.at("mask"), grid);
    if (density.kind() != FieldKind::density_change || sat.kind() != FieldKind::saturation ||
        mask.kind() != FieldKind::binary_mask || raw.normalized() || !norm.normalized())
      throw FormatError("sample fields have unexpected kinds");
    return {j.at("id").get<std::string>(),
            j.at("realization").get<std::size_t>(),
            j.at("time_step_years").get<double>(),
            j.at("seed").get<std::uint64_t>(),
            j.at("corr_length_cells").get<double>(),
            geostats_from_json(j.at("geostats")),
            std::move(raw),
            std::move(norm),
            std::move(density),
            std::move(sat),
            std::move(mask)};
  } catch (const json::exception& e) {
    throw FormatError("bad sample manifest in " + dir.string() + ": " + e.what());
  }
}

void write_prediction(const fs::path& dir, const std::string& id, const VolumeField& prediction) {
  const auto sample_dir = dir / id;
  fs::create_directories(sample_dir);
  json j = {{"format_version", kFormatVersion},
            {"id", id},
            {"grid", grid_to_json(prediction.grid())},
            {"fields", {{"density", write_volume(sample_dir, "density", prediction)}}}};
  write_json(sample_dir / "manifest.json", j);
}

VolumeField read_prediction(const fs::path& dir, const std::string& id, GridPtr grid) {
  const auto sample_dir = dir / id;
  const auto j = read_manifest(sample_dir);
  try {
    check_grid_matches(j.at("grid"), *grid);
    auto v = read_volume(sample_dir, j.at("fields").at("density"), std::move(grid));
    if (v.kind() != FieldKind::density_change)
      throw FormatError("prediction " + id + " is not a density_change volume");
    return v;
  } catch (const json::exception& e) {
    throw FormatError("bad prediction manifest for " + id + ": " + e.what());
  }
}

SplitAssignment make_splits(std::size_t n, std::uint64_t seed) {
  if (n < 20)
    throw ValidationError("need at least 20 samples for train/val/test splits");
  std::mt19937_64 rng(derive_seed(seed, 100));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  SplitAssignment out;
  out.seed = seed;
  const auto n_test = static_cast<std::size_t>(std::lround(0.10 * static_cast<double>(n)));
  const std::size_t n_train_total = n - n_test;
  const std::size_t n_val =
      std::max<std::size_t>(1, static_cast<std::size_t>(0.05 * static_cast<double>(n_train_total)));
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.train.begin(), out.train.end());

  std::mt19937_64 fold_rng(derive_seed(seed, 101));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), fold_rng);
  for (std::size_t f = 0; f < kFolds; ++f) {
    const std::size_t begin = f * n / kFolds, end = (f + 1) * n / kFolds;
    out.folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                        perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(out.folds[f].begin(), out.folds[f].end());
  }
  return out;
}

std::size_t DatasetManifest::index_of(const std::string& id) const {
  for (std::size_t n = 0; n < samples.size(); ++n)
    if (samples[n].id == id)
      return n;
  throw ValidationError("unknown sample id '" + id + "'");
}

namespace {

json ids_of(const std::vector<SampleEntry>& samples, const std::vector<std::size_t>& idx) {
  json a = json::array();
  for (auto n : idx)
    a.push_back(samples.at(n).id);
  return a;
}

std::vector<std::size_t> indices_of(const DatasetManifest& m, const json& ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids)
    out.push_back(m.index_of(id.get<std::string>()));
  return out;
}

} // namespace

void write_dataset_manifest(const DatasetManifest& m, const fs::path& root) {
  fs::create_directories(root);
  const auto& grid = *m.grid;
  std::vector<double> mask(grid.size());
  for (std::size_t c = 0; c < mask.size(); ++c)
    mask[c] = grid.in_mask(c) ? 1.0 : 0.0;
  const auto crc = write_f32(root / "reservoir_mask.f32", mask);

  json samples = json::array();
  for (const auto& s : m.samples)
    samples.push_back({{"id", s.id},
                       {"path", s.path},
                       {"realization", s.realization},
                       {"time_step_years", s.time_step}});
  json splits = nullptr;
  if (m.splits) {
    json folds = json::array();
    for (const auto& f : m.splits->folds)
      folds.push_back(ids_of(m.samples, f));
    splits = {{"seed", m.splits->seed},
              {"train", ids_of(m.samples, m.splits->train)},
              {"val", ids_of(m.samples, m.splits->val)},
              {"test", ids_of(m.samples, m.splits->test)},
              {"folds", folds}};
  }

  json grid_j = grid_to_json(grid);
  grid_j["mask"] = {{"file", "reservoir_mask.f32"}, {"crc32", crc32_hex(crc)}};
  json j = {{"format_version", kFormatVersion},
            {"normalization", kNormalizationTag},
            {"grid", grid_j},
            {"sensors", sensors_to_json(*m.sensors)},
            {"geostats", geostats_to_json(m.geostats)},
            {"scenario", scenario_to_json(m.scenario)},
            {"samples", samples},
            {"splits", splits},
            {"class_weights",
             {{"background", m.class_weights.background},
              {"foreground", m.class_weights.foreground},
              {"n_background", m.n_background},
              {"n_foreground", m.n_foreground}}},
            {"reproducibility", m.reproducibility}};
  write_json(root / "manifest.json", j);
}

DatasetManifest read_dataset_manifest(const fs::path& root) {
  const auto j = read_manifest(root);
  DatasetManifest m;
  try {
    const auto& g = j.at("grid");
    const auto probe = grid_from_json(g);
    const auto& mask_entry = g.at("mask");
    const auto mask_values =
        read_f32(root / mask_entry.at("file").get<std::string>(), probe.size(), parse_crc(mask_entry));
    std::vector<std::uint8_t> mask(mask_values.size());
    for (std::size_t c = 0; c < mask.size(); ++c)
      mask[c] = mask_values[c] != 0.0 ? 1 : 0;
    m.grid = std::make_shared<const ReservoirGrid>(grid_from_json(g, std::move(mask)));
    m.sensors = std::make_shared<const SensorGrid>(sensors_from_json(j.at("sensors")));
    m.geostats = geostats_from_json(j.at("geostats"));
    m.scenario = scenario_from_json(j.at("scenario"));
    for (const auto& s : j.at("samples"))
      m.samples.push_back({s.at("id").get<std::string>(), s.at("path").get<std::string>(),
                           s.at("realization").get<std::size_t>(),
                           s.at("time_step_years").get<double>()});
    const auto& sp = j.at("splits");
    if (!sp.is_null()) {
      SplitAssignment a;
      a.seed = sp.at("seed").get<std::uint64_t>();
      a.train = indices_of(m, sp.at("train"));
      a.val = indices_of(m, sp.at("val"));
      a.test = indices_of(m, sp.at("test"));
      const auto& folds = sp.at("folds");
      if (folds.size() != kFolds)
        throw FormatError("manifest must list exactly five folds");
      for (std::size_t f = 0; f < kFolds; ++f)
        a.folds[f] = indices_of(m, folds[f]);
      m.splits = std::move(a);
    }
    const auto& cw = j.at("class_weights");
    m.class_weights = {cw.at("background").get<double>(), cw.at("foreground").get<double>()};
    m.n_background = cw.at("n_background").get<std::uint64_t>();
    m.n_foreground = cw.at("n_foreground").get<std::uint64_t>();
    m.reproducibility = j.value("reproducibility", json::object());
  } catch (const json::exception& e) {
    throw FormatError("bad dataset manifest: " + std::string(e.what()));
  }
  return m;
}

std::vector<SequenceSample> build_sequences(std::span<const double> time_steps) {
  if (time_steps.size() < kSequenceLength)
    throw ValidationError("need at least ten snapshots to build a sequence");
  for (std::size_t n = 1; n < time_steps.size(); ++n)
    if (!(time_steps[n] > time_steps[n - 1]))
      throw ValidationError("snapshot time steps must be strictly increasing");
  std::vector<SequenceSample> out;
  out.reserve(time_steps.size() - kSequenceLength + 1);
  for (std::size_t end = kSequenceLength - 1; end < time_steps.size(); ++end) {
    SequenceSample s{};
    for (std::size_t w = 0; w < kSequenceLength; ++w) {
      s.records[w] = end + 1 - kSequenceLength + w;
      s.time_steps[w] = time_steps[s.records[w]];
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SequenceSample> build_sequences(std::span<const SampleRecord> records) {
  std::vector<double> t;
  t.reserve(records.size());
  for (const auto& r : records)
    t.push_back(r.time_step);
  return build_sequences(t);
}

} // namespace co2grav
