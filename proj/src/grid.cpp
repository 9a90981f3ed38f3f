#include "co2grav/grid.hpp"

#include "co2grav/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace co2grav {

ReservoirGrid::ReservoirGrid(std::size_t nx, std::size_t ny, std::size_t nz, double dx, double dy,
                             double dz, Point3 origin, std::vector<std::uint8_t> mask)
    : nx_(nx), ny_(ny), nz_(nz), dx_(dx), dy_(dy), dz_(dz), origin_(origin),
      mask_(std::move(mask)) {
  if (nx == 0 || ny == 0 || nz == 0)
    throw ValidationError("grid dimensions must be positive");
  if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0))
    throw ValidationError("cell sizes must be positive");
  if (!(origin.z >= 0.0))
    throw ValidationError("grid must lie below the sensor plane (origin z >= 0)");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z))
    throw ValidationError("grid origin must be finite");
  if (mask_.size() != size())
    throw ValidationError("mask has " + std::to_string(mask_.size()) + " entries, expected " +
                          std::to_string(size()));
  for (auto& m : mask_)
    m = m != 0 ? 1 : 0;
  mask_count_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

ReservoirGrid ReservoirGrid::full(std::size_t nx, std::size_t ny, std::size_t nz, double dx,
                                  double dy, double dz, Point3 origin) {
  return {nx, ny, nz, dx, dy, dz, origin, std::vector<std::uint8_t>(nx * ny * nz, 1)};
}

bool ReservoirGrid::same_as(const ReservoirGrid& other) const noexcept {
  return nx_ == other.nx_ && ny_ == other.ny_ && nz_ == other.nz_ && dx_ == other.dx_ &&
         dy_ == other.dy_ && dz_ == other.dz_ && origin_.x == other.origin_.x &&
         origin_.y == other.origin_.y && origin_.z == other.origin_.z && mask_ == other.mask_;
}

Point3 cell_center(const ReservoirGrid& grid, std::size_t i, std::size_t j, std::size_t k) {
  if (i >= grid.nx() || j >= grid.ny() || k >= grid.nz())
    throw GeometryError("cell index (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                        std::to_string(k) + ") out of bounds");
  const auto& o = grid.origin();
  return {o.x + (static_cast<double>(i) + 0.5) * grid.dx(),
          o.y + (static_cast<double>(j) + 0.5) * grid.dy(),
          o.z + (static_cast<double>(k) + 0.5) * grid.dz()};
}

ReservoirGrid make_dipping_slab(std::size_t nx, std::size_t ny, std::size_t nz, double dx,
                                double dy, double dz, Point3 origin, std::size_t thickness) {
  if (thickness == 0 || thickness > nz)
    throw ValidationError("slab thickness must be in [1, nz]");
  std::vector<std::uint8_t> mask(nx * ny * nz, 0);
  const std::size_t relief = nz - thickness;
  for (std::size_t i = 0; i < nx; ++i) {
    const double frac = nx > 1 ? static_cast<double>(i) / static_cast<double>(nx - 1) : 0.0;
    const auto top = static_cast<std::size_t>(std::lround(frac * static_cast<double>(relief)));
    for (std::size_t k = top; k < top + thickness; ++k)
      for (std::size_t j = 0; j < ny; ++j)
        mask[i + nx * (j + ny * k)] = 1;
  }
  return {nx, ny, nz, dx, dy, dz, origin, std::move(mask)};
}

ReservoirGrid default_desk_grid(std::size_t n) {
  if (n < 2)
    throw ValidationError("desk grid needs at least 2 cells per axis");
  const double d = 8000.0 / static_cast<double>(n);
  const double dz = 900.0 / static_cast<double>(n);
  return make_dipping_slab(n, n, n, d, d, dz, {0.0, 0.0, 2200.0}, std::max<std::size_t>(1, n / 2));
}

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "density_change", "saturation", "porosity", "permeability_log", "binary_mask", "scalar"};

} // namespace

std::string_view to_string(FieldKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

FieldKind field_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name)
      return static_cast<FieldKind>(i);
  throw ValidationError("unknown field kind '" + std::string(name) + "'");
}

std::string_view units_of(FieldKind kind) noexcept {
  switch (kind) {
  case FieldKind::density_change:
    return "kg/m^3";
  case FieldKind::saturation:
  case FieldKind::porosity:
    return "fraction";
  case FieldKind::permeability_log:
    return "log(mD)";
  case FieldKind::binary_mask:
  case FieldKind::scalar:
    return "1";
  }
  return "";
}

VolumeField::VolumeField(GridPtr grid, FieldKind kind, std::vector<double> values)
    : grid_(std::move(grid)), kind_(kind), values_(std::move(values)) {
  if (!grid_)
    throw ValidationError("volume field needs a grid");
  if (values_.size() != grid_->size())
    throw DimensionError("field has " + std::to_string(values_.size()) + " values, grid has " +
                         std::to_string(grid_->size()) + " cells");
  for (double v : values_) {
    if (!std::isfinite(v))
      throw ValidationError("field values must be finite");
    switch (kind_) {
    case FieldKind::saturation:
      if (v < 0.0 || v > 1.0)
        throw ValidationError("saturation outside [0, 1]");
      break;
    case FieldKind::porosity:
      if (v < kPorosityLower || v > kPorosityUpper)
        throw ValidationError("porosity outside [0.10, 0.40]");
      break;
    case FieldKind::binary_mask:
      if (v != 0.0 && v != 1.0)
        throw ValidationError("binary mask values must be 0 or 1");
      break;
    default:
      break;
    }
  }
}

VolumeField VolumeField::zeros(GridPtr grid, FieldKind kind) {
  if (kind == FieldKind::porosity)
    throw ValidationError("a zero porosity field violates the porosity bounds");
  const std::size_t n = grid ? grid->size() : 0;
  return {std::move(grid), kind, std::vector<double>(n, 0.0)};
}

namespace {

bool close_extent(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double t;
};

// Continuous source index of a position, clamped to the outer cell centers.
AxisSample axis_sample(double pos, double origin, double d, std::size_t n) {
  double u = (pos - origin) / d - 0.5;
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  auto lo = static_cast<std::size_t>(std::floor(u));
  if (lo >= n - 1)
    return {n - 1, n - 1, 0.0};
  return {lo, lo + 1, u - static_cast<double>(lo)};
}

} // namespace

VolumeField trilinear_resample(const VolumeField& field, GridPtr target) {
  if (!target)
    throw ValidationError("resample needs a target grid");
  const auto& src = field.grid();
  const auto se = src.extent();
  const auto te = target->extent();
  const auto& so = src.origin();
  const auto& to = target->origin();
  if (!close_extent(so.x, to.x) || !close_extent(so.y, to.y) || !close_extent(so.z, to.z) ||
      !close_extent(se.x, te.x) || !close_extent(se.y, te.y) || !close_extent(se.z, te.z))
    throw GeometryError("resample source and target cover different physical extents");

  std::vector<AxisSample> ax(target->nx()), ay(target->ny()), az(target->nz());
  for (std::size_t i = 0; i < ax.size(); ++i)
    ax[i] = axis_sample(to.x + (i + 0.5) * target->dx(), so.x, src.dx(), src.nx());
  for (std::size_t j = 0; j < ay.size(); ++j)
    ay[j] = axis_sample(to.y + (j + 0.5) * target->dy(), so.y, src.dy(), src.ny());
  for (std::size_t k = 0; k < az.size(); ++k)
    az[k] = axis_sample(to.z + (k + 0.5) * target->dz(), so.z, src.dz(), src.nz());

  std::vector<double> out(target->size());
  for (std::size_t k = 0; k < az.size(); ++k) {
    const auto& sz = az[k];
    for (std::size_t j = 0; j < ay.size(); ++j) {
      const auto& sy = ay[j];
      for (std::size_t i = 0; i < ax.size(); ++i) {
        const auto& sx = ax[i];
        auto lerp_x = [&](std::size_t jj, std::size_t kk) {
          return (1.0 - sx.t) * field.at(sx.lo, jj, kk) + sx.t * field.at(sx.hi, jj, kk);
        };
        const double c0 = (1.0 - sy.t) * lerp_x(sy.lo, sz.lo) + sy.t * lerp_x(sy.hi, sz.lo);
        const double c1 = (1.0 - sy.t) * lerp_x(sy.lo, sz.hi) + sy.t * lerp_x(sy.hi, sz.hi);
        out[target->linear(i, j, k)] = (1.0 - sz.t) * c0 + sz.t * c1;
      }
    }
  }

  // Masks are re-binarized at 0.5 so the result keeps its kind.
  FieldKind kind = field.kind();
  if (kind == FieldKind::binary_mask) {
    for (auto& v : out)
      v = v >= 0.5 ? 1.0 : 0.0;
  } else if (kind == FieldKind::porosity || kind == FieldKind::saturation) {
    // Convex combinations stay in range up to rounding.
    const double lo = kind == FieldKind::porosity ? kPorosityLower : 0.0;
    const double hi = kind == FieldKind::porosity ? kPorosityUpper : 1.0;
    for (auto& v : out)
      v = std::clamp(v, lo, hi);
  }
  return {std::move(target), kind, std::move(out)};
}

SensorGrid::SensorGrid(double spacing, std::size_t m1, std::size_t m2, double x0, double y0,
                       double z, std::size_t stride)
    : base_spacing_(spacing), m1_(m1), m2_(m2), x0_(x0), y0_(y0), z_(z), stride_(stride) {
  if (stride == 0)
    throw ValidationError("sensor stride must be positive");
  if (!(spacing > 0.0))
    throw ValidationError("sensor spacing must be positive");
  if (m1 == 0 || m2 == 0)
    throw ValidationError("sensor grid needs at least one station per axis");
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(z))
    throw ValidationError("sensor grid origin must be finite");
}

SensorGrid SensorGrid::covering(double spacing, double x_lo, double x_hi, double y_lo,
                                double y_hi, double z) {
  if (!(spacing > 0.0) || !(x_hi > x_lo) || !(y_hi > y_lo))
    throw ValidationError("invalid sensor layout box");
  auto count = [&](double len) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(len / spacing + 1e-9)));
  };
  const std::size_t m1 = count(x_hi - x_lo);
  const std::size_t m2 = count(y_hi - y_lo);
  const double x0 = x_lo + 0.5 * ((x_hi - x_lo) - static_cast<double>(m1 - 1) * spacing);
  const double y0 = y_lo + 0.5 * ((y_hi - y_lo) - static_cast<double>(m2 - 1) * spacing);
  return {spacing, m1, m2, x0, y0, z};
}

bool SensorGrid::same_as(const SensorGrid& other) const noexcept {
  return base_spacing_ == other.base_spacing_ && stride_ == other.stride_ && m1_ == other.m1_ && m2_ == other.m2_ && x0_ == other.x0_ &&
         y0_ == other.y0_ && z_ == other.z_;
}

bool is_standard_spacing(double spacing) noexcept {
  return std::any_of(std::begin(kStandardSpacings), std::end(kStandardSpacings),
                     [&](double s) { return s == spacing; });
}

GravityMap::GravityMap(SensorGridPtr sensors, std::vector<double> values, bool normalized)
    : sensors_(std::move(sensors)), values_(std::move(values)), normalized_(normalized) {
  if (!sensors_)
    throw ValidationError("gravity map needs a sensor grid");
  if (values_.size() != sensors_->size())
    throw DimensionError("gravity map has " + std::to_string(values_.size()) +
                         " values, sensor grid has " + std::to_string(sensors_->size()) +
                         " stations");
  for (double v : values_)
    if (!std::isfinite(v))
      throw ValidationError("gravity values must be finite");
  if (normalized_) {
    const double n = static_cast<double>(values_.size());
    const double mean = std::accumulate(values_.begin(), values_.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values_)
      var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (std::abs(mean) >= 1e-6 || std::abs(sd - 1.0) >= 1e-6)
      throw NormalizationError("map flagged normalized does not have zero mean and unit std");
  }
}

} // namespace co2grav
