#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace co2grav {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Index3 {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
};

/// Uniform voxel grid below the sensor plane.
///
/// Coordinates are meters with z positive downward from the sea surface, so
/// the sensor plane sits at z = 0 and every cell has z >= origin.z >= 0.
/// Cells are stored x-fastest, then y, then z. The reservoir mask marks the
/// cells that belong to the storage formation.
class ReservoirGrid {
public:
  ReservoirGrid(std::size_t nx, std::size_t ny, std::size_t nz, double dx, double dy, double dz,
                Point3 origin, std::vector<std::uint8_t> mask);

  /// Grid with every cell inside the reservoir.
  static ReservoirGrid full(std::size_t nx, std::size_t ny, std::size_t nz, double dx, double dy,
                            double dz, Point3 origin);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nz() const noexcept { return nz_; }
  double dx() const noexcept { return dx_; }
  double dy() const noexcept { return dy_; }
  double dz() const noexcept { return dz_; }
  const Point3& origin() const noexcept { return origin_; }

  std::size_t size() const noexcept { return nx_ * ny_ * nz_; }
  double cell_volume() const noexcept { return dx_ * dy_ * dz_; }
  Point3 extent() const noexcept { return {nx_ * dx_, ny_ * dy_, nz_ * dz_}; }

  std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + nx_ * (j + ny_ * k);
  }
  Index3 unravel(std::size_t idx) const noexcept {
    return {idx % nx_, (idx / nx_) % ny_, idx / (nx_ * ny_)};
  }

  bool in_mask(std::size_t idx) const noexcept { return mask_[idx] != 0; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t mask_count() const noexcept { return mask_count_; }

  /// Same geometry, cell counts and mask.
  bool same_as(const ReservoirGrid& other) const noexcept;

private:
  std::size_t nx_, ny_, nz_;
  double dx_, dy_, dz_;
  Point3 origin_;
  std::vector<std::uint8_t> mask_;
  std::size_t mask_count_ = 0;
};

using GridPtr = std::shared_ptr<const ReservoirGrid>;

/// Center of cell (i, j, k). Throws GeometryError for out-of-bounds indices.
Point3 cell_center(const ReservoirGrid& grid, std::size_t i, std::size_t j, std::size_t k);

/// Dipping slab reservoir used by the desk-scale configurations.
///
/// The formation is `thickness` cells thick; its top rises linearly from
/// `nz - thickness` at the last x column to 0 at the first, so x = 0 is
/// updip. Cells outside the slab are outside the mask.
ReservoirGrid make_dipping_slab(std::size_t nx, std::size_t ny, std::size_t nz, double dx,
                                double dy, double dz, Point3 origin, std::size_t thickness);

/// Desk-scale default: n^3 cells spanning 8 km x 8 km horizontally and the
/// 2200-3100 m depth interval, slab thickness n/2.
ReservoirGrid default_desk_grid(std::size_t n = 16);

enum class FieldKind : std::uint8_t {
  density_change,
  saturation,
  porosity,
  permeability_log,
  binary_mask,
  scalar,  // dimensionless, unconstrained (e.g. a standard normal field)
};

std::string_view to_string(FieldKind kind) noexcept;
FieldKind field_kind_from_string(std::string_view name);
std::string_view units_of(FieldKind kind) noexcept;

inline constexpr double kPorosityLower = 0.10;
inline constexpr double kPorosityUpper = 0.40;

/// One scalar per cell of a grid. Immutable once constructed; the
/// constructor enforces the range invariant of `kind`.
class VolumeField {
public:
  VolumeField(GridPtr grid, FieldKind kind, std::vector<double> values);

  static VolumeField zeros(GridPtr grid, FieldKind kind);

  const ReservoirGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  FieldKind kind() const noexcept { return kind_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t idx) const noexcept { return values_[idx]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return values_[grid_->linear(i, j, k)];
  }
  std::size_t size() const noexcept { return values_.size(); }

  /// Copy of the values, for building a derived field.
  std::vector<double> to_vector() const { return values_; }

private:
  GridPtr grid_;
  FieldKind kind_;
  std::vector<double> values_;
};

/// Trilinear interpolation of `field` at the cell centers of `target`.
///
/// Source and target must span the same physical box. Sample positions are
/// mapped to continuous source indices with cell-center alignment and clamped
/// to the outermost source centers, so values never leave the source range.
VolumeField trilinear_resample(const VolumeField& field, GridPtr target);

/// Planar, uniformly spaced station layout on the seabed.
///
/// Station s sits at (x0 + (s % m1) * stride * base, y0 + (s / m1) * stride *
/// base, z) where spacing = stride * base. A decimated layout keeps the base
/// spacing and multiplies the stride, so its coordinates are bit-identical to
/// the matching stations of the layout it came from.
class SensorGrid {
public:
  SensorGrid(double spacing, std::size_t m1, std::size_t m2, double x0 = 0.0, double y0 = 0.0,
             double z = 0.0, std::size_t stride = 1);

  /// Stations every `spacing` meters covering [x_lo, x_hi] x [y_lo, y_hi],
  /// centered in the box when the extent is not a multiple of the spacing.
  static SensorGrid covering(double spacing, double x_lo, double x_hi, double y_lo, double y_hi,
                             double z = 0.0);

  double spacing() const noexcept { return base_spacing_ * static_cast<double>(stride_); }
  double base_spacing() const noexcept { return base_spacing_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t m1() const noexcept { return m1_; }
  std::size_t m2() const noexcept { return m2_; }
  std::size_t size() const noexcept { return m1_ * m2_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double z() const noexcept { return z_; }
  double x_extent() const noexcept { return static_cast<double>(m1_ - 1) * spacing(); }
  double y_extent() const noexcept { return static_cast<double>(m2_ - 1) * spacing(); }

  Point3 station(std::size_t s) const noexcept {
    return {x0_ + static_cast<double>((s % m1_) * stride_) * base_spacing_,
            y0_ + static_cast<double>((s / m1_) * stride_) * base_spacing_, z_};
  }

  bool same_as(const SensorGrid& other) const noexcept;

private:
  double base_spacing_;
  std::size_t m1_, m2_;
  double x0_, y0_, z_;
  std::size_t stride_;
};

using SensorGridPtr = std::shared_ptr<const SensorGrid>;

/// Spacings used by the sensor-resolution study, in meters.
inline constexpr double kStandardSpacings[] = {100.0, 250.0, 500.0, 1000.0, 2000.0, 3000.0};

bool is_standard_spacing(double spacing) noexcept;

/// Vertical gravity at each station: µGal when raw, dimensionless when
/// z-scored. A normalized map must have zero mean and unit population std.
class GravityMap {
public:
  GravityMap(SensorGridPtr sensors, std::vector<double> values, bool normalized = false);

  const SensorGrid& sensors() const noexcept { return *sensors_; }
  const SensorGridPtr& sensors_ptr() const noexcept { return sensors_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t s) const noexcept { return values_[s]; }
  std::size_t size() const noexcept { return values_.size(); }
  bool normalized() const noexcept { return normalized_; }

private:
  SensorGridPtr sensors_;
  std::vector<double> values_;
  bool normalized_;
};

} // namespace co2grav
