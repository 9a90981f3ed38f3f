#pragma once

#include "co2grav/grid.hpp"

#include <span>
#include <vector>

namespace co2grav {

/// Newton's gravitational constant, m^3 kg^-1 s^-2.
inline constexpr double kGamma = 6.6738480e-11;
/// m/s^2 -> µGal.
inline constexpr double kMicroGal = 1e8;

enum class KernelMode { on_the_fly, dense_matrix };

/// Linear map from a density-change volume (kg/m^3) to vertical gravity
/// (µGal) at the stations of a sensor grid.
///
/// Each cell is a point mass rho * cell_volume at its center. With z positive
/// down and stations above the grid, the coefficient of cell c at station s is
///
///   a(s, c) = 1e8 * gamma * V * (z_c - z_s) / |r_c - r_s|^3,
///
/// so a mass deficit (rho < 0) produces negative g_z. Forward sums over cells
/// in storage order for every station; the adjoint sums over stations in
/// ascending order for every cell. Both kernel modes evaluate the same
/// coefficients in the same order, and work is split across threads by output
/// index only, so results do not depend on the mode or the thread count.
class ForwardOperator {
public:
  /// Throws GeometryError when a station lies within dz / 10 of a cell center.
  ForwardOperator(GridPtr grid, SensorGridPtr sensors, KernelMode mode = KernelMode::dense_matrix,
                  std::size_t threads = 0);

  const ReservoirGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SensorGrid& sensors() const noexcept { return *sensors_; }
  const SensorGridPtr& sensors_ptr() const noexcept { return sensors_; }
  KernelMode mode() const noexcept { return mode_; }
  std::size_t threads() const noexcept { return threads_; }

  std::size_t rows() const noexcept { return sensors_->size(); }
  std::size_t cols() const noexcept { return grid_->size(); }

  double coefficient(std::size_t station, std::size_t cell) const noexcept;

  /// Row-major stations x cells coefficients; empty in on_the_fly mode.
  std::span<const double> dense() const noexcept { return matrix_; }

  /// out = A * model. `model` has cols() entries, `out` rows().
  void apply(std::span<const double> model, std::span<double> out) const;
  /// out = A^T * data. `data` has rows() entries, `out` cols().
  void apply_adjoint(std::span<const double> data, std::span<double> out) const;

  GravityMap forward(const VolumeField& density) const;
  VolumeField adjoint(const GravityMap& residual) const;

private:
  GridPtr grid_;
  SensorGridPtr sensors_;
  KernelMode mode_;
  std::size_t threads_;
  std::vector<double> matrix_;
  std::vector<Point3> centers_;
  double scale_;  // 1e8 * gamma * cell volume
};

/// Raw forward gravity of a density-change volume, µGal.
GravityMap forward(const ForwardOperator& op, const VolumeField& density);

/// Transpose of forward applied to a station-space residual.
VolumeField adjoint(const ForwardOperator& op, const GravityMap& residual);

/// Operator over every k-th station per axis, k = spacing / base spacing.
///
/// Stations are taken at indices 0, k, 2k, ... so the coarse layout shares
/// coordinates with the fine one and forward on the result equals selecting
/// the matching entries of the fine forward output exactly. Throws
/// ValidationError if `spacing` is not a positive integer multiple of the
/// current spacing.
ForwardOperator subsample_sensors(const ForwardOperator& op, double spacing);

} // namespace co2grav
