#pragma once

#include "co2grav/grid.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace co2grav {

/// Geostatistical parameters of the porosity / log-permeability realizations.
/// Correlation lengths are in cells.
struct GeoStatsParams {
  double porosity_mean = 0.25;
  double porosity_std = 0.03;
  double porosity_lower = kPorosityLower;
  double porosity_upper = kPorosityUpper;
  double logperm_mean = 2.5;
  double logperm_std = 2.0;
  double logperm_lower = -5.0;
  double logperm_upper = 10.0;
  double corr_length_mean = 26.0;
  double corr_length_std = 2.0;
  double poro_perm_corr = 0.30;

  /// Throws ValidationError when bounds are unordered, a std is not
  /// positive, or |poro_perm_corr| > 1.
  void validate() const;
};

struct InjectionScenario {
  double rate = 14400.0;            // m^3/day
  double injection_years = 100.0;
  double migration_years = 400.0;
  std::optional<Index3> well_cell;  // default: see default_well_cell()
  double rho_co2 = 700.0;           // kg/m^3
  double rho_brine = 1030.0;        // kg/m^3
  double s_max = 0.8;
  double sweeps_per_year = 0.1;     // migration relaxation sweeps per year after injection

  void validate() const;
  double total_years() const noexcept { return injection_years + migration_years; }
};

inline constexpr double kDaysPerYear = 365.25;

/// Derives an independent 64-bit seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Zero-mean, unit-variance stationary Gaussian random field with isotropic
/// covariance exp(-r^2 / (2 L^2)), r and L in cells.
///
/// White noise on a padded box is convolved with a separable Gaussian kernel
/// of width L / sqrt(2), truncated at four kernel widths and normalized to
/// unit energy, so every cell has variance exactly one in expectation and
/// there are no boundary effects. Deterministic in `seed`.
VolumeField sample_gaussian_field(GridPtr grid, double corr_length, std::uint64_t seed);

struct GeologyRealization {
  VolumeField porosity;
  VolumeField logperm;
  double corr_length;  // cells, as drawn for this realization
};

/// Correlated porosity and log-permeability fields.
///
/// porosity = clip(mean + std Z1); logperm = clip(mean + std (c Z1 +
/// sqrt(1 - c^2) Z2)) with Z1, Z2 independent fields sharing a correlation
/// length drawn from N(corr_length_mean, corr_length_std^2), floored at 1.
GeologyRealization realize_geology(GridPtr grid, const GeoStatsParams& params, std::uint64_t seed);

/// Column center of the grid, deepest mask cell in that column. Falls back to
/// the deepest mask cell overall when the center column has no mask cell.
Index3 default_well_cell(const ReservoirGrid& grid);

/// Injected volume after `t` years: rate * 365.25 * min(t, injection_years).
double injected_volume(const InjectionScenario& scenario, double t);

/// CO2 saturation after `t` years.
///
/// Injection: pore space is filled greedily from the well, always taking the
/// shallowest frontier cell (ties: highest log-permeability, then lowest
/// index) and saturating it to s_max; the last cell takes the fractional
/// saturation that makes sum(phi * s * cell_volume) equal the injected volume.
///
/// Migration (t > injection_years): floor(sweeps_per_year * (t -
/// injection_years)) sweeps, each visiting cells shallow-to-deep and moving as
/// much CO2 volume as fits into the highest-permeability mask neighbor in the
/// layer directly above (3x3 stencil). Volume is conserved and the plume only
/// moves up.
///
/// Throws ValidationError if t is outside [0, total_years] or the injected
/// volume exceeds the pore volume reachable from the well.
VolumeField simulate_plume(const VolumeField& porosity, const VolumeField& logperm,
                           const InjectionScenario& scenario, double t);

/// Bulk density change phi * dS * (rho_co2 - rho_brine), zero outside the mask.
VolumeField density_change(const VolumeField& porosity, const VolumeField& delta_saturation,
                           const InjectionScenario& scenario);

/// Snapshot time for the sample at `sample_index`: uniform on (0, 100] years
/// for the first `early_count` samples, uniform on (0, 500] for the rest.
double sample_time_step(std::size_t sample_index, std::size_t dataset_size, std::mt19937_64& rng,
                        std::size_t early_count = 100, double early_years = 100.0,
                        double total_years = 500.0);

} // namespace co2grav
