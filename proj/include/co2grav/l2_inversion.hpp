#pragma once

#include "co2grav/forward_gravity.hpp"
#include "co2grav/grid.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace co2grav {

enum class Constraint {
  masked,         // only reservoir-mask cells are updated
  unconstrained,  // every cell is updated
};

struct InversionConfig {
  std::size_t max_iters = 500;
  double rel_residual_tol = 1e-8;
  Constraint constraint = Constraint::masked;
  std::optional<VolumeField> initial_model;  // null model (all zeros) when empty
  bool record_history = true;
};

struct InversionResult {
  VolumeField model;
  /// ||F(rho_k) - G||^2 in µGal^2, one entry for the starting model and one
  /// per iteration.
  std::vector<double> data_misfit_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes 0.5 ||F(rho) - G||^2 over the free cells with CGLS, never
/// forming F^T F. Cells outside the free set keep their initial values
/// bit-exactly. Stops once ||F(rho) - G|| <= tol * ||G||, when the gradient
/// on the free set vanishes (least-squares optimum), or after max_iters.
/// ||G|| = 0 returns the initial model without iterating.
///
/// The history is the CGLS residual recurrence, which is nonincreasing.
InversionResult invert(const ForwardOperator& op, const GravityMap& observed,
                       const InversionConfig& cfg);

/// invert() seeded with a learned prediction instead of cfg.initial_model.
InversionResult refine(const ForwardOperator& op, const GravityMap& observed,
                       const VolumeField& dl_prediction, InversionConfig cfg);

inline constexpr double kDefaultDensityCutoff = -7.0;  // kg/m^3

/// Binary mask of cells with value <= cutoff (CO2 anomalies are negative).
VolumeField threshold_model(const VolumeField& model, double cutoff = kDefaultDensityCutoff);

} // namespace co2grav
