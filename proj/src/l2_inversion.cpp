#include "co2grav/l2_inversion.hpp"

#include "co2grav/error.hpp"

#include <cmath>
#include <numeric>

namespace co2grav {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x))
      return false;
  return true;
}

} // namespace

InversionResult invert(const ForwardOperator& op, const GravityMap& observed,
                       const InversionConfig& cfg) {
  if (!(cfg.rel_residual_tol > 0.0))
    throw ValidationError("relative residual tolerance must be positive");
  if (observed.normalized())
    throw ValidationError("inversion needs raw gravity in µGal, not a z-scored map");
  if (observed.sensors_ptr() != op.sensors_ptr() && !observed.sensors().same_as(op.sensors()))
    throw DimensionError("observed map is not on the operator sensor grid");
  if (!all_finite(observed.values()))
    throw ValidationError("observed gravity contains NaN");
  const auto& grid = op.grid();
  if (cfg.constraint == Constraint::masked && grid.mask_count() == 0)
    throw ValidationError("masked inversion needs a nonempty reservoir mask");

  std::vector<double> x(grid.size(), 0.0);
  if (cfg.initial_model) {
    const auto& init = *cfg.initial_model;
    if (init.grid_ptr() != op.grid_ptr() && !init.grid().same_as(grid))
      throw DimensionError("initial model is not on the operator grid");
    if (init.kind() != FieldKind::density_change)
      throw ValidationError("initial model must be a density_change field");
    x = init.to_vector();
  }

  std::vector<std::uint8_t> free(grid.size(), 1);
  if (cfg.constraint == Constraint::masked)
    for (std::size_t c = 0; c < free.size(); ++c)
      free[c] = grid.in_mask(c) ? 1 : 0;

  InversionResult result{VolumeField::zeros(op.grid_ptr(), FieldKind::density_change), {}, 0,
                         false};

  const auto g = observed.values();
  std::vector<double> r(op.rows());
  op.apply(x, r);
  for (std::size_t s = 0; s < r.size(); ++s)
    r[s] = g[s] - r[s];
  double rr = dot(r, r);
  const double g_norm = std::sqrt(dot(g, g));
  if (cfg.record_history)
    result.data_misfit_history.push_back(rr);

  auto finish = [&](bool converged) {
    result.converged = converged;
    result.model = VolumeField(op.grid_ptr(), FieldKind::density_change, std::move(x));
    return std::move(result);
  };

  if (g_norm == 0.0)
    return finish(true);

  std::vector<double> s(op.cols());
  auto project_gradient = [&] {
    op.apply_adjoint(r, s);
    for (std::size_t c = 0; c < s.size(); ++c)
      if (!free[c])
        s[c] = 0.0;
  };
  project_gradient();
  std::vector<double> p = s;
  std::vector<double> q(op.rows());
  double gamma = dot(s, s);

  while (true) {
    if (std::sqrt(rr) <= cfg.rel_residual_tol * g_norm || gamma == 0.0)
      return finish(true);
    if (result.iterations >= cfg.max_iters)
      return finish(false);

    op.apply(p, q);
    const double qq = dot(q, q);
    if (qq == 0.0)
      return finish(true);
    const double alpha = gamma / qq;
    for (std::size_t c = 0; c < x.size(); ++c)
      x[c] += alpha * p[c];
    for (std::size_t k = 0; k < r.size(); ++k)
      r[k] -= alpha * q[k];
    const double rr_next = dot(r, r);

    project_gradient();
    const double gamma_next = dot(s, s);
    const double beta = gamma_next / gamma;
    for (std::size_t c = 0; c < p.size(); ++c)
      p[c] = s[c] + beta * p[c];
    gamma = gamma_next;
    rr = rr_next;
    ++result.iterations;
    if (cfg.record_history)
      result.data_misfit_history.push_back(rr);
  }
}

InversionResult refine(const ForwardOperator& op, const GravityMap& observed,
                       const VolumeField& dl_prediction, InversionConfig cfg) {
  cfg.initial_model = dl_prediction;
  return invert(op, observed, cfg);
}

VolumeField threshold_model(const VolumeField& model, double cutoff) {
  if (model.kind() != FieldKind::density_change)
    throw ValidationError("threshold_model expects a density_change field");
  std::vector<double> out(model.size());
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = model[c] <= cutoff ? 1.0 : 0.0;
  return {model.grid_ptr(), FieldKind::binary_mask, std::move(out)};
}

} // namespace co2grav
