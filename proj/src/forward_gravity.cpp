#include "co2grav/forward_gravity.hpp"

#include "co2grav/error.hpp"
#include "co2grav/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace co2grav {

namespace {

void check_station_clearance(const ReservoirGrid& grid, const SensorGrid& sensors) {
  const auto& o = grid.origin();
  const double limit = grid.dz() / 10.0;
  auto nearest = [](double pos, double origin, double d, std::size_t n) {
    const double u = std::floor((pos - origin) / d);
    return static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(n - 1)));
  };
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const auto st = sensors.station(s);
    const auto c = cell_center(grid, nearest(st.x, o.x, grid.dx(), grid.nx()),
                               nearest(st.y, o.y, grid.dy(), grid.ny()),
                               nearest(st.z, o.z, grid.dz(), grid.nz()));
    const double d =
        std::sqrt((c.x - st.x) * (c.x - st.x) + (c.y - st.y) * (c.y - st.y) + (c.z - st.z) * (c.z - st.z));
    if (d < limit)
      throw GeometryError("station " + std::to_string(s) + " coincides with a cell center");
  }
}

} // namespace

ForwardOperator::ForwardOperator(GridPtr grid, SensorGridPtr sensors, KernelMode mode,
                                 std::size_t threads)
    : grid_(std::move(grid)), sensors_(std::move(sensors)), mode_(mode),
      threads_(threads == 0 ? default_thread_count() : threads) {
  if (!grid_ || !sensors_)
    throw ValidationError("forward operator needs a grid and a sensor grid");
  check_station_clearance(*grid_, *sensors_);
  scale_ = kMicroGal * kGamma * grid_->cell_volume();

  centers_.resize(grid_->size());
  for (std::size_t c = 0; c < centers_.size(); ++c) {
    const auto [i, j, k] = grid_->unravel(c);
    centers_[c] = cell_center(*grid_, i, j, k);
  }

  if (mode_ == KernelMode::dense_matrix) {
    matrix_.resize(rows() * cols());
    parallel_for(rows(), threads_, [&](std::size_t begin, std::size_t end) {
      for (std::size_t s = begin; s < end; ++s) {
        double* row = matrix_.data() + s * cols();
        for (std::size_t c = 0; c < cols(); ++c)
          row[c] = coefficient(s, c);
      }
    });
  }
}

double ForwardOperator::coefficient(std::size_t station, std::size_t cell) const noexcept {
  const auto st = sensors_->station(station);
  const auto& c = centers_[cell];
  const double rx = c.x - st.x, ry = c.y - st.y, rz = c.z - st.z;
  const double r2 = rx * rx + ry * ry + rz * rz;
  return scale_ * rz / (r2 * std::sqrt(r2));
}

void ForwardOperator::apply(std::span<const double> model, std::span<double> out) const {
  if (model.size() != cols() || out.size() != rows())
    throw DimensionError("forward: operand sizes do not match the operator");
  parallel_for(rows(), threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      double acc = 0.0;
      if (mode_ == KernelMode::dense_matrix) {
        const double* row = matrix_.data() + s * cols();
        for (std::size_t c = 0; c < cols(); ++c)
          acc += row[c] * model[c];
      } else {
        for (std::size_t c = 0; c < cols(); ++c)
          acc += coefficient(s, c) * model[c];
      }
      out[s] = acc;
    }
  });
}

void ForwardOperator::apply_adjoint(std::span<const double> data, std::span<double> out) const {
  if (data.size() != rows() || out.size() != cols())
    throw DimensionError("adjoint: operand sizes do not match the operator");
  parallel_for(cols(), threads_, [&](std::size_t begin, std::size_t end) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(begin),
              out.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
    for (std::size_t s = 0; s < rows(); ++s) {
      const double g = data[s];
      if (mode_ == KernelMode::dense_matrix) {
        const double* row = matrix_.data() + s * cols();
        for (std::size_t c = begin; c < end; ++c)
          out[c] += row[c] * g;
      } else {
        for (std::size_t c = begin; c < end; ++c)
          out[c] += coefficient(s, c) * g;
      }
    }
  });
}

GravityMap ForwardOperator::forward(const VolumeField& density) const {
  if (density.grid_ptr() != grid_ && !density.grid().same_as(*grid_))
    throw GeometryError("density field is not on the operator grid");
  if (density.kind() != FieldKind::density_change)
    throw ValidationError("forward expects a density_change field");
  std::vector<double> g(rows());
  apply(density.values(), g);
  return {sensors_, std::move(g), false};
}

VolumeField ForwardOperator::adjoint(const GravityMap& residual) const {
  if (residual.sensors_ptr() != sensors_ && !residual.sensors().same_as(*sensors_))
    throw GeometryError("residual is not on the operator sensor grid");
  std::vector<double> v(cols());
  apply_adjoint(residual.values(), v);
  return {grid_, FieldKind::density_change, std::move(v)};
}

GravityMap forward(const ForwardOperator& op, const VolumeField& density) {
  return op.forward(density);
}

VolumeField adjoint(const ForwardOperator& op, const GravityMap& residual) {
  return op.adjoint(residual);
}

ForwardOperator subsample_sensors(const ForwardOperator& op, double spacing) {
  const auto& base = op.sensors();
  const double ratio = spacing / base.spacing();
  const double rounded = std::round(ratio);
  if (!(spacing > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
    throw ValidationError("spacing " + std::to_string(spacing) +
                          " is not an integer multiple of the base spacing " +
                          std::to_string(base.spacing()));
  const auto step = static_cast<std::size_t>(rounded);
  // Coarse station (a, b) is fine station (a * step, b * step).
  auto coarse = std::make_shared<const SensorGrid>(
      base.base_spacing(), (base.m1() - 1) / step + 1, (base.m2() - 1) / step + 1, base.x0(),
      base.y0(), base.z(), base.stride() * step);
  return {op.grid_ptr(), std::move(coarse), op.mode(), op.threads()};
}

} // namespace co2grav
