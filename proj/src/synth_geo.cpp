#include "co2grav/synth_geo.hpp"

#include "co2grav/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

namespace co2grav {

void GeoStatsParams::validate() const {
  if (!(porosity_lower < porosity_upper) || !(logperm_lower < logperm_upper))
    throw ValidationError("geostatistics bounds must be ordered");
  if (porosity_lower < kPorosityLower || porosity_upper > kPorosityUpper)
    throw ValidationError("porosity bounds must lie within [0.10, 0.40]");
  if (!(porosity_std > 0.0) || !(logperm_std > 0.0) || !(corr_length_std > 0.0))
    throw ValidationError("geostatistics standard deviations must be positive");
  if (!(corr_length_mean > 0.0))
    throw ValidationError("correlation length mean must be positive");
  if (!(std::abs(poro_perm_corr) <= 1.0))
    throw ValidationError("porosity-permeability correlation must be in [-1, 1]");
}

void InjectionScenario::validate() const {
  if (!(rate > 0.0))
    throw ValidationError("injection rate must be positive");
  if (!(injection_years >= 0.0) || !(migration_years >= 0.0))
    throw ValidationError("scenario durations must be non-negative");
  if (!(s_max > 0.0 && s_max <= 1.0))
    throw ValidationError("s_max must be in (0, 1]");
  if (!(sweeps_per_year >= 0.0))
    throw ValidationError("sweeps_per_year must be non-negative");
  if (!(rho_co2 > 0.0) || !(rho_brine > 0.0))
    throw ValidationError("fluid densities must be positive");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over the combined state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<float> gaussian_kernel(double corr_length, std::size_t& radius) {
  const double width = corr_length / std::sqrt(2.0);
  radius = static_cast<std::size_t>(std::ceil(4.0 * width));
  std::vector<double> w(2 * radius + 1);
  double energy = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    const double d = static_cast<double>(t) - static_cast<double>(radius);
    w[t] = std::exp(-d * d / (2.0 * width * width));
    energy += w[t] * w[t];
  }
  std::vector<float> out(w.size());
  const double scale = 1.0 / std::sqrt(energy);
  for (std::size_t t = 0; t < w.size(); ++t)
    out[t] = static_cast<float>(w[t] * scale);
  return out;
}

} // namespace

VolumeField sample_gaussian_field(GridPtr grid, double corr_length, std::uint64_t seed) {
  if (!(corr_length > 0.0))
    throw ValidationError("correlation length must be positive");
  if (!grid)
    throw ValidationError("gaussian field needs a grid");
  std::size_t r = 0;
  const auto w = gaussian_kernel(corr_length, r);
  const std::size_t nx = grid->nx(), ny = grid->ny(), nz = grid->nz();
  const std::size_t px = nx + 2 * r, py = ny + 2 * r, pz = nz + 2 * r;

  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> noise(px * py * pz);
  for (auto& v : noise)
    v = normal(rng);

  // x pass: (px, py, pz) -> (nx, py, pz)
  std::vector<float> a(nx * py * pz, 0.0f);
  for (std::size_t row = 0; row < py * pz; ++row) {
    const float* in = noise.data() + row * px;
    float* out = a.data() + row * nx;
    for (std::size_t t = 0; t < w.size(); ++t) {
      const float wt = w[t];
      const float* src = in + t;
      for (std::size_t i = 0; i < nx; ++i)
        out[i] += wt * src[i];
    }
  }
  noise = {};

  // y pass: (nx, py, pz) -> (nx, ny, pz)
  std::vector<float> b(nx * ny * pz, 0.0f);
  for (std::size_t k = 0; k < pz; ++k)
    for (std::size_t j = 0; j < ny; ++j) {
      float* out = b.data() + nx * (j + ny * k);
      for (std::size_t t = 0; t < w.size(); ++t) {
        const float wt = w[t];
        const float* src = a.data() + nx * (j + t + py * k);
        for (std::size_t i = 0; i < nx; ++i)
          out[i] += wt * src[i];
      }
    }
  a = {};

  // z pass: (nx, ny, pz) -> (nx, ny, nz)
  const std::size_t plane = nx * ny;
  std::vector<float> c(plane * nz, 0.0f);
  for (std::size_t k = 0; k < nz; ++k) {
    float* out = c.data() + plane * k;
    for (std::size_t t = 0; t < w.size(); ++t) {
      const float wt = w[t];
      const float* src = b.data() + plane * (k + t);
      for (std::size_t p = 0; p < plane; ++p)
        out[p] += wt * src[p];
    }
  }

  return {std::move(grid), FieldKind::scalar, std::vector<double>(c.begin(), c.end())};
}

GeologyRealization realize_geology(GridPtr grid, const GeoStatsParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> length_dist(params.corr_length_mean, params.corr_length_std);
  const double corr_length = std::max(1.0, length_dist(rng));

  const auto z1 = sample_gaussian_field(grid, corr_length, derive_seed(seed, 1));
  const auto z2 = sample_gaussian_field(grid, corr_length, derive_seed(seed, 2));

  const double c = params.poro_perm_corr;
  const double c_orth = std::sqrt(std::max(0.0, 1.0 - c * c));
  std::vector<double> phi(z1.size()), lp(z1.size());
  for (std::size_t n = 0; n < phi.size(); ++n) {
    phi[n] = std::clamp(params.porosity_mean + params.porosity_std * z1[n], params.porosity_lower,
                        params.porosity_upper);
    lp[n] = std::clamp(params.logperm_mean + params.logperm_std * (c * z1[n] + c_orth * z2[n]),
                       params.logperm_lower, params.logperm_upper);
  }
  return {VolumeField(grid, FieldKind::porosity, std::move(phi)),
          VolumeField(grid, FieldKind::permeability_log, std::move(lp)), corr_length};
}

Index3 default_well_cell(const ReservoirGrid& grid) {
  const std::size_t ci = grid.nx() / 2, cj = grid.ny() / 2;
  for (std::size_t k = grid.nz(); k-- > 0;)
    if (grid.in_mask(grid.linear(ci, cj, k)))
      return {ci, cj, k};
  for (std::size_t idx = grid.size(); idx-- > 0;)
    if (grid.in_mask(idx))
      return grid.unravel(idx);
  throw ValidationError("grid has an empty reservoir mask");
}

double injected_volume(const InjectionScenario& scenario, double t) {
  return scenario.rate * kDaysPerYear * std::min(t, scenario.injection_years);
}

namespace {

void check_same_grid(const VolumeField& a, const VolumeField& b) {
  if (a.grid_ptr() != b.grid_ptr() && !a.grid().same_as(b.grid()))
    throw GeometryError("fields live on different grids");
}

// Fills pore space from the well, shallowest frontier cell first.
void greedy_fill(const ReservoirGrid& grid, std::span<const double> phi,
                 std::span<const double> logperm, const InjectionScenario& sc, Index3 well,
                 double volume, std::vector<double>& sat) {
  if (volume <= 0.0)
    return;
  const double cell_vol = grid.cell_volume();
  struct Entry {
    std::size_t k;
    double logperm;
    std::size_t idx;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.k != b.k)
      return a.k > b.k;
    if (a.logperm != b.logperm)
      return a.logperm < b.logperm;
    return a.idx > b.idx;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> frontier(worse);
  std::vector<std::uint8_t> seen(grid.size(), 0);
  const std::size_t start = grid.linear(well.i, well.j, well.k);
  frontier.push({well.k, logperm[start], start});
  seen[start] = 1;

  double remaining = volume;
  while (!frontier.empty()) {
    const auto cur = frontier.top();
    frontier.pop();
    const double capacity = phi[cur.idx] * sc.s_max * cell_vol;
    if (remaining <= capacity) {
      sat[cur.idx] = std::min(sc.s_max, remaining / (phi[cur.idx] * cell_vol));
      return;
    }
    sat[cur.idx] = sc.s_max;
    remaining -= capacity;

    const auto [i, j, k] = grid.unravel(cur.idx);
    auto visit = [&](std::size_t ii, std::size_t jj, std::size_t kk) {
      const std::size_t n = grid.linear(ii, jj, kk);
      if (!seen[n] && grid.in_mask(n)) {
        seen[n] = 1;
        frontier.push({kk, logperm[n], n});
      }
    };
    if (i > 0) visit(i - 1, j, k);
    if (i + 1 < grid.nx()) visit(i + 1, j, k);
    if (j > 0) visit(i, j - 1, k);
    if (j + 1 < grid.ny()) visit(i, j + 1, k);
    if (k > 0) visit(i, j, k - 1);
    if (k + 1 < grid.nz()) visit(i, j, k + 1);
  }
  throw ValidationError("injected volume exceeds the pore volume reachable from the well");
}

void migrate(const ReservoirGrid& grid, std::span<const double> phi,
             std::span<const double> logperm, double s_max, std::size_t sweeps,
             std::vector<double>& sat) {
  const double cell_vol = grid.cell_volume();
  const auto nx = static_cast<long>(grid.nx());
  const auto ny = static_cast<long>(grid.ny());
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t k = 1; k < grid.nz(); ++k)
      for (long j = 0; j < ny; ++j)
        for (long i = 0; i < nx; ++i) {
          const std::size_t src = grid.linear(static_cast<std::size_t>(i), static_cast<std::size_t>(j), k);
          if (sat[src] <= 0.0)
            continue;
          std::size_t best = grid.size();
          for (long dj = -1; dj <= 1; ++dj)
            for (long di = -1; di <= 1; ++di) {
              const long ii = i + di, jj = j + dj;
              if (ii < 0 || jj < 0 || ii >= nx || jj >= ny)
                continue;
              const std::size_t n =
                  grid.linear(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), k - 1);
              if (!grid.in_mask(n) || sat[n] >= s_max)
                continue;
              if (best == grid.size() || logperm[n] > logperm[best] ||
                  (logperm[n] == logperm[best] && n < best))
                best = n;
            }
          if (best == grid.size())
            continue;
          const double src_vol = phi[src] * sat[src] * cell_vol;
          const double room = phi[best] * (s_max - sat[best]) * cell_vol;
          if (src_vol <= room) {
            sat[best] += src_vol / (phi[best] * cell_vol);
            sat[src] = 0.0;
          } else {
            sat[best] = s_max;
            sat[src] = (src_vol - room) / (phi[src] * cell_vol);
          }
          moved = true;
        }
    if (!moved)
      break;
  }
}

} // namespace

VolumeField simulate_plume(const VolumeField& porosity, const VolumeField& logperm,
                           const InjectionScenario& scenario, double t) {
  scenario.validate();
  if (porosity.kind() != FieldKind::porosity || logperm.kind() != FieldKind::permeability_log)
    throw ValidationError("simulate_plume expects porosity and log-permeability fields");
  check_same_grid(porosity, logperm);
  if (!(t >= 0.0) || t > scenario.total_years())
    throw ValidationError("time " + std::to_string(t) + " outside the scenario window");

  const auto& grid = porosity.grid();
  const Index3 well = scenario.well_cell.value_or(default_well_cell(grid));
  if (well.i >= grid.nx() || well.j >= grid.ny() || well.k >= grid.nz() ||
      !grid.in_mask(grid.linear(well.i, well.j, well.k)))
    throw ValidationError("well cell must lie inside the reservoir mask");

  const double volume = injected_volume(scenario, t);
  double capacity = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n)
    if (grid.in_mask(n))
      capacity += porosity[n] * scenario.s_max * grid.cell_volume();
  if (volume > capacity)
    throw ValidationError("injected volume exceeds the pore volume of the reservoir mask");

  std::vector<double> sat(grid.size(), 0.0);
  greedy_fill(grid, porosity.values(), logperm.values(), scenario, well, volume, sat);
  if (t > scenario.injection_years) {
    const auto sweeps = static_cast<std::size_t>(
        std::floor(scenario.sweeps_per_year * (t - scenario.injection_years)));
    migrate(grid, porosity.values(), logperm.values(), scenario.s_max, sweeps, sat);
  }
  return {porosity.grid_ptr(), FieldKind::saturation, std::move(sat)};
}

VolumeField density_change(const VolumeField& porosity, const VolumeField& delta_saturation,
                           const InjectionScenario& scenario) {
  if (porosity.kind() != FieldKind::porosity || delta_saturation.kind() != FieldKind::saturation)
    throw ValidationError("density_change expects porosity and saturation fields");
  check_same_grid(porosity, delta_saturation);
  const auto& grid = porosity.grid();
  const double contrast = scenario.rho_co2 - scenario.rho_brine;
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n)
    if (grid.in_mask(n))
      out[n] = porosity[n] * delta_saturation[n] * contrast;
  return {porosity.grid_ptr(), FieldKind::density_change, std::move(out)};
}

double sample_time_step(std::size_t sample_index, std::size_t dataset_size, std::mt19937_64& rng,
                        std::size_t early_count, double early_years, double total_years) {
  if (sample_index >= dataset_size)
    throw ValidationError("sample index beyond dataset size");
  const double horizon = sample_index < early_count ? early_years : total_years;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return horizon * (1.0 - unit(rng));
}

} // namespace co2grav
