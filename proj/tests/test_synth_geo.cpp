#include "co2grav/error.hpp"
#include "co2grav/synth_geo.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace co2grav;

namespace {

GridPtr cube(std::size_t n, double d = 1.0) {
  return std::make_shared<const ReservoirGrid>(ReservoirGrid::full(n, n, n, d, d, d, {0, 0, 0}));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Pooled lag correlation along x, y and z: sum x(p) x(p + lag e) over all
// valid pairs divided by the pooled second moment.
struct LagAccumulator {
  double cross = 0.0, pairs = 0.0, sq = 0.0, cells = 0.0;
  void add(const VolumeField& f, std::size_t lag) {
    const auto& g = f.grid();
    for (std::size_t k = 0; k < g.nz(); ++k)
      for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
          const double v = f.at(i, j, k);
          sq += v * v;
          cells += 1;
          if (i + lag < g.nx()) {
            cross += v * f.at(i + lag, j, k);
            pairs += 1;
          }
          if (j + lag < g.ny()) {
            cross += v * f.at(i, j + lag, k);
            pairs += 1;
          }
          if (k + lag < g.nz()) {
            cross += v * f.at(i, j, k + lag);
            pairs += 1;
          }
        }
  }
  double value() const { return (cross / pairs) / (sq / cells); }
};

double co2_volume(const VolumeField& phi, const VolumeField& sat) {
  double v = 0.0;
  const double cv = phi.grid().cell_volume();
  for (std::size_t c = 0; c < phi.size(); ++c)
    v += phi[c] * sat[c] * cv;
  return v;
}

double mean_depth(const VolumeField& phi, const VolumeField& sat) {
  double w = 0.0, wz = 0.0;
  const auto& g = phi.grid();
  for (std::size_t c = 0; c < phi.size(); ++c) {
    const auto [i, j, k] = g.unravel(c);
    const double m = phi[c] * sat[c];
    w += m;
    wz += m * cell_center(g, i, j, k).z;
  }
  return wz / w;
}

} // namespace

TEST_CASE("gaussian field is deterministic in its seed") {
  const auto g = cube(12);
  const auto a = sample_gaussian_field(g, 3.0, 42);
  const auto b = sample_gaussian_field(g, 3.0, 42);
  const auto c = sample_gaussian_field(g, 3.0, 43);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  CHECK(a.kind() == FieldKind::scalar);
}

TEST_CASE("gaussian field rejects a nonpositive correlation length") {
  const auto g = cube(4);
  CHECK_THROWS_AS(sample_gaussian_field(g, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(sample_gaussian_field(g, -2.0, 1), ValidationError);
  CHECK_THROWS_AS(sample_gaussian_field(g, NAN, 1), ValidationError);
  CHECK_THROWS_AS(sample_gaussian_field(nullptr, 1.0, 1), ValidationError);
}

TEST_CASE("short correlation length approaches white noise") {
  const auto f = sample_gaussian_field(cube(32), 0.05, 7);
  LagAccumulator lag1;
  lag1.add(f, 1);
  CHECK(std::abs(lag1.value()) < 0.1);
}

TEST_CASE("lag correlations follow the gaussian covariance") {
  const auto g = cube(40);
  const double L = 2.0;
  for (std::size_t lag : {1u, 2u, 3u, 5u}) {
    LagAccumulator acc;
    for (std::uint64_t s = 0; s < 4; ++s)
      acc.add(sample_gaussian_field(g, L, 100 + s), lag);
    const double r = static_cast<double>(lag);
    CHECK(std::abs(acc.value() - std::exp(-r * r / (2 * L * L))) < 0.04);
  }
}

TEST_CASE("derived seeds are distinct per stream") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t st = 0; st < 64; ++st)
      seen.insert(derive_seed(s, st));
  CHECK(seen.size() == 256);
}

TEST_CASE("geology realizations respect bounds and are deterministic") {
  const auto g = cube(16);
  const GeoStatsParams p;
  const auto a = realize_geology(g, p, 5);
  const auto b = realize_geology(g, p, 5);
  CHECK(std::equal(a.porosity.values().begin(), a.porosity.values().end(),
                   b.porosity.values().begin()));
  CHECK(std::equal(a.logperm.values().begin(), a.logperm.values().end(),
                   b.logperm.values().begin()));
  CHECK(a.corr_length == b.corr_length);
  CHECK(a.corr_length >= 1.0);
  for (double v : a.porosity.values()) {
    CHECK(v >= 0.10);
    CHECK(v <= 0.40);
  }
  for (double v : a.logperm.values()) {
    CHECK(v >= -5.0);
    CHECK(v <= 10.0);
  }

  // Wide std forces clipping at both porosity bounds.
  GeoStatsParams wide;
  wide.porosity_std = 0.5;
  wide.corr_length_mean = 2.0;
  wide.corr_length_std = 0.1;
  const auto w = realize_geology(g, wide, 9);
  const auto [lo, hi] = std::minmax_element(w.porosity.values().begin(), w.porosity.values().end());
  CHECK(*lo == 0.10);
  CHECK(*hi == 0.40);
}

TEST_CASE("perfect porosity-permeability correlation gives an affine relation") {
  GeoStatsParams p;
  p.poro_perm_corr = 1.0;
  const auto r = realize_geology(cube(16), p, 3);
  CHECK(pearson(r.porosity.values(), r.logperm.values()) > 0.999);
  // Exact affine map where neither field is clipped.
  for (std::size_t c = 0; c < r.porosity.size(); ++c) {
    const double z = (r.porosity[c] - p.porosity_mean) / p.porosity_std;
    CHECK(r.logperm[c] == doctest::Approx(p.logperm_mean + p.logperm_std * z).epsilon(1e-9));
  }
}

TEST_CASE("geostatistics parameters are validated") {
  const auto g = cube(4);
  GeoStatsParams p;
  p.porosity_std = 0.0;
  CHECK_THROWS_AS(realize_geology(g, p, 1), ValidationError);
  p = {};
  p.poro_perm_corr = 1.5;
  CHECK_THROWS_AS(realize_geology(g, p, 1), ValidationError);
  p = {};
  p.logperm_lower = 11.0;
  CHECK_THROWS_AS(realize_geology(g, p, 1), ValidationError);
  p = {};
  p.porosity_upper = 0.5;
  CHECK_THROWS_AS(realize_geology(g, p, 1), ValidationError);
}

TEST_CASE("density change examples") {
  const auto g = cube(2);
  InjectionScenario sc;
  sc.rho_brine = 1000.0;
  const VolumeField phi(g, FieldKind::porosity, std::vector<double>(8, 0.2));
  const VolumeField ds(g, FieldKind::saturation, {0.5, 0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  const auto d = density_change(phi, ds, sc);
  CHECK(d[0] == doctest::Approx(-30.0).epsilon(1e-14));
  CHECK(d[1] == 0.0);

  const VolumeField phi4(g, FieldKind::porosity, std::vector<double>(8, 0.4));
  const VolumeField full(g, FieldKind::saturation, std::vector<double>(8, 1.0));
  const auto d2 = density_change(phi4, full, InjectionScenario{});
  for (double v : d2.values())
    CHECK(v == doctest::Approx(-132.0).epsilon(1e-14));

  CHECK_THROWS_AS(density_change(ds, phi, sc), ValidationError);
}

TEST_CASE("density change is zero outside the mask and nonpositive inside") {
  const auto g = std::make_shared<const ReservoirGrid>(default_desk_grid(8));
  const auto geo = realize_geology(g, {}, 4);
  std::vector<double> s(g->size());
  for (std::size_t c = 0; c < s.size(); ++c)
    s[c] = static_cast<double>(c % 7) / 7.0;
  const auto d = density_change(geo.porosity, VolumeField(g, FieldKind::saturation, s), {});
  for (std::size_t c = 0; c < d.size(); ++c) {
    if (!g->in_mask(c))
      CHECK(d[c] == 0.0);
    CHECK(d[c] <= 0.0);
  }
}

TEST_CASE("default well sits at the bottom of the center column") {
  const auto g = default_desk_grid(16);
  const auto w = default_well_cell(g);
  CHECK(w.i == 8);
  CHECK(w.j == 8);
  CHECK(g.in_mask(g.linear(w.i, w.j, w.k)));
  for (std::size_t k = w.k + 1; k < g.nz(); ++k)
    CHECK_FALSE(g.in_mask(g.linear(w.i, w.j, k)));
  const ReservoirGrid empty(2, 2, 2, 1, 1, 1, {}, std::vector<std::uint8_t>(8, 0));
  CHECK_THROWS_AS(default_well_cell(empty), ValidationError);
}

TEST_CASE("plume volume matches the injected volume") {
  const auto g = std::make_shared<const ReservoirGrid>(default_desk_grid(16));
  const auto geo = realize_geology(g, {}, 21);
  const InjectionScenario sc;
  for (double t : {0.5, 1.0, 50.0, 100.0, 100.5, 300.0, 500.0}) {
    const auto sat = simulate_plume(geo.porosity, geo.logperm, sc, t);
    const double expect = 14400.0 * 365.25 * std::min(t, 100.0);
    CHECK(std::abs(co2_volume(geo.porosity, sat) - expect) <= 1e-6 * expect);
  }
}

TEST_CASE("plume saturation stays in the mask and below s_max") {
  const auto g = std::make_shared<const ReservoirGrid>(default_desk_grid(16));
  const auto geo = realize_geology(g, {}, 22);
  const InjectionScenario sc;
  for (double t : {10.0, 100.0, 400.0}) {
    const auto sat = simulate_plume(geo.porosity, geo.logperm, sc, t);
    std::size_t partial = 0;
    for (std::size_t c = 0; c < sat.size(); ++c) {
      if (!g->in_mask(c))
        CHECK(sat[c] == 0.0);
      CHECK(sat[c] <= sc.s_max);
      partial += sat[c] > 0.0 && sat[c] < sc.s_max;
    }
    if (t <= sc.injection_years)
      CHECK(partial <= 1);
  }
}

TEST_CASE("zero time gives an empty plume") {
  const auto g = std::make_shared<const ReservoirGrid>(default_desk_grid(8));
  const auto geo = realize_geology(g, {}, 1);
  const auto sat = simulate_plume(geo.porosity, geo.logperm, {}, 0.0);
  for (double v : sat.values())
    CHECK(v == 0.0);
}

TEST_CASE("migration keeps mass and never deepens the plume") {
  const auto g = std::make_shared<const ReservoirGrid>(default_desk_grid(16));
  const InjectionScenario sc;
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto geo = realize_geology(g, {}, seed);
    const auto s100 = simulate_plume(geo.porosity, geo.logperm, sc, 100.0);
    const auto s500 = simulate_plume(geo.porosity, geo.logperm, sc, 500.0);
    const double m100 = co2_volume(geo.porosity, s100), m500 = co2_volume(geo.porosity, s500);
    CHECK(std::abs(m500 - m100) <= 1e-9 * m100);
    CHECK(mean_depth(geo.porosity, s500) <= mean_depth(geo.porosity, s100));
  }
}

TEST_CASE("greedy fill order: shallowest first, then highest permeability") {
  // 3 x 1 x 2 block, well at the bottom middle.
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(3, 1, 2, 10, 10, 10, {}));
  const VolumeField phi(g, FieldKind::porosity, std::vector<double>(6, 0.25));
  // Top row: (0,0,0) lp 1, (1,0,0) lp 0, (2,0,0) lp 2. Bottom row: 5, 0, 6.
  const VolumeField lp(g, FieldKind::permeability_log, {1, 0, 2, 5, 0, 6});
  InjectionScenario sc;
  sc.well_cell = Index3{1, 0, 1};
  const double cap = 0.25 * sc.s_max * 1000.0;  // m^3 per cell
  sc.rate = 2.5 * cap / kDaysPerYear;            // 2.5 cells per year
  const auto sat = simulate_plume(phi, lp, sc, 1.0);
  // well, then (1,0,0) shallow, then (2,0,0) over (0,0,0) by permeability.
  CHECK(sat[g->linear(1, 0, 1)] == doctest::Approx(0.8));
  CHECK(sat[g->linear(1, 0, 0)] == doctest::Approx(0.8));
  CHECK(sat[g->linear(2, 0, 0)] == doctest::Approx(0.4));
  CHECK(sat[g->linear(0, 0, 0)] == 0.0);
  CHECK(sat[g->linear(0, 0, 1)] == 0.0);
  CHECK(sat[g->linear(2, 0, 1)] == 0.0);
}

TEST_CASE("migration sweeps move CO2 one layer up per sweep") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(1, 1, 3, 10, 10, 10, {}));
  const VolumeField phi(g, FieldKind::porosity, std::vector<double>(3, 0.2));
  const VolumeField lp(g, FieldKind::permeability_log, std::vector<double>(3, 0.0));
  InjectionScenario sc;
  sc.injection_years = 1.0;
  sc.migration_years = 5.0;
  sc.sweeps_per_year = 1.0;
  sc.rate = 0.2 * sc.s_max * 1000.0 / kDaysPerYear;  // one cell in one year
  CHECK(simulate_plume(phi, lp, sc, 1.0)[2] == doctest::Approx(0.8));
  const auto one = simulate_plume(phi, lp, sc, 2.0);
  CHECK(one[2] == 0.0);
  CHECK(one[1] == doctest::Approx(0.8));
  const auto two = simulate_plume(phi, lp, sc, 3.0);
  CHECK(two[0] == doctest::Approx(0.8));
  CHECK(two[1] == 0.0);
  const auto many = simulate_plume(phi, lp, sc, 6.0);
  CHECK(many[0] == doctest::Approx(0.8));
}

TEST_CASE("simulate_plume rejects bad inputs") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(2, 2, 2, 10, 10, 10, {}));
  const VolumeField phi(g, FieldKind::porosity, std::vector<double>(8, 0.2));
  const VolumeField lp(g, FieldKind::permeability_log, std::vector<double>(8, 0.0));
  InjectionScenario sc;
  CHECK_THROWS_AS(simulate_plume(phi, lp, sc, -1.0), ValidationError);
  CHECK_THROWS_AS(simulate_plume(phi, lp, sc, 501.0), ValidationError);
  // 8000 m^3 of rock cannot hold years of injection.
  CHECK_THROWS_AS(simulate_plume(phi, lp, sc, 1.0), ValidationError);
  CHECK_THROWS_AS(simulate_plume(lp, phi, sc, 0.0), ValidationError);

  const ReservoirGrid half_mask(2, 2, 2, 10, 10, 10, {}, {1, 1, 1, 1, 0, 0, 0, 0});
  const auto hg = std::make_shared<const ReservoirGrid>(half_mask);
  sc.well_cell = Index3{0, 0, 1};
  CHECK_THROWS_AS(simulate_plume(VolumeField(hg, FieldKind::porosity, std::vector<double>(8, 0.2)),
                                 VolumeField(hg, FieldKind::permeability_log, std::vector<double>(8, 0.0)),
                                 sc, 0.0),
                  ValidationError);
  sc.well_cell = Index3{5, 0, 0};
  CHECK_THROWS_AS(simulate_plume(phi, lp, sc, 0.0), ValidationError);

  InjectionScenario bad;
  bad.rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.s_max = 1.2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("unreachable pore space is reported") {
  // Two disconnected mask cells; the well can only reach its own.
  const ReservoirGrid gg(3, 1, 1, 10, 10, 10, {}, {1, 0, 1});
  const auto g = std::make_shared<const ReservoirGrid>(gg);
  const VolumeField phi(g, FieldKind::porosity, std::vector<double>(3, 0.2));
  const VolumeField lp(g, FieldKind::permeability_log, std::vector<double>(3, 0.0));
  InjectionScenario sc;
  sc.well_cell = Index3{0, 0, 0};
  sc.rate = 1.5 * 0.2 * 0.8 * 1000.0 / kDaysPerYear;
  CHECK_THROWS_AS(simulate_plume(phi, lp, sc, 1.0), ValidationError);
}

TEST_CASE("time-step sampling windows") {
  std::mt19937_64 rng(8);
  std::size_t early = 0;
  for (std::size_t n = 0; n < 500; ++n) {
    const double t = sample_time_step(n, 500, rng);
    CHECK(t > 0.0);
    if (n < 100)
      CHECK(t <= 100.0);
    else
      CHECK(t <= 500.0);
    early += t <= 100.0;
  }
  CHECK(early >= 100);
  CHECK_THROWS_AS(sample_time_step(500, 500, rng), ValidationError);
}

TEST_SUITE("montecarlo") {
  TEST_CASE("gaussian field with L = 26 on 64^3 has zero mean and unit std") {
    // A single 64^3 field with L = 26 holds only a handful of independent
    // patches (its mean alone has std ~0.5), so the moments are pooled over
    // many seeds.
    const auto g = cube(64);
    constexpr std::uint64_t kSeeds = 200;
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
      const auto f = sample_gaussian_field(g, 26.0, s);
      for (double v : f.values()) {
        sum += v;
        sq += v * v;
      }
      n += static_cast<double>(f.size());
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    MESSAGE("pooled mean " << mean << ", std " << sd);
    CHECK(mean > -0.1);
    CHECK(mean < 0.1);
    CHECK(sd > 0.8);
    CHECK(sd < 1.2);
  }

  TEST_CASE("porosity-permeability correlation on 64^3") {
    const auto g = cube(64);
    const GeoStatsParams p;
    // Pooled covariance of the standardized fields over realizations.
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0, n = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
      const auto r = realize_geology(g, p, 500 + s);
      for (std::size_t c = 0; c < r.porosity.size(); ++c) {
        const double x = r.porosity[c], y = r.logperm[c];
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
        n += 1;
      }
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
    MESSAGE("pooled corr " << corr);
    CHECK(corr > 0.15);
    CHECK(corr < 0.45);
  }
}
