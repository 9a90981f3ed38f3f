#include "co2grav/error.hpp"
#include "co2grav/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace co2grav;

namespace {

GridPtr cube4() {
  static const auto g =
      std::make_shared<const ReservoirGrid>(ReservoirGrid::full(4, 4, 4, 10, 10, 10, {0, 0, 100}));
  return g;
}

VolumeField random_field(std::mt19937_64& rng, FieldKind kind = FieldKind::density_change) {
  std::normal_distribution<double> nd(-5.0, 10.0);
  std::vector<double> v(64);
  for (auto& x : v)
    x = nd(rng);
  return {cube4(), kind, std::move(v)};
}

VolumeField random_mask(std::mt19937_64& rng, double p) {
  std::bernoulli_distribution b(p);
  std::vector<double> v(64);
  for (auto& x : v)
    x = b(rng) ? 1.0 : 0.0;
  return {cube4(), FieldKind::binary_mask, std::move(v)};
}

// Oracles walk (i, j, k) explicitly, independent of storage order.
double oracle_mse(const VolumeField& a, const VolumeField& b) {
  double s = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i)
        s += std::pow(a.at(i, j, k) - b.at(i, j, k), 2);
  return s / 64.0;
}

double oracle_r2(const VolumeField& p, const VolumeField& t) {
  double mean = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i)
        mean += t.at(i, j, k);
  mean /= 64.0;
  double res = 0, tot = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) {
        res += std::pow(t.at(i, j, k) - p.at(i, j, k), 2);
        tot += std::pow(t.at(i, j, k) - mean, 2);
      }
  return 1.0 - res / tot;
}

double oracle_dice(const VolumeField& p, const VolumeField& t) {
  int inter = 0, sp = 0, st = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) {
        const int a = p.at(i, j, k) == 1.0, b = t.at(i, j, k) == 1.0;
        inter += a * b;
        sp += a;
        st += b;
      }
  return sp + st == 0 ? 1.0 : 2.0 * inter / (sp + st);
}

double oracle_gdl(const VolumeField& p, const VolumeField& t, double wbg, double wfg) {
  // Two classes; class 0 is background (1 - x), class 1 foreground.
  double num = 0, den = 0;
  for (int cls = 0; cls < 2; ++cls) {
    const double w = cls == 0 ? wbg : wfg;
    double n = 0, d = 0;
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i) {
          const double pp = cls == 0 ? 1.0 - p.at(i, j, k) : p.at(i, j, k);
          const double tt = cls == 0 ? 1.0 - t.at(i, j, k) : t.at(i, j, k);
          n += tt * pp;
          d += tt * tt + pp * pp;
        }
    num += w * n;
    den += w * d;
  }
  return 1.0 - 2.0 * num / den;
}

} // namespace

TEST_CASE("metrics match brute-force oracles on random 4^3 instances") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_field(rng), t = random_field(rng);
    CHECK(std::abs(mse_model(p, t) - oracle_mse(p, t)) <= 1e-12 * std::max(1.0, oracle_mse(p, t)));
    CHECK(std::abs(r_squared(p, t) - oracle_r2(p, t)) <= 1e-12 * std::max(1.0, std::abs(oracle_r2(p, t))));
    const auto pm = random_mask(rng, u(rng)), tm = random_mask(rng, u(rng));
    CHECK(std::abs(dice(pm, tm) - oracle_dice(pm, tm)) <= 1e-12);
    std::vector<double> soft(64);
    for (auto& x : soft)
      x = u(rng);
    const VolumeField sp(cube4(), FieldKind::scalar, soft);
    const double wbg = 0.1 + u(rng), wfg = 0.1 + u(rng);
    CHECK(std::abs(gdl_loss(sp, tm, {wbg, wfg}) - oracle_gdl(sp, tm, wbg, wfg)) <= 1e-12);
  }
}

TEST_CASE("mse_model examples") {
  std::mt19937_64 rng(1);
  const auto t = random_field(rng);
  CHECK(mse_model(t, t) == 0.0);
  auto shifted = t.to_vector();
  for (auto& v : shifted)
    v += 1.0;
  CHECK(mse_model(VolumeField(cube4(), FieldKind::density_change, shifted), t) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(mse_model(t, VolumeField::zeros(cube4(), FieldKind::scalar)), ValidationError);
  const auto other = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(4, 4, 4, 11, 10, 10, {0, 0, 100}));
  CHECK_THROWS_AS(mse_model(t, VolumeField::zeros(other, FieldKind::density_change)), GeometryError);
}

TEST_CASE("r_squared examples") {
  std::mt19937_64 rng(2);
  const auto t = random_field(rng);
  CHECK(r_squared(t, t) == 1.0);
  double mean = 0;
  for (double v : t.values())
    mean += v;
  mean /= 64.0;
  CHECK(std::abs(r_squared(VolumeField(cube4(), FieldKind::density_change, std::vector<double>(64, mean)), t)) <
        1e-12);
  auto anti = t.to_vector();
  for (auto& v : anti)
    v = 2 * mean - v;
  CHECK(r_squared(VolumeField(cube4(), FieldKind::density_change, anti), t) < 0.0);
  CHECK_THROWS_AS(r_squared(t, VolumeField::zeros(cube4(), FieldKind::density_change)), ValidationError);
  // r^2 = 1 only for an exact match.
  auto nudged = t.to_vector();
  nudged[17] += 1e-3;
  CHECK(r_squared(VolumeField(cube4(), FieldKind::density_change, nudged), t) < 1.0);
}

TEST_CASE("dice examples") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(10, 10, 3, 1, 1, 1, {}));
  auto mask_from = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> v(g->size(), 0.0);
    for (std::size_t c = lo; c < hi; ++c)
      v[c] = 1.0;
    return VolumeField(g, FieldKind::binary_mask, std::move(v));
  };
  const auto a = mask_from(0, 100), b = mask_from(40, 140), c = mask_from(150, 250);
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, c) == 0.0);
  CHECK(dice(a, b) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(dice(b, a) == dice(a, b));
  const auto empty = mask_from(0, 0);
  CHECK(dice(empty, empty) == 1.0);
  CHECK(dice(empty, a) == 0.0);
  CHECK_THROWS_AS(dice(VolumeField::zeros(g, FieldKind::density_change), a), ValidationError);
}

TEST_CASE("dice ignores traversal order") {
  std::mt19937_64 rng(4);
  const auto p = random_mask(rng, 0.4), t = random_mask(rng, 0.5);
  std::vector<std::size_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> pp(64), tt(64);
  for (std::size_t c = 0; c < 64; ++c) {
    pp[c] = p[perm[c]];
    tt[c] = t[perm[c]];
  }
  CHECK(dice(VolumeField(cube4(), FieldKind::binary_mask, pp),
             VolumeField(cube4(), FieldKind::binary_mask, tt)) == dice(p, t));
}

TEST_CASE("nonzero mask uses 1e-6") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(4, 1, 1, 1, 1, 1, {}));
  const auto m = nonzero_mask(VolumeField(g, FieldKind::density_change, {0.0, 5e-7, -2e-6, 3.0}));
  CHECK(m[0] == 0.0);
  CHECK(m[1] == 0.0);
  CHECK(m[2] == 1.0);
  CHECK(m[3] == 1.0);
}

TEST_CASE("gdl_loss examples and range") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ClassWeights w = class_weights(600, 40);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_mask(rng, 0.3);
    CHECK(std::abs(gdl_loss(t.values(), t.values(), w)) < 1e-12);
    std::vector<double> inv(64);
    for (std::size_t c = 0; c < 64; ++c)
      inv[c] = 1.0 - t[c];
    CHECK(gdl_loss(inv, t.values(), w) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> soft(64);
    for (auto& x : soft)
      x = u(rng);
    const double l = gdl_loss(soft, t.values(), w);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
  const std::vector<double> a{0.5, 0.5}, bad{0.5, 2.0}, t{0.0, 1.0}, nb{0.0, 0.5};
  CHECK_THROWS_AS(gdl_loss(a, std::vector<double>{1.0}, w), DimensionError);
  CHECK_THROWS_AS(gdl_loss(bad, t, w), ValidationError);
  CHECK_THROWS_AS(gdl_loss(a, nb, w), ValidationError);
  CHECK_THROWS_AS(gdl_loss(a, t, {0.0, 1.0}), ValidationError);
}

TEST_CASE("class weights") {
  auto w = class_weights(500, 500);
  CHECK(w.background == 1.0);
  CHECK(w.foreground == 1.0);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint64_t> n(1, 10'000'000);
  std::uniform_int_distribution<std::uint64_t> small(1, 2000);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = trial % 2 ? n(rng) : small(rng), b = trial % 3 ? small(rng) : n(rng);
    w = class_weights(a, b);
    CHECK(w.background + w.foreground == 2.0);
    CHECK(w.background == doctest::Approx(2.0 * double(b) / double(a + b)).epsilon(1e-14));
    // The rarer class gets the larger weight.
    CHECK((a >= b) == (w.background <= w.foreground));
  }
  w = class_weights(666'000, 1'000);
  CHECK(w.background == doctest::Approx(0.003).epsilon(0.1));
  CHECK(w.foreground == doctest::Approx(1.997).epsilon(0.1));
  // Independent: w_k = 2 N_other / (N_bg + N_fg).
  CHECK(w.background == doctest::Approx(2.0 * 1000 / 667000.0).epsilon(1e-14));
  CHECK_THROWS_AS(class_weights(0, 5), ValidationError);
  CHECK_THROWS_AS(class_weights(5, 0), ValidationError);
}

TEST_CASE("mse_data examples") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(3, 3, 2, 50, 50, 50, {0, 0, 400}));
  const auto sg = std::make_shared<const SensorGrid>(40, 4, 4, 10, 10);
  const ForwardOperator op(g, sg);
  std::vector<double> one(g->size(), 0.0);
  one[4] = -30.0;
  const VolumeField cell(g, FieldKind::density_change, one);
  const auto obs = op.forward(cell);
  CHECK(mse_data(op, cell, obs) <= 1e-10);
  double sq = 0.0;
  for (double v : obs.values())
    sq += v * v;
  CHECK(mse_data(op, VolumeField::zeros(g, FieldKind::density_change), obs) ==
        doctest::Approx(sq / 16.0).epsilon(1e-14));
  const GravityMap zero(sg, std::vector<double>(16, 0.0));
  std::vector<double> twice(one);
  twice[4] *= 2;
  CHECK(mse_data(op, VolumeField(g, FieldKind::density_change, twice), zero) ==
        doctest::Approx(4.0 * mse_data(op, cell, zero)).epsilon(1e-14));
  std::vector<double> z(16);
  for (std::size_t s = 0; s < 16; ++s)
    z[s] = s % 2 ? 1.0 : -1.0;
  CHECK_THROWS_AS(mse_data(op, cell, GravityMap(sg, z, true)), ValidationError);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{4, 1, 3, 2, 5};
  const auto s = summarize(v);
  CHECK(s.mean == 3.0);
  CHECK(s.median == 3.0);
  CHECK(s.p25 == 2.0);
  CHECK(s.p75 == 4.0);
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const auto e = summarize(std::vector<double>{1, 2, 3, 4});
  CHECK(e.median == 2.5);
  CHECK(e.p25 == 1.75);
  CHECK(e.p75 == 3.25);
  const auto one = summarize(std::vector<double>{7});
  CHECK(one.p25 == 7.0);
  CHECK(one.std == 0.0);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), ValidationError);
}

TEST_CASE("evaluation report layout") {
  const auto g = std::make_shared<const ReservoirGrid>(ReservoirGrid::full(3, 3, 2, 50, 50, 50, {0, 0, 400}));
  const auto sg = std::make_shared<const SensorGrid>(40, 4, 4, 10, 10);
  const ForwardOperator op(g, sg);
  std::vector<double> t(g->size(), 0.0);
  t[4] = -30.0;
  t[5] = -3.0;
  const VolumeField truth(g, FieldKind::density_change, t);
  const auto obs = op.forward(truth);
  const auto mask = nonzero_mask(truth);

  EvalReport rep;
  rep.samples.push_back(score_sample("a", op, truth, truth, mask, obs));
  CHECK(rep.samples[0].mse_model == 0.0);
  CHECK(rep.samples[0].mse_data == 0.0);
  CHECK(rep.samples[0].r_squared == 1.0);
  CHECK(rep.samples[0].dice == 1.0);
  const double cutoff = -7.0;
  const auto thr = score_sample("b", op, truth, truth, mask, obs, &cutoff);
  CHECK(thr.dice == doctest::Approx(2.0 / 3.0));
  rep.samples.push_back(thr);

  const auto j = rep.to_json();
  CHECK(j.at("samples") == 2);
  for (const char* m : {"mse_model", "mse_data", "r_squared", "dice"}) {
    const auto& s = j.at("metrics").at(m);
    CHECK(s.at("p25").get<double>() <= s.at("median").get<double>());
    CHECK(s.at("median").get<double>() <= s.at("p75").get<double>());
    CHECK(j.at("units").contains(m));
  }
  CHECK(j.at("metrics").at("dice").at("mean").get<double>() == doctest::Approx(5.0 / 6.0));
  const auto csv = rep.to_csv();
  CHECK(csv.rfind("id,mse_model,mse_data,r_squared,dice\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
