#include "co2grav/metrics.hpp"

#include "co2grav/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace co2grav {

namespace {

void require_same_grid(const VolumeField& a, const VolumeField& b) {
  if (a.grid_ptr() != b.grid_ptr() && !a.grid().same_as(b.grid()))
    throw GeometryError("fields live on different grids");
}

void require_binary(const VolumeField& f) {
  if (f.kind() != FieldKind::binary_mask)
    throw ValidationError("dice expects binary_mask fields");
}

} // namespace

double mse_model(const VolumeField& pred, const VolumeField& truth) {
  require_same_grid(pred, truth);
  if (pred.kind() != truth.kind())
    throw ValidationError("mse_model: field kinds differ");
  double acc = 0.0;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    const double d = pred[c] - truth[c];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double mse_data(const ForwardOperator& op, const VolumeField& pred, const GravityMap& observed) {
  if (observed.normalized())
    throw ValidationError("mse_data needs the raw gravity map, not the z-scored one");
  if (observed.sensors_ptr() != op.sensors_ptr() && !observed.sensors().same_as(op.sensors()))
    throw GeometryError("observed map is not on the operator sensor grid");
  const auto response = op.forward(pred);
  double acc = 0.0;
  for (std::size_t s = 0; s < response.size(); ++s) {
    const double d = response[s] - observed[s];
    acc += d * d;
  }
  return acc / static_cast<double>(response.size());
}

double r_squared(const VolumeField& pred, const VolumeField& truth) {
  require_same_grid(pred, truth);
  const auto t = truth.values();
  const double mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t c = 0; c < t.size(); ++c) {
    ss_res += (t[c] - pred[c]) * (t[c] - pred[c]);
    ss_tot += (t[c] - mean) * (t[c] - mean);
  }
  if (ss_tot == 0.0)
    throw ValidationError("r_squared is undefined for a constant truth field");
  return 1.0 - ss_res / ss_tot;
}

double dice(const VolumeField& pred_mask, const VolumeField& truth_mask) {
  require_binary(pred_mask);
  require_binary(truth_mask);
  require_same_grid(pred_mask, truth_mask);
  std::size_t both = 0, np = 0, nt = 0;
  for (std::size_t c = 0; c < pred_mask.size(); ++c) {
    const bool p = pred_mask[c] != 0.0, t = truth_mask[c] != 0.0;
    np += p;
    nt += t;
    both += p && t;
  }
  if (np + nt == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(np + nt);
}

VolumeField nonzero_mask(const VolumeField& field, double eps) {
  std::vector<double> out(field.size());
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = std::abs(field[c]) > eps ? 1.0 : 0.0;
  return {field.grid_ptr(), FieldKind::binary_mask, std::move(out)};
}

ClassWeights class_weights(std::uint64_t n_background, std::uint64_t n_foreground) {
  if (n_background == 0 || n_foreground == 0)
    throw ValidationError("class weights need a nonzero count for every class");
  // For two classes w_bg = 2 N_fg / (N_bg + N_fg). The rarer class takes the
  // remainder, so the pair sums to exactly 2 in floating point.
  constexpr double classes = 2.0;
  const double nb = static_cast<double>(n_background), nf = static_cast<double>(n_foreground);
  if (nb >= nf) {
    const double w_bg = classes * (nf / (nb + nf));
    return {w_bg, classes - w_bg};
  }
  const double w_fg = classes * (nb / (nb + nf));
  return {classes - w_fg, w_fg};
}

double gdl_loss(std::span<const double> pred, std::span<const double> truth,
                ClassWeights weights) {
  if (pred.size() != truth.size())
    throw DimensionError("gdl_loss: prediction and mask sizes differ");
  if (!(weights.background > 0.0) || !(weights.foreground > 0.0))
    throw ValidationError("gdl_loss: class weights must be positive");
  double inter_fg = 0.0, inter_bg = 0.0, denom_fg = 0.0, denom_bg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i], t = truth[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError("gdl_loss: probabilities must lie in [0, 1]");
    if (t != 0.0 && t != 1.0)
      throw ValidationError("gdl_loss: truth must be binary");
    const double pb = 1.0 - p, tb = 1.0 - t;
    inter_fg += t * p;
    inter_bg += tb * pb;
    denom_fg += t * t + p * p;
    denom_bg += tb * tb + pb * pb;
  }
  const double denom = weights.background * denom_bg + weights.foreground * denom_fg;
  if (denom == 0.0)
    throw ValidationError("gdl_loss: empty denominator");
  return 1.0 - 2.0 * (weights.background * inter_bg + weights.foreground * inter_fg) / denom;
}

double gdl_loss(const VolumeField& pred_prob, const VolumeField& truth_mask, ClassWeights weights) {
  require_same_grid(pred_prob, truth_mask);
  return gdl_loss(pred_prob.values(), truth_mask.values(), weights);
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty())
    throw ValidationError("cannot summarize an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  SummaryStats out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v)
    var += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(var / n);
  auto pct = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  out.p25 = pct(0.25);
  out.median = pct(0.5);
  out.p75 = pct(0.75);
  return out;
}

SampleScores score_sample(std::string id, const ForwardOperator& op, const VolumeField& pred,
                          const VolumeField& truth, const VolumeField& truth_mask,
                          const GravityMap& observed_raw, const double* cutoff) {
  SampleScores s;
  s.id = std::move(id);
  s.mse_model = mse_model(pred, truth);
  s.mse_data = mse_data(op, pred, observed_raw);
  s.r_squared = r_squared(pred, truth);
  const auto pred_mask = cutoff ? [&] {
    std::vector<double> m(pred.size());
    for (std::size_t c = 0; c < m.size(); ++c)
      m[c] = pred[c] <= *cutoff ? 1.0 : 0.0;
    return VolumeField(pred.grid_ptr(), FieldKind::binary_mask, std::move(m));
  }()
                                : nonzero_mask(pred);
  s.dice = dice(pred_mask, truth_mask);
  return s;
}

SummaryStats EvalReport::aggregate(double SampleScores::*metric) const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples)
    v.push_back(s.*metric);
  return summarize(v);
}

nlohmann::json EvalReport::to_json() const {
  auto stats = [&](double SampleScores::*m) {
    const auto a = aggregate(m);
    return nlohmann::json{
        {"mean", a.mean}, {"std", a.std}, {"median", a.median}, {"p25", a.p25}, {"p75", a.p75}};
  };
  nlohmann::json j;
  j["samples"] = samples.size();
  j["metrics"] = {{"mse_model", stats(&SampleScores::mse_model)},
                  {"mse_data", stats(&SampleScores::mse_data)},
                  {"r_squared", stats(&SampleScores::r_squared)},
                  {"dice", stats(&SampleScores::dice)}};
  j["units"] = {{"mse_model", "(kg/m^3)^2"}, {"mse_data", "uGal^2"}, {"r_squared", "1"},
                {"dice", "1"}};
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "id,mse_model,mse_data,r_squared,dice\n" << std::setprecision(17);
  for (const auto& s : samples)
    os << s.id << ',' << s.mse_model << ',' << s.mse_data << ',' << s.r_squared << ',' << s.dice
       << '\n';
  return os.str();
}

} // namespace co2grav
