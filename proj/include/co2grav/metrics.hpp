#pragma once

#include "co2grav/forward_gravity.hpp"
#include "co2grav/grid.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace co2grav {

/// Mean over all cells of (pred - truth)^2.
double mse_model(const VolumeField& pred, const VolumeField& truth);

/// Mean over stations of (F(pred) - observed)^2, µGal^2. `observed` must be raw.
double mse_data(const ForwardOperator& op, const VolumeField& pred, const GravityMap& observed);

/// 1 - SS_res / SS_tot over all cells. Throws ValidationError for constant truth.
double r_squared(const VolumeField& pred, const VolumeField& truth);

/// 2 |P and T| / (|P| + |T|); two empty masks score 1.
double dice(const VolumeField& pred_mask, const VolumeField& truth_mask);

inline constexpr double kNonzeroEpsilon = 1e-6;

/// Cells with |value| > eps.
VolumeField nonzero_mask(const VolumeField& field, double eps = kNonzeroEpsilon);

struct ClassWeights {
  double background = 1.0;
  double foreground = 1.0;
};

/// w_k = (C / sum_j 1/N_j) / N_k with C = 2 classes. Throws on a zero count.
ClassWeights class_weights(std::uint64_t n_background, std::uint64_t n_foreground);

/// Two-class generalized Dice loss of soft foreground probabilities against a
/// binary mask; the background class is the complement of both.
double gdl_loss(std::span<const double> pred_prob, std::span<const double> truth_mask,
                ClassWeights weights);
double gdl_loss(const VolumeField& pred_prob, const VolumeField& truth_mask, ClassWeights weights);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

/// Linear-interpolated percentiles; throws on empty input.
SummaryStats summarize(std::span<const double> values);

struct SampleScores {
  std::string id;
  double mse_model = 0.0;
  double mse_data = 0.0;
  double r_squared = 0.0;
  double dice = 0.0;
};

/// Scores for one prediction. Dice uses the nonzero mask of `pred` unless a
/// density cutoff is given, in which case cells <= cutoff form the mask.
SampleScores score_sample(std::string id, const ForwardOperator& op, const VolumeField& pred,
                          const VolumeField& truth, const VolumeField& truth_mask,
                          const GravityMap& observed_raw, const double* cutoff = nullptr);

struct EvalReport {
  std::vector<SampleScores> samples;

  SummaryStats aggregate(double SampleScores::*metric) const;
  /// {"samples": n, "metrics": {name: {mean, std, median, p25, p75}}}
  nlohmann::json to_json() const;
  /// id,mse_model,mse_data,r_squared,dice
  std::string to_csv() const;
};

} // namespace co2grav
