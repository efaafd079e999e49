#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "refergate/analysis.hpp"
#include "refergate/metrics.hpp"
#include "refergate/referral.hpp"
#include "refergate/synthetic.hpp"
#include "refergate/trainers.hpp"

namespace refergate {

// Defaults reproduce the synthetic covariate-shift study end to end.
// Trainer settings were fixed by a calibration run against the library's own
// reference implementations; see README.
struct ExperimentConfig {
  SyntheticSpec spec;
  TrainerKind trainer = TrainerKind::Plain;
  ReferralPolicy policy;
  std::vector<MetricKind> metrics = {MetricKind::Auroc, MetricKind::Accuracy};
  std::size_t bins = 15;
  int grid_max = 95;

  std::size_t plain_epochs = 300;
  double plain_lr = 0.5;
  std::size_t adv_epochs = 3000;
  double adv_lr = 0.1;
  double gamma = 3.0;  // gradient-reversal multiplier
  double grad_clip = 1.0;
  std::optional<double> weight_cap;
};

// Histogram of a per-record statistic split by prediction outcome.
struct OutcomeHistogram {
  std::vector<double> edges;                      // size bins+1
  std::vector<std::array<std::size_t, 4>> counts;  // per bin: tn, fp, fn, tp
};

OutcomeHistogram outcome_histogram(const std::vector<double>& stat,
                                   const std::vector<double>& scores,
                                   const std::vector<int>& labels,
                                   std::size_t bins, double threshold = 0.5);

struct ExperimentBundle {
  ExperimentConfig config;
  TrainedLinearModel model;
  PredictionSet predictions_id;
  PredictionSet predictions_ood;

  struct NamedCurve {
    std::string name;  // e.g. "acc_ood_standard"
    ReferralCurve curve;
  };
  std::vector<NamedCurve> curves;

  CalibrationReport calibration_id;
  CalibrationReport calibration_ood;
  SegregationReport segregation;

  struct NamedHistogram {
    std::string name;  // e.g. "entropy_ood"
    OutcomeHistogram hist;
  };
  std::vector<NamedHistogram> histograms;

  const ReferralCurve* find_curve(const std::string& name) const;
};

ExperimentBundle run_shift_experiment(const ExperimentConfig& config);

// Serializes the bundle into dir: spec.json, model.json,
// predictions_{id,ood}.csv, curve_*.csv, calibration_*.json,
// segregation.json, hist_*.csv, summary.json. Deterministic byte-for-byte
// given the same bundle.
void save_bundle(const ExperimentBundle& bundle, const std::string& dir);

}  // namespace refergate
