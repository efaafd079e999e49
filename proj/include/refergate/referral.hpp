#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refergate/metrics.hpp"
#include "refergate/predictions.hpp"
#include "refergate/uncertainty.hpp"

namespace refergate {

enum class PolicyKind { Standard, Split };

struct ReferralPolicy {
  PolicyKind kind = PolicyKind::Standard;
  UncertaintyMode uncertainty_mode = UncertaintyMode::Total;
  double threshold = 0.5;  // prediction split point; ignored by Standard
};

// Indices (ascending) into the source PredictionSet retained at one rate.
struct RetainedSet {
  std::vector<std::size_t> indices;
  double rate = 0.0;
};

// Refer the floor(rate * n) records with the highest uncertainty; ties are
// broken by record index with the lower index retained first.
RetainedSet retain_standard(const PredictionSet& set, const UncertaintyVector& u,
                            double rate);

// Within each predicted class, refer the floor(rate * |class|) records with
// the highest uncertainty; same tie-break as retain_standard. An empty class
// contributes nothing.
RetainedSet retain_split(const PredictionSet& set, const UncertaintyVector& u,
                         double rate, double threshold = 0.5);

// Metric values over the percentile grid r in {0.00, 0.01, ..., grid_max/100}
// plus their mean (AURC). Rates where the metric is undefined are recorded
// as such and skipped in the mean.
struct ReferralCurve {
  std::vector<double> rates;
  std::vector<std::optional<double>> values;
  MetricKind metric_kind = MetricKind::Auroc;
  double aurc = 0.0;
  std::size_t n_undefined = 0;
};

ReferralCurve referral_curve(const PredictionSet& set, const ReferralPolicy& policy,
                             MetricKind metric_kind, int grid_max = 95);

// Serial reference implementation; must be result-identical.
ReferralCurve referral_curve_serial(const PredictionSet& set,
                                    const ReferralPolicy& policy,
                                    MetricKind metric_kind, int grid_max = 95);

std::string curve_to_csv(const ReferralCurve& curve);  // rate,value,defined
ReferralCurve curve_from_csv(const std::string& text, MetricKind kind);

// Right-continuous empirical CDF over entropy values of one predicted class.
struct EntropyCdf {
  std::vector<double> sorted_entropies;  // ascending; empty when class absent

  bool present() const { return !sorted_entropies.empty(); }
  double eval(double h) const;              // P(H <= h)
  double inverse(double coverage) const;    // smallest h with CDF >= coverage
};

// Per-predicted-class CDFs plus the score thresholds that bound the retained
// set at coverage c: retained scores lie in [0, z0(c)] union [z1(c), 1].
struct ClassEntropyCdfs {
  EntropyCdf negatives;  // predicted score < threshold
  EntropyCdf positives;

  double z0(double coverage) const;
  double z1(double coverage) const;
};

ClassEntropyCdfs entropy_cdf(const PredictionSet& set, const UncertaintyVector& u,
                             double threshold = 0.5);

}  // namespace refergate
