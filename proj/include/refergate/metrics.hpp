#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace refergate {

enum class MetricKind { Auroc, Accuracy, BalancedAccuracy, AveragePrecision, F1 };

const char* metric_name(MetricKind kind);                 // "auroc", "acc", ...
std::optional<MetricKind> parse_metric_name(const std::string& name);

// A metric value, or the undefined marker when the definition degenerates
// (e.g. AUROC with a single class present). Undefined never silently becomes
// 0 or NaN.
struct MetricValue {
  MetricKind kind = MetricKind::Auroc;
  std::optional<double> value;

  bool defined() const { return value.has_value(); }
};

// Mann-Whitney style rank computation, exactly equivalent to the pairwise
// double sum (1/(n0 n1)) sum_i sum_j 1[s_i > s_j]. Ties contribute 0 by
// default; half_tie_credit switches to the usual 1/2 convention.
MetricValue auroc(std::span<const double> scores, std::span<const int> labels,
                  bool half_tie_credit = false);

// Fraction of correct hard predictions; score >= threshold predicts 1.
MetricValue accuracy(std::span<const double> scores, std::span<const int> labels,
                     double threshold = 0.5);

// Mean of per-class recalls; undefined unless both classes are present.
MetricValue balanced_accuracy(std::span<const double> scores,
                              std::span<const int> labels,
                              double threshold = 0.5);

// Average precision via the step-wise sum over descending score thresholds,
// and F1 at the given threshold (0/0 -> 0). Both undefined when there are no
// positive labels.
std::pair<MetricValue, MetricValue> avg_precision_f1(
    std::span<const double> scores, std::span<const int> labels,
    double threshold = 0.5);

MetricValue evaluate_metric(MetricKind kind, std::span<const double> scores,
                            std::span<const int> labels, double threshold = 0.5);

// Quantile-binned reliability data. Bins are equal-count over scores sorted
// ascending; an edge that would land inside a run of tied scores is shifted
// to the end of the run so tied scores never straddle bins (identical scores
// therefore form a single effective bin). Empty bins are dropped, so
// bin_counts.size() may be less than the requested bin count.
struct CalibrationReport {
  std::vector<double> bin_edges;          // size bins+1, non-decreasing
  std::vector<double> bin_mean_score;     // size bins
  std::vector<double> bin_positive_rate;  // size bins
  std::vector<std::size_t> bin_counts;    // size bins, sums to n
  double ece = 0.0;
  std::size_t bins_requested = 0;
  bool bins_reduced = false;  // set when n < bins forced a smaller count
};

// ECE = (1/n) * sum over bins of | sum_{j in bin} (y_j - score_j) |.
CalibrationReport calibration(std::span<const double> scores,
                              std::span<const int> labels,
                              std::size_t bins = 15);

std::string calibration_to_json(const CalibrationReport& report);
CalibrationReport calibration_from_json(const std::string& text);

}  // namespace refergate
