#include "refergate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <json.hpp>

#include "refergate/errors.hpp"

namespace refergate {
namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores and labels differ in length");
  }
}

}  // namespace

const char* metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::Auroc: return "auroc";
    case MetricKind::Accuracy: return "acc";
    case MetricKind::BalancedAccuracy: return "bacc";
    case MetricKind::AveragePrecision: return "ap";
    case MetricKind::F1: return "f1";
  }
  return "?";
}

std::optional<MetricKind> parse_metric_name(const std::string& name) {
  if (name == "auroc") return MetricKind::Auroc;
  if (name == "acc") return MetricKind::Accuracy;
  if (name == "bacc") return MetricKind::BalancedAccuracy;
  if (name == "ap") return MetricKind::AveragePrecision;
  if (name == "f1") return MetricKind::F1;
  return std::nullopt;
}

MetricValue auroc(std::span<const double> scores, std::span<const int> labels,
                  bool half_tie_credit) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  std::uint64_t n0 = 0, n1 = 0;
  for (int y : labels) (y == 1 ? n1 : n0)++;
  if (n0 == 0 || n1 == 0) return {MetricKind::Auroc, std::nullopt};

  // Walk tie groups in ascending score order; a positive beats exactly the
  // negatives in strictly lower groups (strict inequality, ties score 0
  // unless half-credit is requested). Counts are exact in 64-bit, and the
  // final division matches the pairwise double sum bit for bit.
  std::uint64_t twice_wins = 0;  // accumulated in halves for the tie option
  std::uint64_t neg_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? group_pos : group_neg)++;
      ++j;
    }
    twice_wins += group_pos * (2 * neg_below);
    if (half_tie_credit) twice_wins += group_pos * group_neg;
    neg_below += group_neg;
    i = j;
  }
  const double value = static_cast<double>(twice_wins) /
                       (2.0 * static_cast<double>(n0) * static_cast<double>(n1));
  return {MetricKind::Auroc, value};
}

MetricValue accuracy(std::span<const double> scores, std::span<const int> labels,
                     double threshold) {
  check_lengths(scores, labels);
  if (scores.empty()) return {MetricKind::Accuracy, std::nullopt};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= threshold ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return {MetricKind::Accuracy,
          static_cast<double>(correct) / static_cast<double>(scores.size())};
}

MetricValue balanced_accuracy(std::span<const double> scores,
                              std::span<const int> labels, double threshold) {
  check_lengths(scores, labels);
  std::size_t n0 = 0, n1 = 0, c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= threshold ? 1 : 0;
    if (labels[i] == 1) {
      ++n1;
      if (pred == 1) ++c1;
    } else {
      ++n0;
      if (pred == 0) ++c0;
    }
  }
  if (n0 == 0 || n1 == 0) return {MetricKind::BalancedAccuracy, std::nullopt};
  const double recall0 = static_cast<double>(c0) / static_cast<double>(n0);
  const double recall1 = static_cast<double>(c1) / static_cast<double>(n1);
  return {MetricKind::BalancedAccuracy, 0.5 * (recall0 + recall1)};
}

std::pair<MetricValue, MetricValue> avg_precision_f1(
    std::span<const double> scores, std::span<const int> labels,
    double threshold) {
  check_lengths(scores, labels);
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y == 1);
  if (n_pos == 0) {
    return {{MetricKind::AveragePrecision, std::nullopt},
            {MetricKind::F1, std::nullopt}};
  }

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  // Step-wise sum over descending thresholds; a tie group enters as one step.
  double ap = 0.0;
  double recall_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp)++;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }

  std::size_t tp_t = 0, fp_t = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (scores[k] >= threshold) {
      (labels[k] == 1 ? tp_t : fp_t)++;
    }
  }
  const std::size_t pred_pos = tp_t + fp_t;
  const double precision_t =
      pred_pos == 0 ? 0.0 : static_cast<double>(tp_t) / static_cast<double>(pred_pos);
  const double recall_t = static_cast<double>(tp_t) / static_cast<double>(n_pos);
  const double denom = precision_t + recall_t;
  const double f1 = denom == 0.0 ? 0.0 : 2.0 * precision_t * recall_t / denom;

  return {{MetricKind::AveragePrecision, ap}, {MetricKind::F1, f1}};
}

MetricValue evaluate_metric(MetricKind kind, std::span<const double> scores,
                            std::span<const int> labels, double threshold) {
  switch (kind) {
    case MetricKind::Auroc: return auroc(scores, labels);
    case MetricKind::Accuracy: return accuracy(scores, labels, threshold);
    case MetricKind::BalancedAccuracy:
      return balanced_accuracy(scores, labels, threshold);
    case MetricKind::AveragePrecision:
      return avg_precision_f1(scores, labels, threshold).first;
    case MetricKind::F1:
      return avg_precision_f1(scores, labels, threshold).second;
  }
  throw std::logic_error("unknown metric kind");
}

CalibrationReport calibration(std::span<const double> scores,
                              std::span<const int> labels, std::size_t bins) {
  check_lengths(scores, labels);
  if (scores.empty()) throw ValidationError("calibration: empty input");
  if (bins == 0) throw ValidationError("calibration: bins must be positive");

  CalibrationReport report;
  report.bins_requested = bins;
  const std::size_t n = scores.size();
  std::size_t b = bins;
  if (n < bins) {
    b = n;
    report.bins_reduced = true;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return scores[x] < scores[y];
  });

  // Equal-count boundaries, shifted forward so a run of tied scores never
  // straddles two bins.
  std::vector<std::size_t> bounds;
  bounds.push_back(0);
  for (std::size_t k = 1; k < b; ++k) {
    std::size_t pos = (k * n) / b;
    while (pos > 0 && pos < n &&
           scores[order[pos]] == scores[order[pos - 1]]) {
      ++pos;
    }
    if (pos > bounds.back() && pos < n) bounds.push_back(pos);
  }
  bounds.push_back(n);

  const std::size_t eff = bounds.size() - 1;
  report.bin_edges.reserve(eff + 1);
  report.bin_edges.push_back(scores[order[0]]);
  double abs_gap_total = 0.0;
  for (std::size_t k = 0; k < eff; ++k) {
    const std::size_t lo = bounds[k], hi = bounds[k + 1];
    double sum_score = 0.0;
    double gap = 0.0;
    std::size_t pos_count = 0;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const std::size_t rec = order[idx];
      sum_score += scores[rec];
      gap += static_cast<double>(labels[rec]) - scores[rec];
      pos_count += (labels[rec] == 1);
    }
    const double count = static_cast<double>(hi - lo);
    report.bin_counts.push_back(hi - lo);
    report.bin_mean_score.push_back(sum_score / count);
    report.bin_positive_rate.push_back(static_cast<double>(pos_count) / count);
    report.bin_edges.push_back(hi < n ? scores[order[hi]]
                                      : scores[order[n - 1]]);
    abs_gap_total += std::abs(gap);
  }
  report.ece = abs_gap_total / static_cast<double>(n);
  return report;
}

std::string calibration_to_json(const CalibrationReport& report) {
  nlohmann::json obj{{"bins_requested", report.bins_requested},
                     {"bins_reduced", report.bins_reduced},
                     {"ece", report.ece},
                     {"bin_edges", report.bin_edges},
                     {"bin_mean_score", report.bin_mean_score},
                     {"bin_positive_rate", report.bin_positive_rate},
                     {"bin_counts", report.bin_counts}};
  return obj.dump(2) + "\n";
}

CalibrationReport calibration_from_json(const std::string& text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid calibration JSON: ") + e.what());
  }
  CalibrationReport report;
  try {
    report.bins_requested = obj.at("bins_requested").get<std::size_t>();
    report.bins_reduced = obj.at("bins_reduced").get<bool>();
    report.ece = obj.at("ece").get<double>();
    report.bin_edges = obj.at("bin_edges").get<std::vector<double>>();
    report.bin_mean_score = obj.at("bin_mean_score").get<std::vector<double>>();
    report.bin_positive_rate =
        obj.at("bin_positive_rate").get<std::vector<double>>();
    report.bin_counts = obj.at("bin_counts").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("calibration JSON fields: ") + e.what());
  }
  const std::size_t eff = report.bin_counts.size();
  if (report.bin_edges.size() != eff + 1 || report.bin_mean_score.size() != eff ||
      report.bin_positive_rate.size() != eff || eff == 0) {
    throw SchemaError("calibration JSON: inconsistent bin array sizes");
  }
  for (std::size_t k = 1; k < report.bin_edges.size(); ++k) {
    if (report.bin_edges[k] < report.bin_edges[k - 1]) {
      throw SchemaError("calibration JSON: edges not sorted");
    }
  }
  return report;
}

}  // namespace refergate
