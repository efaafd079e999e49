#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace refergate {

// Probability clamp shared by the logit transform and every objective that
// takes a log of a model output.
inline constexpr double kClampEps = 1e-7;

inline double clamp_probability(double p, double eps = kClampEps) {
  if (p < eps) return eps;
  if (p > 1.0 - eps) return 1.0 - eps;
  return p;
}

enum class Domain { InDomain, OutOfDomain };

const char* domain_tag(Domain d);                // "ID" / "OOD"
Domain parse_domain_tag(const std::string& tag);  // throws ParseError

// One model prediction: probability of the positive class, plus optional
// Monte-Carlo sample scores when the model was run stochastically.
struct PredictionRecord {
  std::string id;
  Domain domain = Domain::InDomain;
  int label = 0;  // 0 or 1
  double score = 0.0;
  std::vector<double> mc_scores;  // empty when the model is deterministic
};

// Immutable after construction; iteration order is insertion order so that
// every downstream ranking is reproducible.
struct PredictionSet {
  std::vector<PredictionRecord> records;
  std::optional<std::size_t> mc_count;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::vector<double> scores() const;
  std::vector<int> labels() const;
};

// Checks every predstore invariant (non-empty, unique ids, score ranges,
// homogeneous mc counts) and fills in mc_count. Throws on violation.
void validate(PredictionSet& set);

enum class FileFormat { Csv, Json };

PredictionSet load_predictions(const std::string& path, FileFormat format);
PredictionSet parse_csv_predictions(std::istream& in);
PredictionSet parse_json_predictions(std::istream& in);

void write_predictions_csv(const PredictionSet& set, const std::string& path);
void write_predictions_json(const PredictionSet& set, const std::string& path);

struct LogitView {
  std::vector<double> logits;
};

// log(p / (1 - p)) after clamping scores to [eps, 1 - eps].
LogitView to_logits(const PredictionSet& set, double clamp_eps = kClampEps);

// score < threshold -> negatives, score >= threshold -> positives.
// Order is preserved within each part; either part may be empty.
std::pair<PredictionSet, PredictionSet> split_by_prediction(
    const PredictionSet& set, double threshold = 0.5);

// Deterministic sub-sample of k records (original order preserved).
PredictionSet subsample(const PredictionSet& set, std::size_t k,
                        std::uint64_t seed);

}  // namespace refergate
