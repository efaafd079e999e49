#include "refergate/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

#include "refergate/errors.hpp"

namespace refergate {

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("binary_entropy: p outside [0,1]");
  }
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double binary_entropy_inverse(double h) {
  constexpr double kLn2 = 0.6931471805599453;
  if (!(h >= 0.0 && h <= kLn2 + 1e-12)) {
    throw std::domain_error("binary_entropy_inverse: h outside [0, ln 2]");
  }
  if (h <= 0.0) return 0.0;
  if (h >= kLn2) return 0.5;
  // H is strictly increasing on [0, 0.5]; plain bisection is exact enough
  // and has no step-size tuning.
  double lo = 0.0, hi = 0.5;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < h) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-16) break;
  }
  return 0.5 * (lo + hi);
}

UncertaintyRecord decompose(const PredictionRecord& record) {
  UncertaintyRecord out;
  if (record.mc_scores.empty()) {
    out.mean_score = record.score;
    out.total = binary_entropy(record.score);
    out.aleatoric = out.total;
    out.epistemic = 0.0;
    return out;
  }
  double mean = 0.0;
  double mean_entropy = 0.0;
  for (double s : record.mc_scores) {
    mean += s;
    mean_entropy += binary_entropy(s);
  }
  const double m = static_cast<double>(record.mc_scores.size());
  out.mean_score = mean / m;
  out.aleatoric = mean_entropy / m;
  out.total = binary_entropy(out.mean_score);
  out.epistemic = out.total - out.aleatoric;
  return out;
}

UncertaintyVector uncertainty_vector_serial(const PredictionSet& set,
                                            UncertaintyMode mode) {
  UncertaintyVector out;
  out.mode = mode;
  out.records.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.records[i] = decompose(set.records[i]);
  }
  return out;
}

UncertaintyVector uncertainty_vector(const PredictionSet& set,
                                     UncertaintyMode mode) {
  UncertaintyVector out;
  out.mode = mode;
  out.records.resize(set.size());
  const std::int64_t n = static_cast<std::int64_t>(set.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out.records[static_cast<std::size_t>(i)] =
        decompose(set.records[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace refergate
