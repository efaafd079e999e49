#pragma once

#include <vector>

#include "refergate/predictions.hpp"

namespace refergate {

enum class UncertaintyMode { AleatoricOnly, Total };

// Total/aleatoric/epistemic decomposition of one prediction, natural log.
// total = aleatoric + epistemic holds bit-for-bit because epistemic is
// defined as the difference.
struct UncertaintyRecord {
  double total = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double mean_score = 0.0;
};

struct UncertaintyVector {
  std::vector<UncertaintyRecord> records;
  UncertaintyMode mode = UncertaintyMode::Total;

  std::size_t size() const { return records.size(); }

  // The value referral ranks by.
  double ranking_key(std::size_t i) const {
    return mode == UncertaintyMode::Total ? records[i].total
                                          : records[i].aleatoric;
  }
};

// H(p) = -p ln p - (1-p) ln(1-p), with 0 log 0 = 0. Throws std::domain_error
// outside [0, 1].
double binary_entropy(double p);

// Inverse of binary_entropy restricted to [0, 0.5]; h in [0, ln 2].
double binary_entropy_inverse(double h);

// Monte-Carlo aggregation: mean_score = mean of samples, total = H(mean),
// aleatoric = mean of H(sample). A record without mc samples is treated as a
// single-sample set (epistemic exactly 0).
UncertaintyRecord decompose(const PredictionRecord& record);

UncertaintyVector uncertainty_vector(const PredictionSet& set,
                                     UncertaintyMode mode);

// Serial reference implementation used by tests and the benchmark; must be
// result-identical to uncertainty_vector.
UncertaintyVector uncertainty_vector_serial(const PredictionSet& set,
                                            UncertaintyMode mode);

}  // namespace refergate
