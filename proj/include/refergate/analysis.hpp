#pragma once

#include <cstdint>
#include <vector>

namespace refergate {

// Top-k principal components of mean-centered data. Components are
// orthonormal rows with the sign convention that each component's
// largest-magnitude entry is positive.
struct PcaResult {
  std::vector<std::vector<double>> projections;  // n x k
  std::vector<std::vector<double>> components;   // k x d
  std::vector<double> explained_variance;        // non-increasing
  std::vector<double> explained_variance_ratio;
  std::vector<bool> zero_variance;  // component backed by a zero eigenvalue
};

PcaResult pca_project(const std::vector<std::vector<double>>& features,
                      std::size_t n_components = 2);

// Domain-segregation quantification on the PCA-2 projection: ratio of mean
// inter-domain to mean intra-domain pairwise distance, and 2-fold CV accuracy
// of a logistic domain classifier, both on 250-point subsamples averaged over
// 10 repeats.
struct SegregationReport {
  double distance_ratio = 0.0;
  double domain_pred_accuracy = 0.0;
  std::vector<double> per_repeat_ratio;
  std::vector<double> per_repeat_accuracy;
  std::size_t n_subsample = 250;
  std::size_t n_repeats = 10;
  bool subsample_reduced = false;  // a domain had fewer than 250 points
};

SegregationReport segregation(const std::vector<std::vector<double>>& features_id,
                              const std::vector<std::vector<double>>& features_ood,
                              std::uint64_t seed);

// Welch's t statistic and two-sided p-value (variances not pooled,
// Welch-Satterthwaite degrees of freedom).
struct WelchResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool zero_variance = false;  // degenerate inputs; p set by convention
};

WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b);

// Regularized incomplete beta function I_x(a, b); exposed for tests.
double incomplete_beta(double a, double b, double x);

}  // namespace refergate
