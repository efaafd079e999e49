#pragma once

#include <cstdint>
#include <vector>

#include "refergate/predictions.hpp"

namespace refergate {

// Bivariate Gaussian-mixture covariate-shift setup: feature 1 separates the
// classes, feature 2 separates the domains, with a common within-cell
// covariance.
struct SyntheticSpec {
  double class_mean_a = 0.0;   // feature-1 mean, class A
  double class_mean_b = 5.0;   // feature-1 mean, class B
  double domain_mean_id = 0.0;  // feature-2 mean, ID
  double domain_mean_ood = 5.0; // feature-2 mean, OOD
  double cov12 = 0.4;
  double var1 = 1.0;
  double var2 = 1.0;
  std::size_t n_per_cell = 1000;
  std::uint64_t seed = 1;
};

// Throws ValidationError unless each mixture component's covariance is
// positive-definite.
void validate(const SyntheticSpec& spec);

struct SimPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  int label = 0;  // 0 = class A, 1 = class B
  Domain domain = Domain::InDomain;
};

struct SimDataset {
  std::vector<SimPoint> points;

  std::size_t size() const { return points.size(); }
  SimDataset domain_subset(Domain d) const;
};

// n_per_cell points per (class, domain) cell, cell order fixed as
// (A,ID), (B,ID), (A,OOD), (B,OOD); each cell draws from its own rng stream
// so the cells are independent of one another's sizes.
SimDataset generate(const SyntheticSpec& spec);

}  // namespace refergate
