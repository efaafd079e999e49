#include "refergate/synthetic.hpp"

#include <cmath>

#include "refergate/errors.hpp"
#include "refergate/rng.hpp"

namespace refergate {

void validate(const SyntheticSpec& spec) {
  if (spec.n_per_cell == 0) {
    throw ValidationError("n_per_cell must be positive");
  }
  if (!(spec.var1 > 0.0)) throw ValidationError("var1 must be positive");
  const double schur = spec.var2 - spec.cov12 * spec.cov12 / spec.var1;
  if (!(schur > 0.0)) {
    throw ValidationError("cell covariance is not positive-definite");
  }
}

SimDataset SimDataset::domain_subset(Domain d) const {
  SimDataset out;
  for (const auto& p : points) {
    if (p.domain == d) out.points.push_back(p);
  }
  return out;
}

SimDataset generate(const SyntheticSpec& spec) {
  validate(spec);
  // Cholesky factor of [[var1, cov12], [cov12, var2]].
  const double l11 = std::sqrt(spec.var1);
  const double l21 = spec.cov12 / l11;
  const double l22 = std::sqrt(spec.var2 - l21 * l21);

  struct Cell {
    int label;
    Domain domain;
    double mu1;
    double mu2;
  };
  const Cell cells[4] = {
      {0, Domain::InDomain, spec.class_mean_a, spec.domain_mean_id},
      {1, Domain::InDomain, spec.class_mean_b, spec.domain_mean_id},
      {0, Domain::OutOfDomain, spec.class_mean_a, spec.domain_mean_ood},
      {1, Domain::OutOfDomain, spec.class_mean_b, spec.domain_mean_ood},
  };

  SimDataset data;
  data.points.reserve(4 * spec.n_per_cell);
  for (std::size_t c = 0; c < 4; ++c) {
    CounterRng rng(spec.seed, /*stream=*/c);
    for (std::size_t i = 0; i < spec.n_per_cell; ++i) {
      const double z1 = rng.next_normal();
      const double z2 = rng.next_normal();
      SimPoint p;
      p.x1 = cells[c].mu1 + l11 * z1;
      p.x2 = cells[c].mu2 + l21 * z1 + l22 * z2;
      p.label = cells[c].label;
      p.domain = cells[c].domain;
      data.points.push_back(p);
    }
  }
  return data;
}

}  // namespace refergate
