#include "refergate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "refergate/errors.hpp"
#include "refergate/rng.hpp"
#include "refergate/synthetic.hpp"
#include "refergate/trainers.hpp"

namespace refergate {
namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix; returns eigenvalues
// descending with matching eigenvectors as rows.
void jacobi_eigen(std::vector<std::vector<double>> a,
                  std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
  const std::size_t d = a.size();
  vectors.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) vectors[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) off += a[i][j] * a[i][j];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vpk = vectors[p][k], vqk = vectors[q][k];
          vectors[p][k] = c * vpk - s * vqk;
          vectors[q][k] = s * vpk + c * vqk;
        }
      }
    }
  }

  values.resize(d);
  for (std::size_t i = 0; i < d; ++i) values[i] = a[i][i];
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (values[x] != values[y]) return values[x] > values[y];
    return x < y;
  });
  std::vector<double> sorted_values(d);
  std::vector<std::vector<double>> sorted_vectors(d);
  for (std::size_t i = 0; i < d; ++i) {
    sorted_values[i] = values[order[i]];
    sorted_vectors[i] = vectors[order[i]];
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

double mean_pairwise_distance(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b) {
  double sum = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) {
      double sq = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        const double diff = x[t] - y[t];
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
    }
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mean_intra_distance(const std::vector<std::vector<double>>& a) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      double sq = 0.0;
      for (std::size_t t = 0; t < a[i].size(); ++t) {
        const double diff = a[i][t] - a[j][t];
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace

PcaResult pca_project(const std::vector<std::vector<double>>& features,
                      std::size_t n_components) {
  const std::size_t n = features.size();
  if (n_components == 0) throw ValidationError("pca: need at least 1 component");
  if (n <= n_components) {
    throw ValidationError("pca: need more points than components");
  }
  const std::size_t d = features[0].size();
  if (d < n_components) {
    throw ValidationError("pca: dimension smaller than component count");
  }
  for (const auto& row : features) {
    if (row.size() != d) throw ValidationError("pca: ragged feature matrix");
  }

  std::vector<double> mean(d, 0.0);
  for (const auto& row : features) {
    for (std::size_t t = 0; t < d; ++t) mean[t] += row[t];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : features) {
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = row[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) {
        cov[i][j] += xi * (row[j] - mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  }
  double total_variance = 0.0;
  for (std::size_t i = 0; i < d; ++i) total_variance += cov[i][i];

  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  jacobi_eigen(cov, values, vectors);

  PcaResult out;
  out.components.assign(vectors.begin(),
                        vectors.begin() + static_cast<std::ptrdiff_t>(n_components));
  out.explained_variance.assign(
      values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n_components));

  for (std::size_t k = 0; k < n_components; ++k) {
    // Sign convention: the largest-magnitude entry is positive.
    std::size_t arg = 0;
    for (std::size_t t = 1; t < d; ++t) {
      if (std::abs(out.components[k][t]) > std::abs(out.components[k][arg])) {
        arg = t;
      }
    }
    if (out.components[k][arg] < 0.0) {
      for (double& v : out.components[k]) v = -v;
    }
    if (out.explained_variance[k] < 0.0) out.explained_variance[k] = 0.0;
    out.zero_variance.push_back(out.explained_variance[k] <=
                                1e-12 * std::max(total_variance, 1e-300));
    out.explained_variance_ratio.push_back(
        total_variance > 0.0 ? out.explained_variance[k] / total_variance : 0.0);
  }

  out.projections.assign(n, std::vector<double>(n_components, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n_components; ++k) {
      double acc = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        acc += (features[i][t] - mean[t]) * out.components[k][t];
      }
      out.projections[i][k] = acc;
    }
  }
  return out;
}

SegregationReport segregation(const std::vector<std::vector<double>>& features_id,
                              const std::vector<std::vector<double>>& features_ood,
                              std::uint64_t seed) {
  if (features_id.size() < 2 || features_ood.size() < 2) {
    throw ValidationError("segregation: each domain needs at least 2 points");
  }

  std::vector<std::vector<double>> pooled = features_id;
  pooled.insert(pooled.end(), features_ood.begin(), features_ood.end());
  const PcaResult pca = pca_project(pooled, 2);

  std::vector<std::vector<double>> proj_id(
      pca.projections.begin(),
      pca.projections.begin() + static_cast<std::ptrdiff_t>(features_id.size()));
  std::vector<std::vector<double>> proj_ood(
      pca.projections.begin() + static_cast<std::ptrdiff_t>(features_id.size()),
      pca.projections.end());

  SegregationReport report;
  const std::size_t want = report.n_subsample;
  const std::size_t take =
      std::min({want, proj_id.size(), proj_ood.size()});
  report.subsample_reduced = take < want;
  report.n_subsample = take;

  for (std::size_t rep = 0; rep < report.n_repeats; ++rep) {
    CounterRng rng(seed, /*stream=*/rep);
    auto pick = [&rng, take](const std::vector<std::vector<double>>& src) {
      auto idx = rng.sample_indices(src.size(), take);
      std::vector<std::vector<double>> out;
      out.reserve(take);
      for (std::size_t i : idx) out.push_back(src[i]);
      return out;
    };
    const auto sub_id = pick(proj_id);
    const auto sub_ood = pick(proj_ood);

    const double inter = mean_pairwise_distance(sub_id, sub_ood);
    const double intra =
        0.5 * (mean_intra_distance(sub_id) + mean_intra_distance(sub_ood));
    report.per_repeat_ratio.push_back(inter / intra);

    // 2-fold CV with a logistic domain classifier on the projections.
    SimDataset all;
    for (const auto& v : sub_id) {
      all.points.push_back({v[0], v[1], 0, Domain::InDomain});
    }
    for (const auto& v : sub_ood) {
      all.points.push_back({v[0], v[1], 1, Domain::OutOfDomain});
    }
    const auto perm = rng.sample_indices(all.points.size(), all.points.size());
    SimDataset fold_a, fold_b;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      (i % 2 == 0 ? fold_a : fold_b).points.push_back(all.points[perm[i]]);
    }
    TrainOptions opt;
    opt.epochs = 500;
    opt.lr = 0.1;
    opt.l2 = 1e-3;
    opt.seed = seed;
    auto eval_fold = [&opt](const SimDataset& train, const SimDataset& test) {
      const TrainedLinearModel m = fit_plain(train, opt);
      std::size_t correct = 0;
      for (const auto& p : test.points) {
        const int pred = m.score(p.x1, p.x2) >= 0.5 ? 1 : 0;
        correct += (pred == p.label);
      }
      return static_cast<double>(correct) / static_cast<double>(test.points.size());
    };
    report.per_repeat_accuracy.push_back(
        0.5 * (eval_fold(fold_a, fold_b) + eval_fold(fold_b, fold_a)));
  }

  double ratio_sum = 0.0, acc_sum = 0.0;
  for (double r : report.per_repeat_ratio) ratio_sum += r;
  for (double a : report.per_repeat_accuracy) acc_sum += a;
  report.distance_ratio = ratio_sum / static_cast<double>(report.n_repeats);
  report.domain_pred_accuracy = acc_sum / static_cast<double>(report.n_repeats);
  return report;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued-fraction evaluation (Lentz), switching tails for convergence.
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  auto contfrac = [](double a_, double b_, double x_) {
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a_ + b_) * x_ / (a_ + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
      const double m_ = static_cast<double>(m);
      double num = m_ * (b_ - m_) * x_ / ((a_ + 2.0 * m_ - 1.0) * (a_ + 2.0 * m_));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      num = -(a_ + m_) * (a_ + b_ + m_) * x_ /
            ((a_ + 2.0 * m_) * (a_ + 2.0 * m_ + 1.0));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h;
  };
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * contfrac(a, b, x) / a;
  }
  const double ln_front_m = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            b * std::log1p(-x) + a * std::log(x);
  return 1.0 - std::exp(ln_front_m) * contfrac(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("welch_t_test: each group needs at least 2 values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= na;
  mb /= nb;
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= (na - 1.0);
  vb /= (nb - 1.0);

  WelchResult out;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    out.zero_variance = true;
    if (ma == mb) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
    }
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.df = se2 * se2 /
           ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  // Two-sided p from the t CDF: P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  out.p = incomplete_beta(out.df / 2.0, 0.5, out.df / (out.df + out.t * out.t));
  return out;
}

}  // namespace refergate
