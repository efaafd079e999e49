#include "refergate/objectives.hpp"

#include <cmath>

#include "refergate/errors.hpp"

namespace refergate {
namespace {

void check_pairing(const EmbeddingBatch& batch) {
  const std::size_t n = batch.vectors.size();
  if (n < 2 || n % 2 != 0) {
    throw ValidationError("embedding batch needs 2K vectors");
  }
  if (batch.pairing.size() != n) {
    throw ValidationError("pairing size must match vector count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = batch.pairing[i];
    if (j >= n || j == i || batch.pairing[j] != i) {
      throw ValidationError("pairing must be an involution without fixed points");
    }
  }
  const std::size_t d = batch.vectors[0].size();
  if (d == 0) throw ValidationError("embedding dimension must be positive");
  for (const auto& v : batch.vectors) {
    if (v.size() != d) throw ValidationError("ragged embedding batch");
  }
}

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Pairwise cosine similarities; throws on a zero-norm vector.
std::vector<std::vector<double>> cosine_matrix(const EmbeddingBatch& batch) {
  const std::size_t n = batch.vectors.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = vec_norm(batch.vectors[i]);
    if (norms[i] == 0.0) {
      throw ValidationError("zero-norm embedding has no cosine similarity");
    }
  }
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = vec_dot(batch.vectors[i], batch.vectors[j]) /
                       (norms[i] * norms[j]);
      sim[i][j] = s;
      sim[j][i] = s;
    }
  }
  return sim;
}

// Row-i softmax over k != i of exp(sim/tau), max-shifted.
std::vector<double> row_softmax(const std::vector<double>& sim_row, std::size_t i,
                                double tau) {
  const std::size_t n = sim_row.size();
  double hi = -1e300;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != i) hi = std::max(hi, sim_row[k] / tau);
  }
  double denom = 0.0;
  std::vector<double> p(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    p[k] = std::exp(sim_row[k] / tau - hi);
    denom += p[k];
  }
  for (std::size_t k = 0; k < n; ++k) p[k] /= denom;
  return p;
}

double clamped_log(double p) { return std::log(clamp_probability(p)); }

}  // namespace

double simclr_loss(const EmbeddingBatch& batch, double temperature) {
  check_pairing(batch);
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  const auto sim = cosine_matrix(batch);
  const std::size_t n = batch.vectors.size();

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = batch.pairing[i];
    double hi = -1e300;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) hi = std::max(hi, sim[i][k] / temperature);
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(sim[i][k] / temperature - hi);
    }
    loss += -(sim[i][j] / temperature - hi) + std::log(denom);
  }
  return loss;
}

std::vector<std::vector<double>> simclr_loss_grad(const EmbeddingBatch& batch,
                                                  double temperature) {
  check_pairing(batch);
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  const auto sim = cosine_matrix(batch);
  const std::size_t n = batch.vectors.size();
  const std::size_t d = batch.vectors[0].size();

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = vec_norm(batch.vectors[i]);

  // dL/ds_{ik} accumulated over all anchor rows, then mapped through the
  // cosine derivative d cos(a,b)/da = b/(|a||b|) - cos(a,b) a/|a|^2.
  std::vector<std::vector<double>> dsim(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = batch.pairing[i];
    const auto p = row_softmax(sim[i], i, temperature);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      dsim[i][k] += (p[k] - (k == j ? 1.0 : 0.0)) / temperature;
    }
  }

  std::vector<std::vector<double>> grad(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || dsim[i][k] == 0.0) continue;
      const double c = dsim[i][k];
      const double inv = 1.0 / (norms[i] * norms[k]);
      for (std::size_t t = 0; t < d; ++t) {
        grad[i][t] += c * (batch.vectors[k][t] * inv -
                           sim[i][k] * batch.vectors[i][t] / (norms[i] * norms[i]));
        grad[k][t] += c * (batch.vectors[i][t] * inv -
                           sim[i][k] * batch.vectors[k][t] / (norms[k] * norms[k]));
      }
    }
  }
  return grad;
}

namespace {

void check_patches(const PatchBatch& batch) {
  const std::size_t p = batch.target.size();
  if (batch.predicted.size() != p || batch.mask.size() != p) {
    throw ValidationError("patch batch arrays must have equal patch counts");
  }
  if (p == 0) throw ValidationError("patch batch is empty");
  const std::size_t pixels = batch.target[0].size();
  if (pixels == 0) throw ValidationError("patches must contain pixels");
  for (std::size_t i = 0; i < p; ++i) {
    if (batch.target[i].size() != pixels || batch.predicted[i].size() != pixels) {
      throw ValidationError("ragged patch batch");
    }
    for (double y : batch.target[i]) {
      if (!(y >= 0.0 && y <= 1.0)) {
        throw ValidationError("target pixel outside [0,1]");
      }
    }
  }
}

}  // namespace

std::optional<double> masked_patch_loss(const PatchBatch& batch) {
  check_patches(batch);
  const std::size_t pixels = batch.target[0].size();
  bool any_masked = false;
  double total = 0.0;
  for (std::size_t p = 0; p < batch.target.size(); ++p) {
    if (!batch.mask[p]) continue;
    any_masked = true;
    double patch = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) {
      const double y = batch.target[p][i];
      const double yhat = clamp_probability(batch.predicted[p][i]);
      if (y > 0.0) patch += y * std::log(y / yhat);
      if (y < 1.0) patch += (1.0 - y) * std::log((1.0 - y) / (1.0 - yhat));
    }
    total += patch / static_cast<double>(pixels);
  }
  if (!any_masked) return std::nullopt;
  return total;
}

std::vector<std::vector<double>> masked_patch_loss_grad(const PatchBatch& batch) {
  check_patches(batch);
  const std::size_t pixels = batch.target[0].size();
  std::vector<std::vector<double>> grad(batch.target.size(),
                                        std::vector<double>(pixels, 0.0));
  for (std::size_t p = 0; p < batch.target.size(); ++p) {
    if (!batch.mask[p]) continue;
    for (std::size_t i = 0; i < pixels; ++i) {
      const double raw = batch.predicted[p][i];
      if (raw < kClampEps || raw > 1.0 - kClampEps) continue;  // clamped: flat
      const double y = batch.target[p][i];
      grad[p][i] = (-y / raw + (1.0 - y) / (1.0 - raw)) /
                   static_cast<double>(pixels);
    }
  }
  return grad;
}

namespace {

void check_osp(const std::vector<std::vector<double>>& scores_k,
               const std::vector<int>& labels, const OspParams& params) {
  const std::size_t heads = scores_k.size();
  if (heads == 0) throw ValidationError("osp: need at least one head");
  if (params.lambdas.size() != heads || params.phis.size() != heads) {
    throw ValidationError("osp: lambdas/phis must match head count");
  }
  for (double l : params.lambdas) {
    if (l < 0.0) throw ValidationError("osp: lambdas must be nonnegative");
  }
  const std::size_t n = labels.size();
  if (n == 0) throw ValidationError("osp: empty batch");
  for (const auto& row : scores_k) {
    if (row.size() != n) throw ValidationError("osp: head row size mismatch");
  }
  for (std::size_t k = 0; k < heads; ++k) {
    std::size_t pos = 0;
    for (int y : labels) pos += (static_cast<std::size_t>(y) == k);
    if (pos == 0 || pos == n) {
      throw ValidationError("osp: head " + std::to_string(k) +
                            " needs both positives and negatives");
    }
  }
}

}  // namespace

OspTerms osp_objective(const std::vector<std::vector<double>>& scores_k,
                       const std::vector<int>& labels, const OspParams& params) {
  check_osp(scores_k, labels, params);
  OspTerms terms;
  const std::size_t n = labels.size();
  for (std::size_t k = 0; k < scores_k.size(); ++k) {
    double pos_sum = 0.0, neg_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = scores_k[k][i];
      if (static_cast<std::size_t>(labels[i]) == k) {
        pos_sum += -clamped_log(f);
        ++n_pos;
      } else {
        neg_sum += -std::log(1.0 - clamp_probability(f));
      }
    }
    const double pos_mean = pos_sum / static_cast<double>(n_pos);
    const double neg_mean = neg_sum / static_cast<double>(n - n_pos);
    const double value =
        pos_mean + params.phis[k] + params.lambdas[k] * (neg_mean - params.phis[k]);
    terms.per_head.push_back(value);
    terms.total += value;
  }
  return terms;
}

OspGrad osp_objective_grad(const std::vector<std::vector<double>>& scores_k,
                           const std::vector<int>& labels,
                           const OspParams& params) {
  check_osp(scores_k, labels, params);
  const std::size_t n = labels.size();
  OspGrad grad;
  grad.d_scores.assign(scores_k.size(), std::vector<double>(n, 0.0));
  grad.d_lambdas.assign(scores_k.size(), 0.0);
  grad.d_phis.assign(scores_k.size(), 0.0);

  for (std::size_t k = 0; k < scores_k.size(); ++k) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (static_cast<std::size_t>(y) == k);
    const double n_neg = static_cast<double>(n - n_pos);
    double neg_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = scores_k[k][i];
      const bool clamped = f < kClampEps || f > 1.0 - kClampEps;
      if (static_cast<std::size_t>(labels[i]) == k) {
        grad.d_scores[k][i] =
            clamped ? 0.0 : -1.0 / (static_cast<double>(n_pos) * f);
      } else {
        neg_mean += -std::log(1.0 - clamp_probability(f));
        grad.d_scores[k][i] =
            clamped ? 0.0 : params.lambdas[k] / (n_neg * (1.0 - f));
      }
    }
    neg_mean /= n_neg;
    grad.d_lambdas[k] = neg_mean - params.phis[k];
    grad.d_phis[k] = 1.0 - params.lambdas[k];
  }
  return grad;
}

namespace {

void check_domain_batch(const DomainBatch& batch,
                        std::span<const double> domain_preds,
                        std::span<const double> class_preds) {
  const std::size_t n = batch.domain_labels.size();
  if (n == 0) throw ValidationError("domain batch is empty");
  if (batch.class_labels.size() != n || domain_preds.size() != n ||
      class_preds.size() != n) {
    throw ValidationError("domain batch arrays must have equal length");
  }
}

}  // namespace

DanLosses dan_objective(const DomainBatch& batch,
                        std::span<const double> domain_preds,
                        std::span<const double> class_preds) {
  check_domain_batch(batch, domain_preds, class_preds);
  const std::size_t n = batch.domain_labels.size();
  std::size_t n_id = 0, n_ood = 0;
  double class_sum = 0.0, id_sum = 0.0, ood_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = clamp_probability(domain_preds[i]);
    if (batch.domain_labels[i] == 0) {
      ++n_id;
      id_sum += std::log(1.0 - d);
      const double c = clamp_probability(class_preds[i]);
      const int y = batch.class_labels[i];
      class_sum += -(y * std::log(c) + (1 - y) * std::log(1.0 - c));
    } else {
      ++n_ood;
      ood_sum += std::log(d);
    }
  }
  DanLosses losses;
  losses.domain_loss = (n_id ? id_sum / static_cast<double>(n_id) : 0.0) +
                       (n_ood ? ood_sum / static_cast<double>(n_ood) : 0.0);
  if (n_id) losses.class_loss = class_sum / static_cast<double>(n_id);
  return losses;
}

DanGrad dan_objective_grad(const DomainBatch& batch,
                           std::span<const double> domain_preds,
                           std::span<const double> class_preds) {
  check_domain_batch(batch, domain_preds, class_preds);
  const std::size_t n = batch.domain_labels.size();
  std::size_t n_id = 0, n_ood = 0;
  for (int d : batch.domain_labels) (d == 0 ? n_id : n_ood)++;

  DanGrad grad;
  grad.d_domain_preds.assign(n, 0.0);
  grad.d_class_preds.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = domain_preds[i];
    const bool d_clamped = d < kClampEps || d > 1.0 - kClampEps;
    if (batch.domain_labels[i] == 0) {
      if (!d_clamped) {
        grad.d_domain_preds[i] = -1.0 / ((1.0 - d) * static_cast<double>(n_id));
      }
      const double c = class_preds[i];
      const bool c_clamped = c < kClampEps || c > 1.0 - kClampEps;
      if (!c_clamped) {
        const int y = batch.class_labels[i];
        grad.d_class_preds[i] =
            (-y / c + (1 - y) / (1.0 - c)) / static_cast<double>(n_id);
      }
    } else if (!d_clamped) {
      grad.d_domain_preds[i] = 1.0 / (d * static_cast<double>(n_ood));
    }
  }
  return grad;
}

std::vector<double> iw_weights(std::span<const double> domain_scores,
                               std::optional<double> cap) {
  if (cap && !(*cap > 0.0)) throw ValidationError("weight cap must be positive");
  std::vector<double> out(domain_scores.size());
  for (std::size_t i = 0; i < domain_scores.size(); ++i) {
    const double g = clamp_probability(domain_scores[i]);
    double w = g / (1.0 - g);
    if (cap && w > *cap) w = *cap;
    out[i] = w;
  }
  return out;
}

std::vector<double> iw_weights_grad(std::span<const double> domain_scores,
                                    std::optional<double> cap) {
  std::vector<double> out(domain_scores.size(), 0.0);
  for (std::size_t i = 0; i < domain_scores.size(); ++i) {
    const double g = domain_scores[i];
    if (g < kClampEps || g > 1.0 - kClampEps) continue;  // clamped: flat
    const double w = g / (1.0 - g);
    if (cap && w > *cap) continue;  // capped: flat
    out[i] = 1.0 / ((1.0 - g) * (1.0 - g));
  }
  return out;
}

double iw_weighted_cross_entropy(std::span<const double> weights,
                                 std::span<const double> class_preds,
                                 std::span<const int> labels) {
  const std::size_t n = weights.size();
  if (class_preds.size() != n || labels.size() != n) {
    throw ValidationError("weighted cross-entropy arrays must match");
  }
  if (n == 0) throw ValidationError("weighted cross-entropy: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = clamp_probability(class_preds[i]);
    const int y = labels[i];
    sum += weights[i] * -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(n);
}

std::vector<double> iw_weighted_cross_entropy_grad(
    std::span<const double> weights, std::span<const double> class_preds,
    std::span<const int> labels) {
  const std::size_t n = weights.size();
  if (class_preds.size() != n || labels.size() != n) {
    throw ValidationError("weighted cross-entropy arrays must match");
  }
  std::vector<double> grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = class_preds[i];
    if (p < kClampEps || p > 1.0 - kClampEps) continue;
    const int y = labels[i];
    grad[i] = weights[i] * (-y / p + (1 - y) / (1.0 - p)) / static_cast<double>(n);
  }
  return grad;
}

}  // namespace refergate
