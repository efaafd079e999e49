#pragma once

#include <optional>
#include <span>
#include <vector>

#include "refergate/predictions.hpp"

namespace refergate {

// A batch of projection-head embeddings for the contrastive loss. vectors
// holds 2K rows (two augmented views per image); pairing[i] is the index of
// row i's positive partner and must be an involution without fixed points.
struct EmbeddingBatch {
  std::vector<std::vector<double>> vectors;
  std::vector<std::size_t> pairing;
};

// NT-Xent: sum over ordered positive pairs (i, j) of
//   -log( exp(cos(z_i, z_j)/tau) / sum_{k != i} exp(cos(z_i, z_k)/tau) ).
// Throws ValidationError on a zero-norm vector or malformed pairing.
double simclr_loss(const EmbeddingBatch& batch, double temperature);

// d(loss)/d(vectors), same shape as batch.vectors.
std::vector<std::vector<double>> simclr_loss_grad(const EmbeddingBatch& batch,
                                                  double temperature);

// Masked-patch reconstruction batch: target pixel values in [0, 1],
// predictions in (0, 1) (clamped before logs), one mask flag per patch.
struct PatchBatch {
  std::vector<std::vector<double>> target;
  std::vector<std::vector<double>> predicted;
  std::vector<bool> mask;
};

// Sum over masked patches of the per-patch pixel-mean binary KL
//   (1/(m n)) sum_i [ y log(y/yhat) + (1-y) log((1-y)/(1-yhat)) ].
// nullopt when no patch is masked.
std::optional<double> masked_patch_loss(const PatchBatch& batch);

std::vector<std::vector<double>> masked_patch_loss_grad(const PatchBatch& batch);

// One-vs-all Lagrangian with per-head multipliers lambda_k >= 0 and error
// thresholds phi_k. scores_k[k][i] is head k's probability for sample i.
struct OspParams {
  std::vector<double> lambdas;
  std::vector<double> phis;
};

struct OspTerms {
  std::vector<double> per_head;
  double total = 0.0;
};

OspTerms osp_objective(const std::vector<std::vector<double>>& scores_k,
                       const std::vector<int>& labels, const OspParams& params);

struct OspGrad {
  std::vector<std::vector<double>> d_scores;
  std::vector<double> d_lambdas;
  std::vector<double> d_phis;
};

OspGrad osp_objective_grad(const std::vector<std::vector<double>>& scores_k,
                           const std::vector<int>& labels, const OspParams& params);

// Rows for the domain-adversarial / importance-weighting objectives.
// class_labels entries are meaningful for ID rows only.
struct DomainBatch {
  std::vector<std::vector<double>> encoder_outputs;
  std::vector<int> domain_labels;  // 0 = ID, 1 = OOD
  std::vector<int> class_labels;
};

struct DanLosses {
  std::optional<double> class_loss;  // nullopt when the batch has no ID rows
  double domain_loss = 0.0;          // E_ID[log(1-D)] + E_OOD[log D]
};

DanLosses dan_objective(const DomainBatch& batch,
                        std::span<const double> domain_preds,
                        std::span<const double> class_preds);

struct DanGrad {
  std::vector<double> d_domain_preds;  // gradient of domain_loss
  std::vector<double> d_class_preds;   // gradient of class_loss
};

DanGrad dan_objective_grad(const DomainBatch& batch,
                           std::span<const double> domain_preds,
                           std::span<const double> class_preds);

// Density-ratio weights w = g/(1-g), optionally capped.
std::vector<double> iw_weights(std::span<const double> domain_scores,
                               std::optional<double> cap = std::nullopt);

std::vector<double> iw_weights_grad(std::span<const double> domain_scores,
                                    std::optional<double> cap = std::nullopt);

// Mean over samples of w_i * CE(y_i, p_i).
double iw_weighted_cross_entropy(std::span<const double> weights,
                                 std::span<const double> class_preds,
                                 std::span<const int> labels);

std::vector<double> iw_weighted_cross_entropy_grad(
    std::span<const double> weights, std::span<const double> class_preds,
    std::span<const int> labels);

}  // namespace refergate
