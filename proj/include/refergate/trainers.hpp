#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "refergate/synthetic.hpp"

namespace refergate {

enum class TrainerKind { Plain, Dan, Iw };

const char* trainer_name(TrainerKind kind);  // "plain" / "dan" / "iw"

struct TrainOptions {
  std::size_t epochs = 2000;
  double lr = 0.5;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  double grad_clip = 0.0;        // global-norm clip per player; 0 disables
  double stop_grad_norm = 1e-6;  // early stop once the full gradient is flat
};

// Logistic classifier on the two raw features; for DAN the weights are the
// effective ones (encoder folded into the classifier head).
struct TrainedLinearModel {
  std::array<double, 2> weights{0.0, 0.0};
  double bias = 0.0;
  TrainerKind trainer = TrainerKind::Plain;
  std::vector<double> trace;  // primary training loss per epoch
  std::uint64_t seed = 1;

  double score(double x1, double x2) const;  // logistic(w.x + b)
};

// ---- plain logistic regression -------------------------------------------

// Mean cross-entropy (plus optional L2 on the weights) and its gradient at
// arbitrary parameters (w1, w2, b). Shared by the trainer and the
// finite-difference tests.
struct LinearLossGrad {
  double loss = 0.0;
  std::array<double, 3> grad{0.0, 0.0, 0.0};
};

LinearLossGrad plain_loss_grad(const SimDataset& data,
                               const std::array<double, 3>& params,
                               double l2 = 0.0);

// Full-batch gradient descent from zero init; stops on epoch budget or on
// gradient norm < stop_grad_norm. Throws ValidationError when a class is
// missing.
TrainedLinearModel fit_plain(const SimDataset& id_data, const TrainOptions& opt);

// ---- domain-adversarial trainer -------------------------------------------

// Toy DAN: learnable 2x2 linear encoder feeding a logistic classifier
// (trained on ID labels) and a logistic domain predictor (OOD = positive),
// with gradient reversal at the encoder/domain-predictor interface.
struct DanParams {
  std::array<double, 4> enc{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  std::array<double, 3> cls{0.0, 0.0, 0.0};       // wc1, wc2, bc
  std::array<double, 3> dom{0.0, 0.0, 0.0};       // wd1, wd2, bd
};

// Both player losses plus every analytic gradient the update rule needs.
// d_domain_enc is the forward-path gradient of domain_bce through the
// encoder; the encoder update applies -gamma times it (gradient reversal).
struct DanEval {
  double class_loss = 0.0;
  double domain_bce = 0.0;
  std::array<double, 4> d_class_enc{};
  std::array<double, 3> d_class_cls{};
  std::array<double, 4> d_domain_enc{};
  std::array<double, 3> d_domain_dom{};
};

DanEval dan_eval(const SimDataset& id_data, const SimDataset& ood_data,
                 const DanParams& params);

struct DanFitResult {
  TrainedLinearModel model;  // weights = enc^T wc, bias = bc
  DanParams params;
  std::vector<double> domain_trace;  // domain BCE per epoch
};

DanFitResult fit_dan(const SimDataset& id_data, const SimDataset& ood_data,
                     double gamma, const TrainOptions& opt);

// ---- importance-weighted trainer -------------------------------------------

// Domain discriminator trained on all rows; classifier minimizes the
// w = g/(1-g) weighted cross-entropy on ID rows with the weights treated as
// constants (gradients stopped between discriminator and classifier).
struct IwEval {
  double weighted_class_loss = 0.0;
  double domain_bce = 0.0;
  std::array<double, 3> d_class_cls{};  // weights frozen
  std::array<double, 3> d_domain_dom{};
};

IwEval iw_eval(const SimDataset& id_data, const SimDataset& ood_data,
               const std::array<double, 3>& cls_params,
               const std::array<double, 3>& dom_params,
               std::optional<double> weight_cap = std::nullopt);

struct IwFitResult {
  TrainedLinearModel model;
  std::array<double, 3> domain_params{0.0, 0.0, 0.0};
  std::vector<double> final_weights;  // per ID row, in data order
};

IwFitResult fit_iw(const SimDataset& id_data, const SimDataset& ood_data,
                   const TrainOptions& opt,
                   std::optional<double> weight_cap = std::nullopt);

}  // namespace refergate
