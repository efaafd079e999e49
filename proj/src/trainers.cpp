#include "refergate/trainers.hpp"

#include <cmath>

#include "refergate/errors.hpp"
#include "refergate/rng.hpp"

namespace refergate {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically safe -[y log p + (1-y) log(1-p)] straight from the logit.
double ce_from_logit(double z, int y) {
  // log(1 + e^z) - y z, rewritten to avoid overflow for |z| large.
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z))
                                  : std::log1p(std::exp(z));
  return softplus - static_cast<double>(y) * z;
}

void check_both_classes(const SimDataset& data) {
  bool has0 = false, has1 = false;
  for (const auto& p : data.points) (p.label == 1 ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw ValidationError("training data must contain both classes");
  }
}

double norm3(const std::array<double, 3>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Scales a set of gradient blocks so their joint norm is at most max_norm.
template <typename... Blocks>
void clip_joint(double max_norm, Blocks&... blocks) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  auto accumulate = [&sq](const auto& block) {
    for (double v : block) sq += v * v;
  };
  (accumulate(blocks), ...);
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  auto rescale = [scale](auto& block) {
    for (double& v : block) v *= scale;
  };
  (rescale(blocks), ...);
}

}  // namespace

const char* trainer_name(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::Plain: return "plain";
    case TrainerKind::Dan: return "dan";
    case TrainerKind::Iw: return "iw";
  }
  return "?";
}

double TrainedLinearModel::score(double x1, double x2) const {
  return logistic(weights[0] * x1 + weights[1] * x2 + bias);
}

LinearLossGrad plain_loss_grad(const SimDataset& data,
                               const std::array<double, 3>& params, double l2) {
  if (data.points.empty()) throw ValidationError("empty training data");
  LinearLossGrad out;
  const double n = static_cast<double>(data.points.size());
  for (const auto& p : data.points) {
    const double z = params[0] * p.x1 + params[1] * p.x2 + params[2];
    const double s = logistic(z);
    out.loss += ce_from_logit(z, p.label);
    const double delta = s - static_cast<double>(p.label);
    out.grad[0] += delta * p.x1;
    out.grad[1] += delta * p.x2;
    out.grad[2] += delta;
  }
  out.loss /= n;
  for (double& g : out.grad) g /= n;
  out.loss += 0.5 * l2 * (params[0] * params[0] + params[1] * params[1]);
  out.grad[0] += l2 * params[0];
  out.grad[1] += l2 * params[1];
  return out;
}

TrainedLinearModel fit_plain(const SimDataset& id_data, const TrainOptions& opt) {
  check_both_classes(id_data);
  std::array<double, 3> params{0.0, 0.0, 0.0};
  TrainedLinearModel model;
  model.trainer = TrainerKind::Plain;
  model.seed = opt.seed;
  model.trace.reserve(opt.epochs);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    auto eval = plain_loss_grad(id_data, params, opt.l2);
    model.trace.push_back(eval.loss);
    if (norm3(eval.grad) < opt.stop_grad_norm) break;
    clip_joint(opt.grad_clip, eval.grad);
    params[0] -= opt.lr * eval.grad[0];
    params[1] -= opt.lr * eval.grad[1];
    params[2] -= opt.lr * eval.grad[2];
  }
  model.weights = {params[0], params[1]};
  model.bias = params[2];
  return model;
}

DanEval dan_eval(const SimDataset& id_data, const SimDataset& ood_data,
                 const DanParams& params) {
  if (id_data.points.empty() || ood_data.points.empty()) {
    throw ValidationError("DAN needs both domains");
  }
  DanEval out;
  const double n_id = static_cast<double>(id_data.points.size());
  const double n_ood = static_cast<double>(ood_data.points.size());

  auto encode = [&params](const SimPoint& p, double& h1, double& h2) {
    h1 = params.enc[0] * p.x1 + params.enc[1] * p.x2;
    h2 = params.enc[2] * p.x1 + params.enc[3] * p.x2;
  };

  for (const auto& p : id_data.points) {
    double h1, h2;
    encode(p, h1, h2);

    const double zc = params.cls[0] * h1 + params.cls[1] * h2 + params.cls[2];
    out.class_loss += ce_from_logit(zc, p.label) / n_id;
    const double dc = (logistic(zc) - static_cast<double>(p.label)) / n_id;
    out.d_class_cls[0] += dc * h1;
    out.d_class_cls[1] += dc * h2;
    out.d_class_cls[2] += dc;
    out.d_class_enc[0] += dc * params.cls[0] * p.x1;
    out.d_class_enc[1] += dc * params.cls[0] * p.x2;
    out.d_class_enc[2] += dc * params.cls[1] * p.x1;
    out.d_class_enc[3] += dc * params.cls[1] * p.x2;

    // ID rows are domain negatives: BCE term -log(1 - D).
    const double zd = params.dom[0] * h1 + params.dom[1] * h2 + params.dom[2];
    out.domain_bce += ce_from_logit(zd, 0) / n_id;
    const double dd = logistic(zd) / n_id;
    out.d_domain_dom[0] += dd * h1;
    out.d_domain_dom[1] += dd * h2;
    out.d_domain_dom[2] += dd;
    out.d_domain_enc[0] += dd * params.dom[0] * p.x1;
    out.d_domain_enc[1] += dd * params.dom[0] * p.x2;
    out.d_domain_enc[2] += dd * params.dom[1] * p.x1;
    out.d_domain_enc[3] += dd * params.dom[1] * p.x2;
  }

  for (const auto& p : ood_data.points) {
    double h1, h2;
    encode(p, h1, h2);
    const double zd = params.dom[0] * h1 + params.dom[1] * h2 + params.dom[2];
    out.domain_bce += ce_from_logit(zd, 1) / n_ood;
    const double dd = (logistic(zd) - 1.0) / n_ood;
    out.d_domain_dom[0] += dd * h1;
    out.d_domain_dom[1] += dd * h2;
    out.d_domain_dom[2] += dd;
    out.d_domain_enc[0] += dd * params.dom[0] * p.x1;
    out.d_domain_enc[1] += dd * params.dom[0] * p.x2;
    out.d_domain_enc[2] += dd * params.dom[1] * p.x1;
    out.d_domain_enc[3] += dd * params.dom[1] * p.x2;
  }
  return out;
}

DanFitResult fit_dan(const SimDataset& id_data, const SimDataset& ood_data,
                     double gamma, const TrainOptions& opt) {
  check_both_classes(id_data);
  if (ood_data.points.empty()) throw ValidationError("DAN needs OOD rows");

  DanFitResult result;
  DanParams& params = result.params;
  CounterRng rng(opt.seed, /*stream=*/10);
  for (double& w : params.cls) w = 0.01 * rng.next_normal();
  params.cls[2] = 0.0;
  for (double& w : params.dom) w = 0.01 * rng.next_normal();
  params.dom[2] = 0.0;

  result.model.trainer = TrainerKind::Dan;
  result.model.seed = opt.seed;
  result.model.trace.reserve(opt.epochs);
  result.domain_trace.reserve(opt.epochs);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const DanEval eval = dan_eval(id_data, ood_data, params);
    result.model.trace.push_back(eval.class_loss);
    result.domain_trace.push_back(eval.domain_bce);

    // Min player: classifier head plus encoder, with the domain gradient
    // reversed (scaled by -gamma) on its way into the encoder.
    std::array<double, 4> g_enc;
    for (int t = 0; t < 4; ++t) {
      g_enc[t] = eval.d_class_enc[t] - gamma * eval.d_domain_enc[t];
    }
    std::array<double, 3> g_cls = eval.d_class_cls;
    clip_joint(opt.grad_clip, g_enc, g_cls);

    // Max player: domain predictor does plain BCE descent.
    std::array<double, 3> g_dom = eval.d_domain_dom;
    clip_joint(opt.grad_clip, g_dom);

    for (int t = 0; t < 4; ++t) params.enc[t] -= opt.lr * g_enc[t];
    for (int t = 0; t < 3; ++t) params.cls[t] -= opt.lr * g_cls[t];
    for (int t = 0; t < 3; ++t) params.dom[t] -= opt.lr * g_dom[t];
  }

  // Fold the encoder into the classifier head: w_eff = enc^T wc.
  result.model.weights = {
      params.enc[0] * params.cls[0] + params.enc[2] * params.cls[1],
      params.enc[1] * params.cls[0] + params.enc[3] * params.cls[1]};
  result.model.bias = params.cls[2];
  return result;
}

IwEval iw_eval(const SimDataset& id_data, const SimDataset& ood_data,
               const std::array<double, 3>& cls_params,
               const std::array<double, 3>& dom_params,
               std::optional<double> weight_cap) {
  if (id_data.points.empty() || ood_data.points.empty()) {
    throw ValidationError("IW needs both domains");
  }
  IwEval out;
  const double n_id = static_cast<double>(id_data.points.size());
  const double n_ood = static_cast<double>(ood_data.points.size());

  for (const auto& p : id_data.points) {
    const double zd = dom_params[0] * p.x1 + dom_params[1] * p.x2 + dom_params[2];
    out.domain_bce += ce_from_logit(zd, 0) / n_id;
    const double dd = logistic(zd) / n_id;
    out.d_domain_dom[0] += dd * p.x1;
    out.d_domain_dom[1] += dd * p.x2;
    out.d_domain_dom[2] += dd;

    // Density-ratio weight, gradients stopped (treated as a constant).
    const double g = clamp_probability(logistic(zd));
    double w = g / (1.0 - g);
    if (weight_cap && w > *weight_cap) w = *weight_cap;

    const double zc = cls_params[0] * p.x1 + cls_params[1] * p.x2 + cls_params[2];
    out.weighted_class_loss += w * ce_from_logit(zc, p.label) / n_id;
    const double dc = w * (logistic(zc) - static_cast<double>(p.label)) / n_id;
    out.d_class_cls[0] += dc * p.x1;
    out.d_class_cls[1] += dc * p.x2;
    out.d_class_cls[2] += dc;
  }

  for (const auto& p : ood_data.points) {
    const double zd = dom_params[0] * p.x1 + dom_params[1] * p.x2 + dom_params[2];
    out.domain_bce += ce_from_logit(zd, 1) / n_ood;
    const double dd = (logistic(zd) - 1.0) / n_ood;
    out.d_domain_dom[0] += dd * p.x1;
    out.d_domain_dom[1] += dd * p.x2;
    out.d_domain_dom[2] += dd;
  }
  return out;
}

IwFitResult fit_iw(const SimDataset& id_data, const SimDataset& ood_data,
                   const TrainOptions& opt, std::optional<double> weight_cap) {
  check_both_classes(id_data);
  if (ood_data.points.empty()) throw ValidationError("IW needs OOD rows");

  IwFitResult result;
  std::array<double, 3> cls{0.0, 0.0, 0.0};
  std::array<double, 3>& dom = result.domain_params;

  result.model.trainer = TrainerKind::Iw;
  result.model.seed = opt.seed;
  result.model.trace.reserve(opt.epochs);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    IwEval eval = iw_eval(id_data, ood_data, cls, dom, weight_cap);
    result.model.trace.push_back(eval.weighted_class_loss);
    clip_joint(opt.grad_clip, eval.d_class_cls);
    clip_joint(opt.grad_clip, eval.d_domain_dom);
    for (int t = 0; t < 3; ++t) cls[t] -= opt.lr * eval.d_class_cls[t];
    for (int t = 0; t < 3; ++t) dom[t] -= opt.lr * eval.d_domain_dom[t];
  }

  result.model.weights = {cls[0], cls[1]};
  result.model.bias = cls[2];

  result.final_weights.reserve(id_data.points.size());
  for (const auto& p : id_data.points) {
    const double zd = dom[0] * p.x1 + dom[1] * p.x2 + dom[2];
    const double g = clamp_probability(logistic(zd));
    double w = g / (1.0 - g);
    if (weight_cap && w > *weight_cap) w = *weight_cap;
    result.final_weights.push_back(w);
  }
  return result;
}

}  // namespace refergate
