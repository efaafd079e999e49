#include "refergate/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "refergate/cli.hpp"
#include "refergate/errors.hpp"

namespace refergate {
namespace {

PredictionSet score_dataset(const SimDataset& data, const TrainedLinearModel& model,
                            const char* id_prefix) {
  PredictionSet set;
  set.records.reserve(data.size());
  char buf[32];
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const auto& p = data.points[i];
    PredictionRecord rec;
    std::snprintf(buf, sizeof(buf), "%s_%06zu", id_prefix, i);
    rec.id = buf;
    rec.domain = p.domain;
    rec.label = p.label;
    rec.score = model.score(p.x1, p.x2);
    set.records.push_back(std::move(rec));
  }
  validate(set);
  return set;
}

std::vector<std::vector<double>> feature_matrix(const SimDataset& data) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& p : data.points) out.push_back({p.x1, p.x2});
  return out;
}

nlohmann::json spec_to_json(const SyntheticSpec& spec) {
  return nlohmann::json{{"class_mean_a", spec.class_mean_a},
                        {"class_mean_b", spec.class_mean_b},
                        {"domain_mean_id", spec.domain_mean_id},
                        {"domain_mean_ood", spec.domain_mean_ood},
                        {"cov12", spec.cov12},
                        {"var1", spec.var1},
                        {"var2", spec.var2},
                        {"n_per_cell", spec.n_per_cell},
                        {"seed", spec.seed}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

OutcomeHistogram outcome_histogram(const std::vector<double>& stat,
                                   const std::vector<double>& scores,
                                   const std::vector<int>& labels,
                                   std::size_t bins, double threshold) {
  if (stat.size() != scores.size() || stat.size() != labels.size()) {
    throw ValidationError("outcome_histogram: array sizes differ");
  }
  if (stat.empty() || bins == 0) {
    throw ValidationError("outcome_histogram: empty input");
  }
  double lo = stat[0], hi = stat[0];
  for (double v : stat) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;  // all values identical: single spanning bin

  OutcomeHistogram hist;
  hist.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    hist.edges[k] = lo + (hi - lo) * static_cast<double>(k) /
                             static_cast<double>(bins);
  }
  hist.counts.assign(bins, {0, 0, 0, 0});
  for (std::size_t i = 0; i < stat.size(); ++i) {
    std::size_t bin = static_cast<std::size_t>(
        (stat[i] - lo) / (hi - lo) * static_cast<double>(bins));
    if (bin >= bins) bin = bins - 1;
    const int pred = scores[i] >= threshold ? 1 : 0;
    // Outcome slot: tn, fp, fn, tp.
    const std::size_t slot =
        pred == 0 ? (labels[i] == 0 ? 0 : 2) : (labels[i] == 0 ? 1 : 3);
    hist.counts[bin][slot]++;
  }
  return hist;
}

const ReferralCurve* ExperimentBundle::find_curve(const std::string& name) const {
  for (const auto& entry : curves) {
    if (entry.name == name) return &entry.curve;
  }
  return nullptr;
}

ExperimentBundle run_shift_experiment(const ExperimentConfig& config) {
  validate(config.spec);
  ExperimentBundle bundle;
  bundle.config = config;

  const SimDataset data = generate(config.spec);
  const SimDataset id_data = data.domain_subset(Domain::InDomain);
  const SimDataset ood_data = data.domain_subset(Domain::OutOfDomain);

  switch (config.trainer) {
    case TrainerKind::Plain: {
      TrainOptions opt;
      opt.epochs = config.plain_epochs;
      opt.lr = config.plain_lr;
      opt.seed = config.spec.seed;
      bundle.model = fit_plain(id_data, opt);
      break;
    }
    case TrainerKind::Dan: {
      TrainOptions opt;
      opt.epochs = config.adv_epochs;
      opt.lr = config.adv_lr;
      opt.seed = config.spec.seed;
      opt.grad_clip = config.grad_clip;
      bundle.model = fit_dan(id_data, ood_data, config.gamma, opt).model;
      break;
    }
    case TrainerKind::Iw: {
      TrainOptions opt;
      opt.epochs = config.adv_epochs;
      opt.lr = config.adv_lr;
      opt.seed = config.spec.seed;
      opt.grad_clip = config.grad_clip;
      bundle.model = fit_iw(id_data, ood_data, opt, config.weight_cap).model;
      break;
    }
  }

  bundle.predictions_id = score_dataset(id_data, bundle.model, "id");
  bundle.predictions_ood = score_dataset(ood_data, bundle.model, "ood");

  const struct {
    const char* tag;
    const PredictionSet* set;
  } domains[2] = {{"id", &bundle.predictions_id}, {"ood", &bundle.predictions_ood}};

  for (const auto& dom : domains) {
    for (MetricKind metric : config.metrics) {
      for (PolicyKind kind : {PolicyKind::Standard, PolicyKind::Split}) {
        ReferralPolicy policy = config.policy;
        policy.kind = kind;
        const std::string name = std::string(metric_name(metric)) + "_" + dom.tag +
                                 (kind == PolicyKind::Standard ? "_standard"
                                                               : "_split");
        bundle.curves.push_back(
            {name, referral_curve(*dom.set, policy, metric, config.grid_max)});
      }
    }
  }

  bundle.calibration_id = calibration(bundle.predictions_id.scores(),
                                      bundle.predictions_id.labels(), config.bins);
  bundle.calibration_ood = calibration(bundle.predictions_ood.scores(),
                                       bundle.predictions_ood.labels(), config.bins);

  bundle.segregation =
      segregation(feature_matrix(id_data), feature_matrix(ood_data),
                  config.spec.seed);

  for (const auto& dom : domains) {
    const auto scores = dom.set->scores();
    const auto labels = dom.set->labels();
    const UncertaintyVector u =
        uncertainty_vector(*dom.set, config.policy.uncertainty_mode);
    std::vector<double> entropies(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) entropies[i] = u.ranking_key(i);
    const LogitView logits = to_logits(*dom.set);

    bundle.histograms.push_back(
        {std::string("entropy_") + dom.tag,
         outcome_histogram(entropies, scores, labels, 30, config.policy.threshold)});
    bundle.histograms.push_back(
        {std::string("logit_") + dom.tag,
         outcome_histogram(logits.logits, scores, labels, 30,
                           config.policy.threshold)});
  }
  return bundle;
}

void save_bundle(const ExperimentBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);

  write_text(root / "spec.json", spec_to_json(bundle.config.spec).dump(2) + "\n");

  const auto& model = bundle.model;
  nlohmann::json model_json{{"weights", model.weights},
                            {"bias", model.bias},
                            {"trainer", trainer_name(model.trainer)},
                            {"seed", model.seed},
                            {"trace", model.trace}};
  write_text(root / "model.json", model_json.dump(2) + "\n");

  write_predictions_csv(bundle.predictions_id, (root / "predictions_id.csv").string());
  write_predictions_csv(bundle.predictions_ood,
                        (root / "predictions_ood.csv").string());

  nlohmann::json aurc_json;
  for (const auto& entry : bundle.curves) {
    write_text(root / ("curve_" + entry.name + ".csv"), curve_to_csv(entry.curve));
    aurc_json[entry.name] = entry.curve.aurc;
  }

  write_text(root / "calibration_id.json", calibration_to_json(bundle.calibration_id));
  write_text(root / "calibration_ood.json",
             calibration_to_json(bundle.calibration_ood));

  const auto& seg = bundle.segregation;
  nlohmann::json seg_json{{"distance_ratio", seg.distance_ratio},
                          {"domain_pred_accuracy", seg.domain_pred_accuracy},
                          {"per_repeat_ratio", seg.per_repeat_ratio},
                          {"per_repeat_accuracy", seg.per_repeat_accuracy},
                          {"n_subsample", seg.n_subsample},
                          {"n_repeats", seg.n_repeats},
                          {"subsample_reduced", seg.subsample_reduced}};
  write_text(root / "segregation.json", seg_json.dump(2) + "\n");

  for (const auto& entry : bundle.histograms) {
    std::string csv = "bin_lo,bin_hi,tn,fp,fn,tp\n";
    char buf[64];
    for (std::size_t k = 0; k < entry.hist.counts.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", entry.hist.edges[k],
                    entry.hist.edges[k + 1]);
      csv += buf;
      for (std::size_t s = 0; s < 4; ++s) {
        csv += "," + std::to_string(entry.hist.counts[k][s]);
      }
      csv += "\n";
    }
    write_text(root / ("hist_" + entry.name + ".csv"), csv);
  }

  const double w1 = model.weights[0];
  const double w2 = model.weights[1];
  nlohmann::json summary{
      {"version", kVersion},
      {"command", "simulate"},
      {"trainer", trainer_name(model.trainer)},
      {"seed", model.seed},
      {"weights", model.weights},
      {"bias", model.bias},
      {"feature2_weight_ratio", w1 == 0.0 ? 0.0 : std::abs(w2 / w1)},
      {"aurc", aurc_json},
      {"ece", nlohmann::json{{"id", bundle.calibration_id.ece},
                             {"ood", bundle.calibration_ood.ece}}},
      {"segregation", nlohmann::json{{"distance_ratio", seg.distance_ratio},
                                     {"domain_pred_accuracy",
                                      seg.domain_pred_accuracy}}},
      {"config",
       nlohmann::json{{"spec", spec_to_json(bundle.config.spec)},
                      {"bins", bundle.config.bins},
                      {"grid_max", bundle.config.grid_max},
                      {"plain_epochs", bundle.config.plain_epochs},
                      {"plain_lr", bundle.config.plain_lr},
                      {"adv_epochs", bundle.config.adv_epochs},
                      {"adv_lr", bundle.config.adv_lr},
                      {"gamma", bundle.config.gamma},
                      {"grad_clip", bundle.config.grad_clip},
                      {"threshold", bundle.config.policy.threshold},
                      {"uncertainty_mode",
                       bundle.config.policy.uncertainty_mode ==
                               UncertaintyMode::Total
                           ? "total"
                           : "aleatoric"}}}};
  write_text(root / "summary.json", summary.dump(2) + "\n");
}

}  // namespace refergate
