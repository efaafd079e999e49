#include "refergate/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "refergate/analysis.hpp"
#include "refergate/errors.hpp"
#include "refergate/experiment.hpp"
#include "refergate/metrics.hpp"
#include "refergate/predictions.hpp"
#include "refergate/referral.hpp"
#include "refergate/uncertainty.hpp"

namespace refergate {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<MetricKind> parse_metric_list(const std::string& text) {
  std::vector<MetricKind> out;
  for (const auto& name : split_list(text)) {
    const auto kind = parse_metric_name(name);
    if (!kind) throw ValidationError("unknown metric '" + name + "'");
    out.push_back(*kind);
  }
  if (out.empty()) throw ValidationError("metric list is empty");
  return out;
}

UncertaintyMode parse_mode(const std::string& text) {
  if (text == "aleatoric") return UncertaintyMode::AleatoricOnly;
  if (text == "total") return UncertaintyMode::Total;
  throw ValidationError("uncertainty mode must be aleatoric or total");
}

TrainerKind parse_trainer(const std::string& text) {
  if (text == "plain") return TrainerKind::Plain;
  if (text == "dan") return TrainerKind::Dan;
  if (text == "iw") return TrainerKind::Iw;
  throw ValidationError("trainer must be plain, dan, or iw");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_list(text)) {
    try {
      out.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw ValidationError("bad seed '" + part + "'");
    }
  }
  return out;
}

// Tracks files written by one command so a failure can remove partial output.
class OutputStager {
 public:
  explicit OutputStager(const std::string& dir) : dir_(dir) {
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_);
  }

  fs::path file(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }

  void rollback() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  std::vector<fs::path> files_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
  std::string input;
  std::string format = "csv";
  std::string policy = "both";
  std::string mode = "total";
  std::string metrics = "auroc,acc";
  std::size_t bins = 15;
  int grid_max = 95;
  double threshold = 0.5;
  std::string out;
};

int cmd_evaluate(const EvaluateOptions& opt) {
  const FileFormat format = opt.format == "json" ? FileFormat::Json : FileFormat::Csv;
  const PredictionSet set = load_predictions(opt.input, format);
  const auto metrics = parse_metric_list(opt.metrics);
  const UncertaintyMode mode = parse_mode(opt.mode);

  std::vector<PolicyKind> policies;
  if (opt.policy == "both") {
    policies = {PolicyKind::Standard, PolicyKind::Split};
  } else if (opt.policy == "standard") {
    policies = {PolicyKind::Standard};
  } else if (opt.policy == "split") {
    policies = {PolicyKind::Split};
  } else {
    throw ValidationError("policy must be standard, split, or both");
  }

  OutputStager stager(opt.out);
  try {
    const auto scores = set.scores();
    const auto labels = set.labels();

    nlohmann::json aurc_json;
    nlohmann::json undefined_json;
    std::vector<std::string> summary_lines;
    for (MetricKind metric : metrics) {
      for (PolicyKind kind : policies) {
        ReferralPolicy policy;
        policy.kind = kind;
        policy.uncertainty_mode = mode;
        policy.threshold = opt.threshold;
        const ReferralCurve curve =
            referral_curve(set, policy, metric, opt.grid_max);
        const std::string name =
            std::string(metric_name(metric)) +
            (kind == PolicyKind::Standard ? "_standard" : "_split");
        write_file(stager.file("curve_" + name + ".csv"), curve_to_csv(curve));
        aurc_json[name] = curve.aurc;
        undefined_json[name] = curve.n_undefined;
        char line[128];
        std::snprintf(line, sizeof(line), "AURC-%-18s %.6f  (undefined: %zu)",
                      name.c_str(), curve.aurc, curve.n_undefined);
        summary_lines.push_back(line);
      }
    }

    const CalibrationReport cal = calibration(scores, labels, opt.bins);
    write_file(stager.file("calibration.json"), calibration_to_json(cal));

    const UncertaintyVector u = uncertainty_vector(set, mode);
    std::vector<double> entropies(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) entropies[i] = u.ranking_key(i);
    const LogitView logits = to_logits(set);
    for (const auto& [name, stat] :
         {std::pair<const char*, const std::vector<double>*>{"entropy", &entropies},
          {"logit", &logits.logits}}) {
      const OutcomeHistogram hist =
          outcome_histogram(*stat, scores, labels, 30, opt.threshold);
      std::string csv = "bin_lo,bin_hi,tn,fp,fn,tp\n";
      char buf[64];
      for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", hist.edges[k],
                      hist.edges[k + 1]);
        csv += buf;
        for (std::size_t s = 0; s < 4; ++s) {
          csv += "," + std::to_string(hist.counts[k][s]);
        }
        csv += "\n";
      }
      write_file(stager.file(std::string("hist_") + name + ".csv"), csv);
    }

    nlohmann::json zero_json;
    for (MetricKind metric : metrics) {
      const MetricValue v = evaluate_metric(metric, scores, labels, opt.threshold);
      if (v.value) {
        zero_json[metric_name(metric)] = *v.value;
      } else {
        zero_json[metric_name(metric)] = nullptr;
      }
    }

    std::vector<std::string> warnings;
    if (cal.bins_reduced) warnings.push_back("calibration bins reduced to n");

    nlohmann::json summary{
        {"version", kVersion},
        {"command", "evaluate"},
        {"n_records", set.size()},
        {"mc_count", set.mc_count ? nlohmann::json(*set.mc_count)
                                  : nlohmann::json(nullptr)},
        {"metrics_at_zero", zero_json},
        {"aurc", aurc_json},
        {"n_undefined", undefined_json},
        {"ece", cal.ece},
        {"warnings", warnings},
        {"config",
         nlohmann::json{{"input", opt.input},
                        {"format", opt.format},
                        {"policy", opt.policy},
                        {"uncertainty_mode", opt.mode},
                        {"metrics", opt.metrics},
                        {"bins", opt.bins},
                        {"grid_max", opt.grid_max},
                        {"threshold", opt.threshold}}}};
    write_file(stager.file("summary.json"), summary.dump(2) + "\n");

    std::ostringstream human;
    human << "refergate evaluate\n"
          << "  input:    " << opt.input << " (" << set.size() << " records";
    if (set.mc_count) human << ", " << *set.mc_count << " MC samples";
    human << ")\n  policy:   " << opt.policy << ", uncertainty: " << opt.mode
          << "\n  ece:      " << cal.ece << "\n";
    for (const auto& line : summary_lines) human << "  " << line << "\n";
    write_file(stager.file("summary.txt"), human.str());
    std::cout << human.str();
  } catch (...) {
    stager.rollback();
    throw;
  }
  return kExitOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string trainer = "plain";
  std::uint64_t seed = 1;
  std::size_t n_per_cell = 1000;
  double cov12 = 0.4;
  std::string mode = "total";
  std::string metrics = "auroc,acc";
  std::size_t bins = 15;
  int grid_max = 95;
  double threshold = 0.5;
  std::size_t plain_epochs = 300;
  double plain_lr = 0.5;
  std::size_t adv_epochs = 3000;
  double adv_lr = 0.1;
  double gamma = 3.0;
  double weight_cap = 0.0;  // 0 = off
  std::string out;
};

ExperimentConfig make_config(const SimulateOptions& opt) {
  ExperimentConfig config;
  config.spec.seed = opt.seed;
  config.spec.n_per_cell = opt.n_per_cell;
  config.spec.cov12 = opt.cov12;
  config.trainer = parse_trainer(opt.trainer);
  config.policy.uncertainty_mode = parse_mode(opt.mode);
  config.policy.threshold = opt.threshold;
  config.metrics = parse_metric_list(opt.metrics);
  config.bins = opt.bins;
  config.grid_max = opt.grid_max;
  config.plain_epochs = opt.plain_epochs;
  config.plain_lr = opt.plain_lr;
  config.adv_epochs = opt.adv_epochs;
  config.adv_lr = opt.adv_lr;
  config.gamma = opt.gamma;
  if (opt.weight_cap > 0.0) config.weight_cap = opt.weight_cap;
  return config;
}

int cmd_simulate(const SimulateOptions& opt) {
  const ExperimentConfig config = make_config(opt);
  const ExperimentBundle bundle = run_shift_experiment(config);

  const bool existed = fs::exists(opt.out);
  try {
    save_bundle(bundle, opt.out);
  } catch (...) {
    // Remove whatever the bundle writer managed to produce.
    std::error_code ec;
    if (!existed) {
      fs::remove_all(opt.out, ec);
    }
    throw;
  }
  std::cout << "refergate simulate: trainer=" << opt.trainer
            << " seed=" << opt.seed << " -> " << opt.out << "\n";
  for (const auto& entry : bundle.curves) {
    std::cout << "  AURC-" << entry.name << " = " << entry.curve.aurc << "\n";
  }
  return kExitOk;
}

// ---- compare ----------------------------------------------------------------

struct CompareOptions {
  std::string a_dirs;
  std::string b_dirs;
  std::string trainer_a;
  std::string trainer_b;
  std::string seeds;
  std::string curves = "acc_ood_standard,auroc_ood_standard";
  SimulateOptions sim;  // spec/trainer knobs shared with simulate mode
  std::string out;
  double alpha = 0.05;
};

using AurcTable = std::vector<std::pair<std::string, std::vector<double>>>;

AurcTable read_side(const std::vector<std::string>& dirs) {
  AurcTable table;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const fs::path path = fs::path(dirs[d]) / "summary.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.contains("aurc") || !doc["aurc"].is_object()) {
      throw SchemaError(path.string() + ": no aurc table");
    }
    if (d == 0) {
      for (const auto& [key, value] : doc["aurc"].items()) {
        table.push_back({key, {value.get<double>()}});
      }
    } else {
      for (auto& [key, values] : table) {
        if (!doc["aurc"].contains(key)) {
          throw ValidationError(path.string() + ": metric set mismatch (missing " +
                                key + ")");
        }
        values.push_back(doc["aurc"][key].get<double>());
      }
      if (doc["aurc"].size() != table.size()) {
        throw ValidationError(path.string() + ": metric set mismatch");
      }
    }
  }
  return table;
}

int cmd_compare(const CompareOptions& opt) {
  AurcTable side_a, side_b;
  nlohmann::json config_json;

  const bool simulate_mode = !opt.trainer_a.empty() || !opt.trainer_b.empty();
  if (simulate_mode) {
    if (opt.trainer_a.empty() || opt.trainer_b.empty()) {
      throw ValidationError("compare: need both --trainer-a and --trainer-b");
    }
    const auto seeds = parse_seed_list(opt.seeds);
    if (seeds.size() < 2) {
      throw ValidationError("compare: need at least 2 seeds");
    }
    const auto curve_names = split_list(opt.curves);
    if (curve_names.empty()) throw ValidationError("compare: empty curve list");

    for (const auto& name : curve_names) {
      side_a.push_back({name, std::vector<double>(seeds.size())});
      side_b.push_back({name, std::vector<double>(seeds.size())});
    }

    const std::int64_t n_seeds = static_cast<std::int64_t>(seeds.size());
    std::vector<std::string> errors(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < n_seeds; ++s) {
      try {
        for (int side = 0; side < 2; ++side) {
          SimulateOptions sim = opt.sim;
          sim.trainer = side == 0 ? opt.trainer_a : opt.trainer_b;
          sim.seed = seeds[static_cast<std::size_t>(s)];
          const ExperimentBundle bundle = run_shift_experiment(make_config(sim));
          AurcTable& table = side == 0 ? side_a : side_b;
          for (auto& [name, values] : table) {
            const ReferralCurve* curve = bundle.find_curve(name);
            if (!curve) {
              throw ValidationError("compare: no curve named " + name);
            }
            values[static_cast<std::size_t>(s)] = curve->aurc;
          }
        }
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(s)] = e.what();
      }
    }
    for (const auto& err : errors) {
      if (!err.empty()) throw ValidationError(err);
    }
    config_json = {{"mode", "simulate"},
                   {"trainer_a", opt.trainer_a},
                   {"trainer_b", opt.trainer_b},
                   {"seeds", seeds},
                   {"curves", opt.curves}};
  } else {
    const auto dirs_a = split_list(opt.a_dirs);
    const auto dirs_b = split_list(opt.b_dirs);
    if (dirs_a.size() < 2 || dirs_b.size() < 2) {
      throw ValidationError("compare: need at least 2 result dirs per side");
    }
    side_a = read_side(dirs_a);
    side_b = read_side(dirs_b);
    if (side_a.size() != side_b.size()) {
      throw ValidationError("compare: metric set mismatch between sides");
    }
    for (std::size_t i = 0; i < side_a.size(); ++i) {
      if (side_a[i].first != side_b[i].first) {
        throw ValidationError("compare: metric set mismatch between sides");
      }
    }
    config_json = {{"mode", "files"}, {"a", opt.a_dirs}, {"b", opt.b_dirs}};
  }

  nlohmann::json metrics_json;
  std::ostringstream table;
  table << "metric                        mean_a    mean_b         t         p  sig\n";
  for (std::size_t i = 0; i < side_a.size(); ++i) {
    const auto& [name, va] = side_a[i];
    const auto& vb = side_b[i].second;
    const WelchResult w = welch_t_test(va, vb);
    double mean_a = 0.0, mean_b = 0.0;
    for (double v : va) mean_a += v;
    for (double v : vb) mean_b += v;
    mean_a /= static_cast<double>(va.size());
    mean_b /= static_cast<double>(vb.size());
    const bool significant = w.p < opt.alpha;
    metrics_json[name] = {{"a", va},          {"b", vb},   {"mean_a", mean_a},
                          {"mean_b", mean_b}, {"t", w.t},  {"p", w.p},
                          {"df", w.df},       {"significant", significant}};
    char line[160];
    std::snprintf(line, sizeof(line), "%-28s %9.6f %9.6f %9.3f %9.2e  %s\n",
                  name.c_str(), mean_a, mean_b, w.t, w.p,
                  significant ? "*" : "");
    table << line;
  }
  std::cout << table.str();

  if (!opt.out.empty()) {
    OutputStager stager(opt.out);
    try {
      nlohmann::json doc{{"version", kVersion},
                         {"command", "compare"},
                         {"alpha", opt.alpha},
                         {"config", config_json},
                         {"metrics", metrics_json}};
      write_file(stager.file("compare.json"), doc.dump(2) + "\n");
      write_file(stager.file("compare.txt"), table.str());
    } catch (...) {
      stager.rollback();
      throw;
    }
  }
  return kExitOk;
}

void add_sim_knobs(CLI::App* cmd, SimulateOptions& opt) {
  cmd->add_option("--n-per-cell", opt.n_per_cell, "points per (class, domain) cell");
  cmd->add_option("--cov12", opt.cov12, "feature covariance");
  cmd->add_option("--uncertainty-mode", opt.mode, "aleatoric or total");
  cmd->add_option("--metrics", opt.metrics, "comma list: auroc,acc,bacc,ap,f1");
  cmd->add_option("--bins", opt.bins, "calibration bins");
  cmd->add_option("--grid-max", opt.grid_max, "last referral percentile");
  cmd->add_option("--threshold", opt.threshold, "prediction threshold");
  cmd->add_option("--epochs", opt.plain_epochs, "plain trainer epoch budget");
  cmd->add_option("--lr", opt.plain_lr, "plain trainer learning rate");
  cmd->add_option("--adv-epochs", opt.adv_epochs, "dan/iw epoch budget");
  cmd->add_option("--adv-lr", opt.adv_lr, "dan/iw learning rate");
  cmd->add_option("--gamma", opt.gamma, "gradient-reversal multiplier");
  cmd->add_option("--weight-cap", opt.weight_cap, "IW weight cap (0 = off)");
}

}  // namespace

void apply_thread_cap_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("REFERGATE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) omp_set_num_threads(cap);
  }
#endif
}

int run_cli(const std::vector<std::string>& args) {
  apply_thread_cap_from_env();

  CLI::App app{"selective-classification evaluation under domain shift"};
  app.require_subcommand(1);

  EvaluateOptions eval_opt;
  auto* eval = app.add_subcommand("evaluate", "evaluate a prediction file");
  eval->add_option("--input", eval_opt.input, "prediction file")->required();
  eval->add_option("--format", eval_opt.format, "csv or json");
  eval->add_option("--policy", eval_opt.policy, "standard, split, or both");
  eval->add_option("--uncertainty-mode", eval_opt.mode, "aleatoric or total");
  eval->add_option("--metrics", eval_opt.metrics, "comma list: auroc,acc,bacc,ap,f1");
  eval->add_option("--bins", eval_opt.bins, "calibration bins");
  eval->add_option("--grid-max", eval_opt.grid_max, "last referral percentile");
  eval->add_option("--threshold", eval_opt.threshold, "prediction threshold");
  eval->add_option("--out", eval_opt.out, "output directory")->required();

  SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "run the synthetic shift experiment");
  sim->add_option("--trainer", sim_opt.trainer, "plain, dan, or iw");
  sim->add_option("--seed", sim_opt.seed, "experiment seed");
  add_sim_knobs(sim, sim_opt);
  sim->add_option("--out", sim_opt.out, "output directory")->required();

  CompareOptions cmp_opt;
  auto* cmp = app.add_subcommand("compare", "significance test between result sets");
  cmp->add_option("--a", cmp_opt.a_dirs, "comma list of result dirs (side A)");
  cmp->add_option("--b", cmp_opt.b_dirs, "comma list of result dirs (side B)");
  cmp->add_option("--trainer-a", cmp_opt.trainer_a, "simulate mode: side A trainer");
  cmp->add_option("--trainer-b", cmp_opt.trainer_b, "simulate mode: side B trainer");
  cmp->add_option("--seeds", cmp_opt.seeds, "simulate mode: comma list of seeds");
  cmp->add_option("--curves", cmp_opt.curves, "curve AURCs to compare");
  cmp->add_option("--alpha", cmp_opt.alpha, "significance level");
  add_sim_knobs(cmp, cmp_opt.sim);
  cmp->add_option("--out", cmp_opt.out, "optional output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (eval->parsed()) return cmd_evaluate(eval_opt);
    if (sim->parsed()) return cmd_simulate(sim_opt);
    if (cmp->parsed()) return cmd_compare(cmp_opt);
    return kExitInput;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace refergate
