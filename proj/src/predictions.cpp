#include "refergate/predictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "refergate/errors.hpp"
#include "refergate/rng.hpp"

namespace refergate {
namespace {

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_field(const std::string& text, std::size_t row,
                          const char* field) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("row " + std::to_string(row) + ": cannot parse " + field +
                     " value '" + text + "'");
  }
  return value;
}

int parse_label_field(const std::string& text, std::size_t row) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  throw ParseError("row " + std::to_string(row) + ": label must be 0 or 1, got '" +
                   text + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

const char* domain_tag(Domain d) {
  return d == Domain::InDomain ? "ID" : "OOD";
}

Domain parse_domain_tag(const std::string& tag) {
  if (tag == "ID") return Domain::InDomain;
  if (tag == "OOD") return Domain::OutOfDomain;
  throw ParseError("domain must be ID or OOD, got '" + tag + "'");
}

std::vector<double> PredictionSet::scores() const {
  std::vector<double> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].score;
  return out;
}

std::vector<int> PredictionSet::labels() const {
  std::vector<int> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].label;
  return out;
}

void validate(PredictionSet& set) {
  if (set.records.empty()) throw ValidationError("prediction set is empty");
  std::unordered_set<std::string> seen;
  seen.reserve(set.records.size());
  std::optional<std::size_t> mc;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& rec = set.records[i];
    const std::string where = "row " + std::to_string(i + 1);
    if (!seen.insert(rec.id).second) {
      throw ValidationError(where + ": duplicate id '" + rec.id + "'");
    }
    if (rec.label != 0 && rec.label != 1) {
      throw ValidationError(where + ": label must be 0 or 1");
    }
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) {
      throw ValidationError(where + ": score " + format_score(rec.score) +
                            " outside [0,1]");
    }
    for (double m : rec.mc_scores) {
      if (!(m >= 0.0 && m <= 1.0)) {
        throw ValidationError(where + ": mc score " + format_score(m) +
                              " outside [0,1]");
      }
    }
    if (!rec.mc_scores.empty()) {
      if (!mc) {
        mc = rec.mc_scores.size();
      } else if (*mc != rec.mc_scores.size()) {
        throw SchemaError(where + ": mc sample count " +
                          std::to_string(rec.mc_scores.size()) +
                          " differs from earlier rows (" + std::to_string(*mc) +
                          ")");
      }
    }
  }
  if (mc) {
    for (std::size_t i = 0; i < set.records.size(); ++i) {
      if (set.records[i].mc_scores.empty()) {
        throw SchemaError("row " + std::to_string(i + 1) +
                          ": missing mc samples present in other rows");
      }
    }
  }
  set.mc_count = mc;
}

PredictionSet parse_csv_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "domain" ||
      header[2] != "label" || header[3] != "score") {
    throw SchemaError("header must start with id,domain,label,score");
  }
  const std::size_t n_mc = header.size() - 4;
  for (std::size_t m = 0; m < n_mc; ++m) {
    if (header[4 + m] != "mc_" + std::to_string(m)) {
      throw SchemaError("mc columns must be named mc_0..mc_" +
                        std::to_string(n_mc - 1));
    }
  }

  PredictionSet set;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    PredictionRecord rec;
    rec.id = fields[0];
    try {
      rec.domain = parse_domain_tag(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError("row " + std::to_string(row) + ": " + e.what());
    }
    rec.label = parse_label_field(fields[2], row);
    rec.score = parse_double_field(fields[3], row, "score");
    rec.mc_scores.reserve(n_mc);
    for (std::size_t m = 0; m < n_mc; ++m) {
      rec.mc_scores.push_back(
          parse_double_field(fields[4 + m], row, "mc score"));
    }
    set.records.push_back(std::move(rec));
  }
  validate(set);
  return set;
}

PredictionSet parse_json_predictions(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemaError("top level must be an array");

  PredictionSet set;
  std::size_t row = 0;
  for (const auto& obj : doc) {
    ++row;
    const std::string where = "row " + std::to_string(row);
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    try {
      PredictionRecord rec;
      rec.id = obj.at("id").get<std::string>();
      rec.domain = parse_domain_tag(obj.at("domain").get<std::string>());
      rec.label = obj.at("label").get<int>();
      rec.score = obj.at("score").get<double>();
      if (obj.contains("mc")) {
        rec.mc_scores = obj.at("mc").get<std::vector<double>>();
      }
      set.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  validate(set);
  return set;
}

PredictionSet load_predictions(const std::string& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return format == FileFormat::Csv ? parse_csv_predictions(in)
                                   : parse_json_predictions(in);
}

void write_predictions_csv(const PredictionSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  const std::size_t n_mc = set.mc_count.value_or(0);
  out << "id,domain,label,score";
  for (std::size_t m = 0; m < n_mc; ++m) out << ",mc_" << m;
  out << "\n";
  for (const auto& rec : set.records) {
    out << rec.id << ',' << domain_tag(rec.domain) << ',' << rec.label << ','
        << format_score(rec.score);
    for (double m : rec.mc_scores) out << ',' << format_score(m);
    out << "\n";
  }
}

void write_predictions_json(const PredictionSet& set, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : set.records) {
    nlohmann::json obj{{"id", rec.id},
                       {"domain", domain_tag(rec.domain)},
                       {"label", rec.label},
                       {"score", rec.score}};
    if (!rec.mc_scores.empty()) obj["mc"] = rec.mc_scores;
    arr.push_back(std::move(obj));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << arr.dump(2) << "\n";
}

LogitView to_logits(const PredictionSet& set, double clamp_eps) {
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ValidationError("clamp_eps must lie in (0, 0.5)");
  }
  LogitView view;
  view.logits.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double p = clamp_probability(set.records[i].score, clamp_eps);
    view.logits[i] = std::log(p / (1.0 - p));
  }
  return view;
}

std::pair<PredictionSet, PredictionSet> split_by_prediction(
    const PredictionSet& set, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("threshold must lie in (0, 1)");
  }
  PredictionSet negatives;
  PredictionSet positives;
  for (const auto& rec : set.records) {
    (rec.score < threshold ? negatives : positives).records.push_back(rec);
  }
  negatives.mc_count = negatives.records.empty() ? std::nullopt : set.mc_count;
  positives.mc_count = positives.records.empty() ? std::nullopt : set.mc_count;
  return {std::move(negatives), std::move(positives)};
}

PredictionSet subsample(const PredictionSet& set, std::size_t k,
                        std::uint64_t seed) {
  if (k > set.size()) {
    throw ValidationError("subsample size exceeds set size");
  }
  CounterRng rng(seed, /*stream=*/0);
  auto picked = rng.sample_indices(set.size(), k);
  std::sort(picked.begin(), picked.end());
  PredictionSet out;
  out.records.reserve(k);
  for (std::size_t idx : picked) out.records.push_back(set.records[idx]);
  out.mc_count = out.records.empty() ? std::nullopt : set.mc_count;
  return out;
}

}  // namespace refergate
