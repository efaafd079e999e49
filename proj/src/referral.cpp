#include "refergate/referral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "refergate/errors.hpp"

namespace refergate {
namespace {

// Referral order: highest uncertainty first; among ties the higher index is
// referred first, so the lower index is retained first.
std::vector<std::size_t> referral_order(const UncertaintyVector& u,
                                        const std::vector<std::size_t>& members) {
  std::vector<std::size_t> order = members;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = u.ranking_key(a);
    const double kb = u.ranking_key(b);
    if (ka != kb) return ka > kb;
    return a > b;
  });
  return order;
}

std::size_t referred_count(std::size_t class_size, double rate) {
  return static_cast<std::size_t>(
      std::floor(rate * static_cast<double>(class_size)));
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ValidationError("referral rate must lie in [0, 1)");
  }
}

RetainedSet retained_from_order(const std::vector<std::size_t>& order,
                                std::size_t referred, double rate) {
  RetainedSet out;
  out.rate = rate;
  out.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(referred),
                     order.end());
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

struct CurveInputs {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::size_t> order_all;    // standard referral order
  std::vector<std::size_t> order_neg;    // split referral orders
  std::vector<std::size_t> order_pos;
  std::size_t n_neg = 0;
  std::size_t n_pos = 0;
};

CurveInputs prepare_inputs(const PredictionSet& set, const ReferralPolicy& policy) {
  CurveInputs in;
  in.scores = set.scores();
  in.labels = set.labels();
  const UncertaintyVector u = uncertainty_vector(set, policy.uncertainty_mode);

  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  if (policy.kind == PolicyKind::Standard) {
    in.order_all = referral_order(u, all);
  } else {
    std::vector<std::size_t> neg, pos;
    for (std::size_t i = 0; i < set.size(); ++i) {
      (in.scores[i] < policy.threshold ? neg : pos).push_back(i);
    }
    in.n_neg = neg.size();
    in.n_pos = pos.size();
    in.order_neg = referral_order(u, neg);
    in.order_pos = referral_order(u, pos);
  }
  return in;
}

// Retained indices at one grid rate, ascending.
std::vector<std::size_t> retained_at(const CurveInputs& in,
                                     const ReferralPolicy& policy, double rate) {
  std::vector<std::size_t> retained;
  if (policy.kind == PolicyKind::Standard) {
    const std::size_t k = referred_count(in.order_all.size(), rate);
    retained.assign(in.order_all.begin() + static_cast<std::ptrdiff_t>(k),
                    in.order_all.end());
  } else {
    const std::size_t kn = referred_count(in.n_neg, rate);
    const std::size_t kp = referred_count(in.n_pos, rate);
    retained.reserve((in.n_neg - kn) + (in.n_pos - kp));
    retained.insert(retained.end(),
                    in.order_neg.begin() + static_cast<std::ptrdiff_t>(kn),
                    in.order_neg.end());
    retained.insert(retained.end(),
                    in.order_pos.begin() + static_cast<std::ptrdiff_t>(kp),
                    in.order_pos.end());
  }
  std::sort(retained.begin(), retained.end());
  return retained;
}

std::optional<double> metric_at(const CurveInputs& in, const ReferralPolicy& policy,
                                MetricKind kind, double rate) {
  const auto retained = retained_at(in, policy, rate);
  std::vector<double> s(retained.size());
  std::vector<int> y(retained.size());
  for (std::size_t i = 0; i < retained.size(); ++i) {
    s[i] = in.scores[retained[i]];
    y[i] = in.labels[retained[i]];
  }
  return evaluate_metric(kind, s, y, policy.threshold).value;
}

ReferralCurve finish_curve(ReferralCurve curve) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& v : curve.values) {
    if (v) {
      sum += *v;
      ++defined;
    } else {
      ++curve.n_undefined;
    }
  }
  curve.aurc = defined ? sum / static_cast<double>(defined) : 0.0;
  return curve;
}

ReferralCurve curve_impl(const PredictionSet& set, const ReferralPolicy& policy,
                         MetricKind metric_kind, int grid_max, bool parallel) {
  if (set.empty()) throw ValidationError("referral_curve: empty prediction set");
  if (grid_max < 0 || grid_max > 99) {
    throw ValidationError("grid_max must lie in [0, 99]");
  }
  const CurveInputs in = prepare_inputs(set, policy);

  ReferralCurve curve;
  curve.metric_kind = metric_kind;
  const int n_rates = grid_max + 1;
  curve.rates.resize(n_rates);
  curve.values.resize(n_rates);
  for (int k = 0; k < n_rates; ++k) {
    curve.rates[k] = static_cast<double>(k) / 100.0;
  }

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n_rates; ++k) {
      curve.values[k] = metric_at(in, policy, metric_kind, curve.rates[k]);
    }
  } else {
    for (int k = 0; k < n_rates; ++k) {
      curve.values[k] = metric_at(in, policy, metric_kind, curve.rates[k]);
    }
  }

  if (!curve.values[0].has_value()) {
    throw ValidationError(std::string("metric ") + metric_name(metric_kind) +
                          " undefined on the full set (rate 0)");
  }
  return finish_curve(std::move(curve));
}

}  // namespace

RetainedSet retain_standard(const PredictionSet& set, const UncertaintyVector& u,
                            double rate) {
  check_rate(rate);
  if (u.size() != set.size()) {
    throw ValidationError("uncertainty vector size mismatch");
  }
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  const auto order = referral_order(u, all);
  return retained_from_order(order, referred_count(set.size(), rate), rate);
}

RetainedSet retain_split(const PredictionSet& set, const UncertaintyVector& u,
                         double rate, double threshold) {
  check_rate(rate);
  if (u.size() != set.size()) {
    throw ValidationError("uncertainty vector size mismatch");
  }
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < set.size(); ++i) {
    (set.records[i].score < threshold ? neg : pos).push_back(i);
  }
  const auto order_neg = referral_order(u, neg);
  const auto order_pos = referral_order(u, pos);
  const std::size_t kn = referred_count(neg.size(), rate);
  const std::size_t kp = referred_count(pos.size(), rate);

  RetainedSet out;
  out.rate = rate;
  out.indices.reserve((neg.size() - kn) + (pos.size() - kp));
  out.indices.insert(out.indices.end(),
                     order_neg.begin() + static_cast<std::ptrdiff_t>(kn),
                     order_neg.end());
  out.indices.insert(out.indices.end(),
                     order_pos.begin() + static_cast<std::ptrdiff_t>(kp),
                     order_pos.end());
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

ReferralCurve referral_curve(const PredictionSet& set, const ReferralPolicy& policy,
                             MetricKind metric_kind, int grid_max) {
  return curve_impl(set, policy, metric_kind, grid_max, /*parallel=*/true);
}

ReferralCurve referral_curve_serial(const PredictionSet& set,
                                    const ReferralPolicy& policy,
                                    MetricKind metric_kind, int grid_max) {
  return curve_impl(set, policy, metric_kind, grid_max, /*parallel=*/false);
}

std::string curve_to_csv(const ReferralCurve& curve) {
  std::ostringstream out;
  out << "rate,value,defined\n";
  char buf[48];
  for (std::size_t k = 0; k < curve.rates.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.2f", curve.rates[k]);
    out << buf << ',';
    if (curve.values[k]) {
      std::snprintf(buf, sizeof(buf), "%.17g", *curve.values[k]);
      out << buf << ",1\n";
    } else {
      out << ",0\n";
    }
  }
  return out.str();
}

ReferralCurve curve_from_csv(const std::string& text, MetricKind kind) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "rate,value,defined") {
    throw SchemaError("curve CSV: bad header");
  }
  ReferralCurve curve;
  curve.metric_kind = kind;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto comma1 = line.find(',');
    const auto comma2 = line.rfind(',');
    if (comma1 == std::string::npos || comma2 == comma1) {
      throw ParseError("curve CSV row " + std::to_string(row) + ": bad format");
    }
    const std::string rate_s = line.substr(0, comma1);
    const std::string value_s = line.substr(comma1 + 1, comma2 - comma1 - 1);
    const std::string defined_s = line.substr(comma2 + 1);

    double rate = 0.0;
    auto [p1, e1] = std::from_chars(rate_s.data(), rate_s.data() + rate_s.size(), rate);
    if (e1 != std::errc{} || p1 != rate_s.data() + rate_s.size()) {
      throw ParseError("curve CSV row " + std::to_string(row) + ": bad rate");
    }
    if (!curve.rates.empty() && rate <= curve.rates.back()) {
      throw SchemaError("curve CSV: rates not strictly increasing");
    }
    curve.rates.push_back(rate);

    if (defined_s == "1") {
      double v = 0.0;
      auto [p2, e2] =
          std::from_chars(value_s.data(), value_s.data() + value_s.size(), v);
      if (e2 != std::errc{} || p2 != value_s.data() + value_s.size()) {
        throw ParseError("curve CSV row " + std::to_string(row) + ": bad value");
      }
      curve.values.push_back(v);
    } else if (defined_s == "0") {
      if (!value_s.empty()) {
        throw SchemaError("curve CSV row " + std::to_string(row) +
                          ": undefined rows carry no value");
      }
      curve.values.push_back(std::nullopt);
    } else {
      throw ParseError("curve CSV row " + std::to_string(row) +
                       ": defined flag must be 0 or 1");
    }
  }
  if (curve.rates.empty()) throw SchemaError("curve CSV: no rows");
  return finish_curve(std::move(curve));
}

double EntropyCdf::eval(double h) const {
  if (!present()) throw ValidationError("entropy CDF absent (empty class)");
  const auto it =
      std::upper_bound(sorted_entropies.begin(), sorted_entropies.end(), h);
  return static_cast<double>(it - sorted_entropies.begin()) /
         static_cast<double>(sorted_entropies.size());
}

double EntropyCdf::inverse(double coverage) const {
  if (!present()) throw ValidationError("entropy CDF absent (empty class)");
  if (!(coverage >= 0.0 && coverage <= 1.0)) {
    throw ValidationError("coverage must lie in [0, 1]");
  }
  const std::size_t m = sorted_entropies.size();
  const double scaled = coverage * static_cast<double>(m);
  std::size_t idx =
      scaled <= 1.0 ? 0 : static_cast<std::size_t>(std::ceil(scaled)) - 1;
  if (idx >= m) idx = m - 1;
  return sorted_entropies[idx];
}

double ClassEntropyCdfs::z0(double coverage) const {
  return binary_entropy_inverse(
      std::min(negatives.inverse(coverage), 0.6931471805599453));
}

double ClassEntropyCdfs::z1(double coverage) const {
  return 1.0 - binary_entropy_inverse(
                   std::min(positives.inverse(coverage), 0.6931471805599453));
}

ClassEntropyCdfs entropy_cdf(const PredictionSet& set, const UncertaintyVector& u,
                             double threshold) {
  if (u.size() != set.size()) {
    throw ValidationError("uncertainty vector size mismatch");
  }
  ClassEntropyCdfs out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& side = set.records[i].score < threshold ? out.negatives : out.positives;
    side.sorted_entropies.push_back(u.ranking_key(i));
  }
  std::sort(out.negatives.sorted_entropies.begin(),
            out.negatives.sorted_entropies.end());
  std::sort(out.positives.sorted_entropies.begin(),
            out.positives.sorted_entropies.end());
  return out;
}

}  // namespace refergate
