// Compares the OpenMP kernels against their serial reference implementations
// and reports timings plus a bitwise equality check of the results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "refergate/cli.hpp"
#include "refergate/predictions.hpp"
#include "refergate/referral.hpp"
#include "refergate/rng.hpp"
#include "refergate/uncertainty.hpp"

using namespace refergate;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

PredictionSet make_set(std::size_t n, std::size_t mc) {
  CounterRng rng(42, 0);
  PredictionSet set;
  set.records.reserve(n);
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    PredictionRecord rec;
    std::snprintf(buf, sizeof(buf), "r%08zu", i);
    rec.id = buf;
    rec.domain = Domain::InDomain;
    const double p = rng.next_double();
    rec.label = rng.next_double() < p ? 1 : 0;
    rec.score = p;
    for (std::size_t m = 0; m < mc; ++m) {
      rec.mc_scores.push_back(clamp_probability(p + 0.05 * rng.next_normal()));
    }
    if (mc) {
      double mean = 0.0;
      for (double s : rec.mc_scores) mean += s;
      rec.score = mean / static_cast<double>(mc);
    }
    set.records.push_back(std::move(rec));
  }
  validate(set);
  return set;
}

bool same_uncertainty(const UncertaintyVector& a, const UncertaintyVector& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.records.data(), b.records.data(),
                     a.size() * sizeof(UncertaintyRecord)) == 0;
}

bool same_curve(const ReferralCurve& a, const ReferralCurve& b) {
  return curve_to_csv(a) == curve_to_csv(b);
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap_from_env();
  std::size_t n = 400000;
  if (argc > 1) n = std::stoull(argv[1]);

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-28s %10s %10s %8s  %s\n", "kernel", "serial(s)", "openmp(s)",
              "speedup", "identical");

  {
    const PredictionSet set = make_set(n, 5);
    auto t0 = std::chrono::steady_clock::now();
    const auto serial = uncertainty_vector_serial(set, UncertaintyMode::Total);
    const double ts = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto parallel = uncertainty_vector(set, UncertaintyMode::Total);
    const double tp = seconds_since(t0);
    std::printf("%-28s %10.4f %10.4f %8.2f  %s\n", "uncertainty_vector (mc=5)", ts,
                tp, ts / tp, same_uncertainty(serial, parallel) ? "yes" : "NO");
  }

  {
    const PredictionSet set = make_set(n / 4, 0);
    ReferralPolicy policy;
    policy.kind = PolicyKind::Split;
    auto t0 = std::chrono::steady_clock::now();
    const auto serial =
        referral_curve_serial(set, policy, MetricKind::Auroc, 95);
    const double ts = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto parallel = referral_curve(set, policy, MetricKind::Auroc, 95);
    const double tp = seconds_since(t0);
    std::printf("%-28s %10.4f %10.4f %8.2f  %s\n", "referral_curve (auroc)", ts,
                tp, ts / tp, same_curve(serial, parallel) ? "yes" : "NO");
  }
  return 0;
}
