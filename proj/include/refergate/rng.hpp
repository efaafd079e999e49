#pragma once

#include <cstdint>
#include <vector>

namespace refergate {

// Counter-based pseudorandom generator. Every output is a pure function of
// (seed, stream, counter) pushed through the SplitMix64 finalizer, so a given
// (seed, stream) pair produces the same sequence on every platform and
// independent streams can be handed to independent subsystems without any
// draw-order coupling between them.
//
//   key     = mix64(mix64(seed) ^ mix64(stream * 0x9e3779b97f4a7c15))
//   out[i]  = mix64(key + (i + 1) * 0x9e3779b97f4a7c15)
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53 random bits.
  double next_double();

  // Uniform on (0, 1]; safe as a log() argument.
  double next_open();

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so draws come in deterministic pairs.
  double next_normal();

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t next_below(std::uint64_t n);

  // k distinct indices from [0, n) via partial Fisher-Yates, in shuffle order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace refergate
