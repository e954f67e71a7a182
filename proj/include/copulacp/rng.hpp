#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace copulacp {

// Counter-keyed random streams.
//
// Every stochastic task (a bootstrap replicate, a simulated epoch, a Monte
// Carlo trial) derives its own engine from (root seed, key...) by folding the
// key through SplitMix64. Streams therefore do not depend on the order in
// which tasks are scheduled, which is what makes --jobs 1 and --jobs N agree.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The uniform/normal transforms below are written out instead of
// using <random> distributions, whose algorithms are implementation-defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  static Stream keyed(std::uint64_t root, std::initializer_list<std::uint64_t> key);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Standard normal by the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Stable 64-bit mix of a root seed and a key path.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> key);

}  // namespace copulacp
