#pragma once

#include <cstdint>
#include <random>

#include "ampscape/types.hpp"

namespace ampscape {

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic child seed for (base, index).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool coin() { return (engine_() >> 63) != 0; }

  /// Entries N(0,1) (real) or circularly symmetric with E|w|^2 = 1 (complex).
  CMatrix gaussian(Index rows, Index cols, Field field);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ampscape
