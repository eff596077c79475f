#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

#include "cismarl/rng.hpp"

namespace cismarl {

enum class AgentOrder {
  kShuffled,  // fresh seeded permutation for every sweep
  kFixed,     // agents 0..n-1 every sweep
};

/// Produces the agent permutation used by successive sweeps.
class AgentOrderSource {
 public:
  AgentOrderSource(AgentOrder mode, std::uint64_t seed, std::size_t n_agents)
      : mode_(mode), rng_(seed), n_agents_(n_agents) {}

  std::vector<std::size_t> next() {
    if (mode_ == AgentOrder::kShuffled) return shuffled_order(n_agents_, rng_);
    std::vector<std::size_t> order(n_agents_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }

 private:
  AgentOrder mode_;
  SplitMix64 rng_;
  std::size_t n_agents_;
};

inline std::string_view to_string(AgentOrder order) {
  return order == AgentOrder::kShuffled ? "shuffle" : "fixed";
}

}  // namespace cismarl
