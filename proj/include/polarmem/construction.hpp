#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "polarmem/channel.hpp"
#include "polarmem/codes.hpp"

namespace polarmem {

enum class ConstructionMode { iid, corr };

/// E(u_i) for every position: the probability that u_i is the first input the
/// error pattern disturbs, given as log2 values (-inf for impossible events)
/// so that very reliable positions do not underflow.
struct ErrorProfile {
  std::vector<double> log2_e;
  double value(std::size_t i) const;  // 2^log2_e[i], underflows to 0
};

ErrorProfile first_error_profile(const std::shared_ptr<const Circuit>& circuit, const ChainMpo& errmpo);

/// E(u_i) for a single 0-based position.
double first_error_probability(const CodeSpec& spec, const ChainMpo& errmpo, std::size_t i);

/// Error chain used by a construction mode: the channel itself (corr) or the
/// memoryless BSC at its average crossover (iid).
ChainMpo construction_mpo(const FiniteStateChannel& channel, ConstructionMode mode, std::size_t length);

struct Construction {
  CodeSpec spec;
  ErrorProfile profile;
};

/// Freezes the N - k positions with the largest E(u_i); equal values (to about
/// 1e-9 relative) freeze the larger index first.
Construction construct_frozen_set(Family family, int n, std::size_t k, const FiniteStateChannel& channel,
                                  ConstructionMode mode, CircuitOptions options = {});

/// Positions ordered from most to least likely first error.
std::vector<std::uint32_t> freeze_order(const ErrorProfile& profile);

ConstructionMode parse_mode(const std::string& text);
std::string mode_name(ConstructionMode mode);

}  // namespace polarmem
