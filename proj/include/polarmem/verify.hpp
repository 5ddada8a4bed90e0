#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polarmem/channel.hpp"
#include "polarmem/codes.hpp"
#include "polarmem/tensor.hpp"

namespace polarmem {

/// Random d-state channel with a positive transition table and a random
/// initial law. With per_state_bsc the per-state laws are BSCs.
FiniteStateChannel random_channel(std::size_t states, Rng& rng, bool per_state_bsc = false);

/// The three exact CNOT identities used by push-down.
struct CnotIdentities {
  bool sum_both = false;      // summing both outputs leaves ones x ones on the inputs
  bool sum_target = false;    // summing the target output leaves a wire a -> c and ones on b
  bool fixed_inputs = false;  // fixing (a, b) leaves point(a) x point(a ^ b)
  bool all() const { return sum_both && sum_target && fixed_inputs; }
};
CnotIdentities check_cnot_identities(const Tensor& cnot);

/// Largest |sum_y W_N(y|x) - 1| over all inputs x of length n.
double normalization_error(const FiniteStateChannel& ch, std::size_t n);

struct ContractionFit {
  std::vector<std::size_t> lengths;
  std::vector<double> counts;  // contractions of one full decode
  double c = 0.0;              // least-squares fit of counts ~ c N log2 N
  double max_deviation = 0.0;  // max |count / (c N log2 N) - 1|
};
ContractionFit fit_contractions(Family family, const std::vector<int>& levels, std::size_t states,
                                std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  bool full = false;
  std::uint64_t seed = 1;
  std::optional<Tensor> cnot;  // tensor checked by the identity suite; defaults to the library one
  std::function<void(const CheckResult&)> on_check;
};

std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace polarmem
