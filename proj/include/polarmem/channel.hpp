#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarmem/random.hpp"
#include "polarmem/tensor.hpp"

namespace polarmem {

class ChannelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a mean burst length or good-to-bad ratio would divide by zero.
class UnboundedBurstError : public ChannelError {
 public:
  using ChannelError::ChannelError;
};

/// Binary-input binary-output memoryless channel, w[y][x] = W(y|x).
struct MemorylessChannel {
  std::array<std::array<double, 2>, 2> w{};
  double operator()(unsigned y, unsigned x) const { return w[y][x]; }
};

MemorylessChannel bsc(double h);

/// Finite-state Markov channel whose state process does not depend on the input:
/// W(y, s'|x, s) = p(y|x, s) q(s'|s), with initial state law P(S0).
///
/// The flip law of use n is conditioned on the state before the transition.
class FiniteStateChannel {
 public:
  /// emission is p[y][x][s] (2*2*d values), transition is q[s'][s] (d*d values).
  FiniteStateChannel(std::size_t states, std::vector<double> emission,
                     std::vector<double> transition, std::vector<double> initial);

  std::size_t states() const noexcept { return states_; }
  double emission(unsigned y, unsigned x, std::size_t s) const {
    return emission_[(y * 2 + x) * states_ + s];
  }
  double transition(std::size_t next, std::size_t s) const { return transition_[next * states_ + s]; }
  double initial(std::size_t s) const { return initial_[s]; }
  std::span<const double> initial_distribution() const noexcept { return initial_; }

  /// True when every per-state law is a binary symmetric channel.
  bool per_state_bsc(double tol = 1e-15) const;
  /// Crossover probability of state s; requires a per-state BSC.
  double crossover(std::size_t s) const;

  FiniteStateChannel with_initial(std::vector<double> initial) const;

 private:
  std::size_t states_;
  std::vector<double> emission_;
  std::vector<double> transition_;
  std::vector<double> initial_;
};

/// Two-state Gilbert-Elliott channel; state 0 is Good, state 1 is Bad. The
/// initial law is the stationary one.
FiniteStateChannel gilbert_elliott(double h_good, double h_bad, double p_good_to_bad,
                                   double p_bad_to_good);

/// d = 1 embedding of a memoryless channel.
FiniteStateChannel lift_memoryless(const MemorylessChannel& ch);

/// Unique stationary law of the state chain; throws if it is not unique.
std::vector<double> stationary(const FiniteStateChannel& ch);

/// Gilbert-Elliott summaries (two-state channels only).
double mean_burst_length(const FiniteStateChannel& ch);
double good_bad_ratio(const FiniteStateChannel& ch);

/// Stationary average of the per-state crossover probabilities.
double average_crossover(const FiniteStateChannel& ch);

struct Transmission {
  std::vector<std::uint8_t> y;
  std::vector<std::size_t> states;  // s_0 .. s_N
};

Transmission sample_transmission(const FiniteStateChannel& ch, std::span<const std::uint8_t> x,
                                 Rng& rng);

/// W_N(y|x) marginalized over S0, by forward recursion in O(N d^2).
double channel_likelihood(const FiniteStateChannel& ch, std::span<const std::uint8_t> x,
                          std::span<const std::uint8_t> y);

enum class OpenLeg { input, error };

/// Chain of rank-3 site tensors (s_left, s_right, leg) closed by an initial
/// state vector on the left of position 0 and a terminal vector on the right of
/// position N-1. With every leg fixed, the chain contracts to
///   initial^T . A0[x0] . A1[x1] ... A_{N-1}[x_{N-1}] . terminal.
class ChainMpo {
 public:
  ChainMpo(std::size_t states, std::vector<Tensor> sites, Tensor initial, Tensor terminal,
           OpenLeg leg);

  std::size_t length() const noexcept { return sites_.size(); }
  std::size_t states() const noexcept { return states_; }
  OpenLeg leg() const noexcept { return leg_; }
  const Tensor& site(std::size_t j) const { return sites_.at(j); }
  const Tensor& initial() const noexcept { return initial_; }
  const Tensor& terminal() const noexcept { return terminal_; }

  /// Row-major d x d matrix of site j with its leg fixed to `bit`.
  const double* matrix(std::size_t j, unsigned bit) const {
    return packed_.data() + (j * 2 + bit) * states_ * states_;
  }

  /// Full contraction with every leg fixed.
  double evaluate(std::span<const std::uint8_t> legs) const;

  /// Identity shared by copies; distinct for separately built chains.
  std::uint64_t id() const noexcept { return id_; }

 private:
  std::size_t states_;
  std::vector<Tensor> sites_;
  Tensor initial_;
  Tensor terminal_;
  OpenLeg leg_;
  std::vector<double> packed_;
  std::uint64_t id_;
};

/// A[s, s', x] = q(s'|s) p(y_j|x, s) for the received word y.
ChainMpo evidence_mpo(const FiniteStateChannel& ch, std::span<const std::uint8_t> y);

/// B[s, s', z] = q(s'|s) (h_s if z = 1 else 1 - h_s); per-state BSC only.
ChainMpo error_mpo(const FiniteStateChannel& ch, std::size_t length);

}  // namespace polarmem
