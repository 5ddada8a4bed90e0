#include "polarmem/channel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace polarmem {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << what << " must lie in [0, 1], got " << p;
    throw ChannelError(os.str());
  }
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::atomic<std::uint64_t> next_mpo_id{1};

}  // namespace

MemorylessChannel bsc(double h) {
  require_probability(h, "crossover probability");
  MemorylessChannel ch;
  ch.w = {{{1.0 - h, h}, {h, 1.0 - h}}};
  return ch;
}

FiniteStateChannel::FiniteStateChannel(std::size_t states, std::vector<double> emission,
                                       std::vector<double> transition, std::vector<double> initial)
    : states_(states),
      emission_(std::move(emission)),
      transition_(std::move(transition)),
      initial_(std::move(initial)) {
  constexpr double tol = 1e-12;
  if (states_ == 0) throw ChannelError("channel needs at least one state");
  if (emission_.size() != 4 * states_) throw ChannelError("emission table must hold 4*d values");
  if (transition_.size() != states_ * states_)
    throw ChannelError("transition table must hold d*d values");
  if (initial_.size() != states_) throw ChannelError("initial law must hold d values");
  for (double v : emission_) require_probability(v, "emission entry");
  for (double v : transition_) require_probability(v, "transition entry");
  for (double v : initial_) require_probability(v, "initial entry");
  for (std::size_t s = 0; s < states_; ++s) {
    for (unsigned x = 0; x < 2; ++x)
      if (!near(this->emission(0, x, s) + this->emission(1, x, s), 1.0, tol))
        throw ChannelError("p(.|x,s) must sum to 1 over y");
    double col = 0.0;
    for (std::size_t t = 0; t < states_; ++t) col += this->transition(t, s);
    if (!near(col, 1.0, tol)) throw ChannelError("q(.|s) must sum to 1");
  }
  double total = 0.0;
  for (double v : initial_) total += v;
  if (!near(total, 1.0, tol)) throw ChannelError("initial law must sum to 1");
}

bool FiniteStateChannel::per_state_bsc(double tol) const {
  for (std::size_t s = 0; s < states_; ++s)
    if (!near(emission(1, 0, s), emission(0, 1, s), tol)) return false;
  return true;
}

double FiniteStateChannel::crossover(std::size_t s) const {
  if (!per_state_bsc()) throw ChannelError("per-state law is not a binary symmetric channel");
  return emission(1, 0, s);
}

FiniteStateChannel FiniteStateChannel::with_initial(std::vector<double> initial) const {
  return FiniteStateChannel(states_, emission_, transition_, std::move(initial));
}

FiniteStateChannel gilbert_elliott(double h_good, double h_bad, double p_good_to_bad,
                                   double p_bad_to_good) {
  require_probability(h_good, "hG");
  require_probability(h_bad, "hB");
  require_probability(p_good_to_bad, "pGB");
  require_probability(p_bad_to_good, "pBG");
  if (h_good > h_bad)
    std::clog << "warning: Gilbert-Elliott channel with hG > hB (good state noisier than bad)\n";
  // emission p[y][x][s], s = 0 (G), 1 (B)
  std::vector<double> emission = {1.0 - h_good, 1.0 - h_bad, h_good, h_bad,
                                  h_good,       h_bad,       1.0 - h_good, 1.0 - h_bad};
  // transition q[s'][s]
  std::vector<double> transition = {1.0 - p_good_to_bad, p_bad_to_good, p_good_to_bad,
                                    1.0 - p_bad_to_good};
  FiniteStateChannel provisional(2, emission, transition, {0.5, 0.5});
  return provisional.with_initial(stationary(provisional));
}

FiniteStateChannel lift_memoryless(const MemorylessChannel& ch) {
  std::vector<double> emission = {ch.w[0][0], ch.w[0][1], ch.w[1][0], ch.w[1][1]};
  return FiniteStateChannel(1, std::move(emission), {1.0}, {1.0});
}

std::vector<double> stationary(const FiniteStateChannel& ch) {
  const std::size_t d = ch.states();
  // Rows: sum_s q(s'|s) pi_s - pi_s' = 0; the last balance row is redundant and
  // is replaced by the normalization sum pi = 1.
  std::vector<double> m(d * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m[r * d + c] = ch.transition(r, c) - (r == c ? 1.0 : 0.0);

  // Rank check on the balance equations alone.
  {
    std::vector<double> a = m;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < d && rank < d; ++c) {
      std::size_t piv = rank;
      for (std::size_t r = rank; r < d; ++r)
        if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
      if (std::abs(a[piv * d + c]) < 1e-12) continue;
      for (std::size_t k = 0; k < d; ++k) std::swap(a[rank * d + k], a[piv * d + k]);
      for (std::size_t r = rank + 1; r < d; ++r) {
        const double f = a[r * d + c] / a[rank * d + c];
        for (std::size_t k = c; k < d; ++k) a[r * d + k] -= f * a[rank * d + k];
      }
      ++rank;
    }
    if (rank + 1 != d)
      throw ChannelError("state chain has no unique stationary distribution");
  }

  std::vector<double> rhs(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) m[(d - 1) * d + c] = 1.0;
  rhs[d - 1] = 1.0;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c; r < d; ++r)
      if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
    for (std::size_t k = 0; k < d; ++k) std::swap(m[c * d + k], m[piv * d + k]);
    std::swap(rhs[c], rhs[piv]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = m[r * d + c] / m[c * d + c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < d; ++k) m[r * d + k] -= f * m[c * d + k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> pi(d);
  for (std::size_t s = 0; s < d; ++s) pi[s] = std::max(0.0, rhs[s] / m[s * d + s]);
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

double mean_burst_length(const FiniteStateChannel& ch) {
  if (ch.states() != 2) throw ChannelError("mean burst length is defined for two-state channels");
  const double p_bad_to_good = ch.transition(0, 1);
  if (p_bad_to_good == 0.0) throw UnboundedBurstError("P(B->G) = 0: bursts never end");
  return 1.0 / p_bad_to_good;
}

double good_bad_ratio(const FiniteStateChannel& ch) {
  if (ch.states() != 2) throw ChannelError("good-to-bad ratio is defined for two-state channels");
  const double p_good_to_bad = ch.transition(1, 0);
  if (p_good_to_bad == 0.0) throw UnboundedBurstError("P(G->B) = 0: the bad state is never entered");
  return ch.transition(0, 1) / p_good_to_bad;
}

double average_crossover(const FiniteStateChannel& ch) {
  if (!ch.per_state_bsc()) throw ChannelError("average crossover requires per-state BSC laws");
  const auto pi = stationary(ch);
  double avg = 0.0;
  for (std::size_t s = 0; s < ch.states(); ++s) avg += pi[s] * ch.crossover(s);
  return avg;
}

namespace {

std::size_t sample_discrete(std::span<const double> weights, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

}  // namespace

Transmission sample_transmission(const FiniteStateChannel& ch, std::span<const std::uint8_t> x,
                                 Rng& rng) {
  const std::size_t d = ch.states();
  Transmission out;
  out.y.resize(x.size());
  out.states.resize(x.size() + 1);
  std::vector<double> column(d);
  std::size_t s = d == 1 ? 0 : sample_discrete(ch.initial_distribution(), rng);
  out.states[0] = s;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const unsigned xn = x[n] & 1u;
    const double flip = ch.emission(xn ^ 1u, xn, s);
    out.y[n] = static_cast<std::uint8_t>(xn ^ (rng.uniform() < flip ? 1u : 0u));
    if (d > 1) {
      for (std::size_t t = 0; t < d; ++t) column[t] = ch.transition(t, s);
      s = sample_discrete(column, rng);
    }
    out.states[n + 1] = s;
  }
  return out;
}

double channel_likelihood(const FiniteStateChannel& ch, std::span<const std::uint8_t> x,
                          std::span<const std::uint8_t> y) {
  if (x.size() != y.size()) throw ChannelError("input and output lengths differ");
  const std::size_t d = ch.states();
  std::vector<double> alpha(ch.initial_distribution().begin(), ch.initial_distribution().end());
  std::vector<double> next(d);
  for (std::size_t n = 0; n < x.size(); ++n) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < d; ++s) {
      const double w = alpha[s] * ch.emission(y[n] & 1u, x[n] & 1u, s);
      for (std::size_t t = 0; t < d; ++t) next[t] += w * ch.transition(t, s);
    }
    alpha.swap(next);
  }
  double total = 0.0;
  for (double v : alpha) total += v;
  return total;
}

ChainMpo::ChainMpo(std::size_t states, std::vector<Tensor> sites, Tensor initial, Tensor terminal,
                   OpenLeg leg)
    : states_(states),
      sites_(std::move(sites)),
      initial_(std::move(initial)),
      terminal_(std::move(terminal)),
      leg_(leg),
      id_(next_mpo_id.fetch_add(1)) {
  const std::size_t d = states_;
  if (initial_.dims() != std::vector<std::size_t>{d} || terminal_.dims() != std::vector<std::size_t>{d})
    throw ChannelError("MPO boundary vectors must have extent d");
  packed_.resize(sites_.size() * 2 * d * d);
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    if (sites_[j].dims() != std::vector<std::size_t>{d, d, 2})
      throw ChannelError("MPO sites must have extents (d, d, 2)");
    auto data = sites_[j].data();
    for (unsigned b = 0; b < 2; ++b)
      for (std::size_t s = 0; s < d; ++s)
        for (std::size_t t = 0; t < d; ++t)
          packed_[((j * 2 + b) * d + s) * d + t] = data[(s * d + t) * 2 + b];
  }
}

double ChainMpo::evaluate(std::span<const std::uint8_t> legs) const {
  if (legs.size() != length()) throw ChannelError("leg assignment length differs from MPO length");
  const std::size_t d = states_;
  std::vector<double> v(initial_.data().begin(), initial_.data().end());
  std::vector<double> next(d);
  for (std::size_t j = 0; j < length(); ++j) {
    const double* m = matrix(j, legs[j] & 1u);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < d; ++s)
      for (std::size_t t = 0; t < d; ++t) next[t] += v[s] * m[s * d + t];
    v.swap(next);
  }
  double total = 0.0;
  for (std::size_t s = 0; s < d; ++s) total += v[s] * terminal_.data()[s];
  return total;
}

ChainMpo evidence_mpo(const FiniteStateChannel& ch, std::span<const std::uint8_t> y) {
  const std::size_t d = ch.states();
  std::vector<Tensor> sites;
  sites.reserve(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    std::vector<double> v(d * d * 2);
    for (std::size_t s = 0; s < d; ++s)
      for (std::size_t t = 0; t < d; ++t)
        for (unsigned x = 0; x < 2; ++x)
          v[(s * d + t) * 2 + x] = ch.transition(t, s) * ch.emission(y[j] & 1u, x, s);
    sites.emplace_back(std::vector<std::size_t>{d, d, 2}, std::move(v));
  }
  Tensor init({d}, std::vector<double>(ch.initial_distribution().begin(),
                                       ch.initial_distribution().end()));
  return ChainMpo(d, std::move(sites), std::move(init), tensors::ones(d), OpenLeg::input);
}

ChainMpo error_mpo(const FiniteStateChannel& ch, std::size_t length) {
  const std::size_t d = ch.states();
  std::vector<double> h(d);
  for (std::size_t s = 0; s < d; ++s) h[s] = ch.crossover(s);
  std::vector<double> v(d * d * 2);
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t t = 0; t < d; ++t) {
      v[(s * d + t) * 2 + 0] = ch.transition(t, s) * (1.0 - h[s]);
      v[(s * d + t) * 2 + 1] = ch.transition(t, s) * h[s];
    }
  std::vector<Tensor> sites(length, Tensor({d, d, 2}, v));
  Tensor init({d}, std::vector<double>(ch.initial_distribution().begin(),
                                       ch.initial_distribution().end()));
  return ChainMpo(d, std::move(sites), std::move(init), tensors::ones(d), OpenLeg::error);
}

}  // namespace polarmem
