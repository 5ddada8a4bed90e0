#include "polarmem/construction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polarmem/decoder.hpp"

namespace polarmem {

double ErrorProfile::value(std::size_t i) const { return std::exp2(log2_e.at(i)); }

ErrorProfile first_error_profile(const std::shared_ptr<const Circuit>& circuit, const ChainMpo& errmpo) {
  if (errmpo.leg() != OpenLeg::error) throw CodeError("construction needs an error chain");
  const std::size_t n = circuit->length();
  DecodeState state(FastSchedule::shared(circuit), errmpo);
  const std::vector<std::uint8_t> zeros(n, 0);
  ErrorProfile profile;
  profile.log2_e.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto table = state.marginal(std::span<const std::uint8_t>(zeros.data(), i), i + 1);
    const double v = table.values[1];
    profile.log2_e[i] = v > 0.0 ? std::log2(v) + static_cast<double>(table.exponent)
                                : -std::numeric_limits<double>::infinity();
  }
  return profile;
}

double first_error_probability(const CodeSpec& spec, const ChainMpo& errmpo, std::size_t i) {
  if (errmpo.leg() != OpenLeg::error) throw CodeError("construction needs an error chain");
  if (i >= spec.length()) throw CodeError("position outside the block");
  DecodeState state(FastSchedule::shared(spec.circuit_ptr()), errmpo);
  const std::vector<std::uint8_t> zeros(i, 0);
  return state.marginal(zeros, i + 1).value(1);
}

ChainMpo construction_mpo(const FiniteStateChannel& channel, ConstructionMode mode, std::size_t length) {
  if (mode == ConstructionMode::corr) return error_mpo(channel, length);
  return error_mpo(lift_memoryless(bsc(average_crossover(channel))), length);
}

std::vector<std::uint32_t> freeze_order(const ErrorProfile& profile) {
  const std::size_t n = profile.log2_e.size();
  // Quantized keys make near-equal values compare equal, so that ties resolve
  // by index instead of by rounding noise.
  std::vector<std::int64_t> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = profile.log2_e[i];
    key[i] = std::isfinite(l) ? std::llround(l * 1e9) : std::numeric_limits<std::int64_t>::min();
  }
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return a > b;
  });
  return order;
}

Construction construct_frozen_set(Family family, int n, std::size_t k, const FiniteStateChannel& channel,
                                  ConstructionMode mode, CircuitOptions options) {
  auto circuit = std::make_shared<const Circuit>(Circuit::build(family, n, options));
  const std::size_t length = circuit->length();
  if (k > length) throw CodeError("k exceeds the block length");
  const ChainMpo errmpo = construction_mpo(channel, mode, length);
  ErrorProfile profile = first_error_profile(circuit, errmpo);
  auto order = freeze_order(profile);
  order.resize(length - k);
  return {CodeSpec(family, n, std::move(order), options), std::move(profile)};
}

ConstructionMode parse_mode(const std::string& text) {
  if (text == "iid") return ConstructionMode::iid;
  if (text == "corr") return ConstructionMode::corr;
  throw CodeError("unknown construction mode '" + text + "'");
}

std::string mode_name(ConstructionMode mode) { return mode == ConstructionMode::iid ? "iid" : "corr"; }

}  // namespace polarmem
