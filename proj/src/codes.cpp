#include "polarmem/codes.hpp"

#include <algorithm>

namespace polarmem {

namespace {

Gate pair_gate(std::uint32_t lo, std::uint32_t hi, Orientation orientation) {
  return orientation == Orientation::target_low ? Gate{hi, lo} : Gate{lo, hi};
}

}  // namespace

Circuit Circuit::build(Family family, int n, CircuitOptions options) {
  if (n < 1) throw CodeError("circuit needs at least one polarization step");
  if (n > 24) throw CodeError("circuit length too large");
  Circuit c;
  c.family_ = family;
  c.options_ = options;
  c.n_ = n;
  for (int level = 0; level < n; ++level) {
    const auto m = static_cast<std::uint32_t>(c.block_size(level));
    std::vector<Gate> pairs;
    for (std::uint32_t p = 0; p < m / 2; ++p)
      pairs.push_back(pair_gate(2 * p, 2 * p + 1, options.orientation));
    std::vector<std::vector<Gate>> level_gates;
    if (family == Family::polar) {
      level_gates.push_back(std::move(pairs));
    } else {
      // Shifted pairs (2p+1, 2p+2); open boundary, no gate wraps the block.
      std::vector<Gate> shifted;
      for (std::uint32_t p = 0; p + 1 < m / 2; ++p)
        shifted.push_back(pair_gate(2 * p + 1, 2 * p + 2, options.orientation));
      if (options.shift_order == ShiftOrder::shifted_first) {
        level_gates.push_back(std::move(shifted));
        level_gates.push_back(std::move(pairs));
      } else {
        level_gates.push_back(std::move(pairs));
        level_gates.push_back(std::move(shifted));
      }
    }
    c.sublayers_.push_back(std::move(level_gates));
  }
  return c;
}

std::vector<std::vector<Gate>> Circuit::global_sublayers(int level) const {
  const auto m = static_cast<std::uint32_t>(block_size(level));
  const auto blocks = static_cast<std::uint32_t>(length() / m);
  std::vector<std::vector<Gate>> out;
  for (const auto& sub : block_sublayers(level)) {
    std::vector<Gate> g;
    g.reserve(sub.size() * blocks);
    for (std::uint32_t b = 0; b < blocks; ++b)
      for (const auto& gate : sub) g.push_back({b * m + gate.control, b * m + gate.target});
    out.push_back(std::move(g));
  }
  return out;
}

std::size_t Circuit::route(int level, std::size_t wire) const {
  const std::size_t m = block_size(level);
  const std::size_t b = wire / m, t = wire % m;
  return (2 * b + (t & 1)) * (m / 2) + (t >> 1);
}

std::size_t Circuit::gate_count() const noexcept {
  std::size_t total = 0;
  for (int level = 0; level < n_; ++level) {
    std::size_t per_block = 0;
    for (const auto& sub : sublayers_[level]) per_block += sub.size();
    total += per_block * (std::size_t{1} << level);
  }
  return total;
}

std::vector<std::uint8_t> Circuit::apply(std::span<const std::uint8_t> u) const {
  if (u.size() != length()) throw CodeError("input word length differs from circuit length");
  std::vector<std::uint8_t> w(u.begin(), u.end()), next(length());
  for (auto& b : w) b &= 1u;
  for (int level = 0; level < n_; ++level) {
    const std::size_t m = block_size(level);
    for (std::size_t base = 0; base < length(); base += m)
      for (const auto& sub : sublayers_[level])
        for (const auto& g : sub) w[base + g.target] ^= w[base + g.control];
    for (std::size_t wire = 0; wire < length(); ++wire) next[route(level, wire)] = w[wire];
    w.swap(next);
  }
  return w;
}

Circuit polar_circuit(int n, CircuitOptions options) {
  return Circuit::build(Family::polar, n, options);
}

Circuit cpc_circuit(int n, CircuitOptions options) {
  return Circuit::build(Family::conv_polar, n, options);
}

CodeSpec::CodeSpec(Family family, int n, std::vector<std::uint32_t> frozen, CircuitOptions options)
    : family_(family), n_(n), frozen_(std::move(frozen)) {
  circuit_ = std::make_shared<const Circuit>(Circuit::build(family, n, options));
  std::sort(frozen_.begin(), frozen_.end());
  if (std::adjacent_find(frozen_.begin(), frozen_.end()) != frozen_.end())
    throw CodeError("frozen positions must be distinct");
  frozen_mask_.assign(length(), 0);
  for (auto i : frozen_) {
    if (i >= length()) throw CodeError("frozen position outside the block");
    frozen_mask_[i] = 1;
  }
}

std::vector<std::uint8_t> CodeSpec::scatter(std::span<const std::uint8_t> message) const {
  if (message.size() != dimension()) throw CodeError("message length differs from code dimension");
  std::vector<std::uint8_t> u(length(), frozen_value());
  std::size_t k = 0;
  for (std::size_t i = 0; i < length(); ++i)
    if (!frozen_mask_[i]) u[i] = message[k++] & 1u;
  return u;
}

std::vector<std::uint8_t> CodeSpec::gather(std::span<const std::uint8_t> u) const {
  if (u.size() != length()) throw CodeError("input word length differs from code length");
  std::vector<std::uint8_t> message;
  message.reserve(dimension());
  for (std::size_t i = 0; i < length(); ++i)
    if (!frozen_mask_[i]) message.push_back(u[i]);
  return message;
}

std::vector<std::uint8_t> encode(const CodeSpec& spec, std::span<const std::uint8_t> message) {
  const auto u = spec.scatter(message);
  return spec.circuit().apply(u);
}

std::string family_name(Family family) {
  return family == Family::polar ? "polar" : "conv-polar";
}

std::string family_label(Family family) { return family == Family::polar ? "pc" : "cpc"; }

Family parse_family(const std::string& text) {
  if (text == "polar" || text == "pc") return Family::polar;
  if (text == "conv-polar" || text == "cpc" || text == "conv_polar") return Family::conv_polar;
  throw CodeError("unknown code family '" + text + "'");
}

}  // namespace polarmem
