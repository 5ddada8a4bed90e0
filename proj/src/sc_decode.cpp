#include <algorithm>
#include <cmath>
#include <limits>

#include "polarmem/decoder.hpp"

namespace polarmem {

double MarginalTable::value(std::size_t w) const {
  return std::ldexp(values.at(w), static_cast<int>(std::clamp<std::int64_t>(exponent, -100000, 100000)));
}

double MarginalTable::max_value() const {
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  return peak;
}

bool MarginalTable::all_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double relative_difference(const MarginalTable& a, const MarginalTable& b) {
  if (a.values.size() != b.values.size()) return std::numeric_limits<double>::infinity();
  const std::int64_t top = std::max(a.exponent, b.exponent);
  auto scaled = [top](const MarginalTable& t, std::size_t i) {
    return std::ldexp(t.values[i], static_cast<int>(std::max<std::int64_t>(t.exponent - top, -4000)));
  };
  double diff = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = scaled(a, i), y = scaled(b, i);
    diff = std::max(diff, std::abs(x - y));
    peak = std::max(peak, std::abs(x));
  }
  if (peak == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / peak;
}

EngineStats& EngineStats::operator+=(const EngineStats& o) {
  contractions += o.contractions;
  cache_hits += o.cache_hits;
  cache_misses += o.cache_misses;
  max_entries = std::max(max_entries, o.max_entries);
  couplings += o.couplings;
  return *this;
}

MarginalTable brute_force_marginal(const Circuit& circuit, const FiniteStateChannel& ch,
                                   std::span<const std::uint8_t> y,
                                   std::span<const std::uint8_t> prefix, std::size_t hi) {
  const std::size_t n = circuit.length();
  if (n > 12) throw DecoderError("brute-force marginal is limited to N <= 12");
  if (y.size() != n) throw DecoderError("received word length differs from code length");
  const std::size_t lo = prefix.size();
  if (hi < lo || hi > n) throw DecoderError("window outside the block");
  MarginalTable table;
  table.lo = lo;
  table.hi = hi;
  table.values.assign(std::size_t{1} << (hi - lo), 0.0);
  std::vector<std::uint8_t> u(n, 0);
  std::copy(prefix.begin(), prefix.end(), u.begin());
  for (std::size_t w = 0; w < table.values.size(); ++w) {
    for (std::size_t t = 0; t < hi - lo; ++t) u[lo + t] = (w >> t) & 1u;
    for (std::size_t h = 0; h < (std::size_t{1} << (n - hi)); ++h) {
      for (std::size_t t = 0; t < n - hi; ++t) u[hi + t] = (h >> t) & 1u;
      table.values[w] += channel_likelihood(ch, circuit.apply(u), y);
    }
  }
  return table;
}

std::size_t default_window(Family family) { return family == Family::polar ? 1 : 3; }

std::uint32_t decide_window(const MarginalTable& table, std::uint32_t frozen_mask,
                            double tie_tolerance) {
  const std::size_t width = table.width();
  double best = 0.0;
  for (std::uint32_t w = 0; w < table.values.size(); ++w)
    if (!(w & frozen_mask)) best = std::max(best, table.values[w]);
  const double threshold = best * (1.0 - tie_tolerance);
  // r enumerates (u_lo, u_lo+1, ...) in lexicographic order, u_lo most significant.
  for (std::uint32_t r = 0; r < table.values.size(); ++r) {
    std::uint32_t w = 0;
    for (std::size_t t = 0; t < width; ++t)
      if (r >> (width - 1 - t) & 1u) w |= 1u << t;
    if (w & frozen_mask) continue;
    if (table.values[w] >= threshold) return w;
  }
  return 0;
}

DecodeResult sc_decode(const CodeSpec& spec, const ChainMpo& mpo, const DecodeOptions& options) {
  const std::size_t n = spec.length();
  if (mpo.length() != n) throw DecoderError("channel chain length differs from code length");
  const std::size_t window = options.window ? options.window : default_window(spec.family());
  if (window > FastSchedule::max_open) throw DecoderError("window wider than the open-axis bound");

  DecodeResult result;
  result.u.assign(n, 0);
  std::unique_ptr<DecodeState> state;
  if (options.engine == Engine::fast)
    state = std::make_unique<DecodeState>(FastSchedule::shared(spec.circuit_ptr()), mpo,
                                          options.caching);

  for (std::size_t lo = 0; lo < n; lo += window) {
    const std::size_t hi = std::min(n, lo + window);
    std::uint32_t frozen = 0;
    for (std::size_t i = lo; i < hi; ++i)
      if (spec.is_frozen(i)) frozen |= 1u << (i - lo);
    if (frozen == (1u << (hi - lo)) - 1) continue;

    const std::span<const std::uint8_t> prefix(result.u.data(), lo);
    const MarginalTable table = state ? state->marginal(prefix, hi)
                                      : window_marginal_sweep(mpo, spec.circuit(), prefix, hi,
                                                              &result.stats);
    if (table.all_zero()) ++result.zero_tables;
    const std::uint32_t decision = decide_window(table, frozen, options.tie_tolerance);
    for (std::size_t i = lo; i < hi; ++i) result.u[i] = (decision >> (i - lo)) & 1u;
    if (options.on_step) options.on_step(StepRecord{lo, hi, &table, decision});
  }
  if (state) result.stats += state->stats();
  result.message = spec.gather(result.u);
  return result;
}

}  // namespace polarmem
