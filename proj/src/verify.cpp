#include "polarmem/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "polarmem/construction.hpp"
#include "polarmem/decoder.hpp"

namespace polarmem {

FiniteStateChannel random_channel(std::size_t states, Rng& rng, bool per_state_bsc) {
  const std::size_t d = states;
  std::vector<double> emission(4 * d), transition(d * d), initial(d);
  for (std::size_t s = 0; s < d; ++s) {
    const double flip0 = 0.45 * rng.uniform();
    const double flip1 = per_state_bsc ? flip0 : 0.45 * rng.uniform();
    emission[(0 * 2 + 0) * d + s] = 1.0 - flip0;
    emission[(1 * 2 + 0) * d + s] = flip0;
    emission[(0 * 2 + 1) * d + s] = flip1;
    emission[(1 * 2 + 1) * d + s] = 1.0 - flip1;
    double total = 0.0;
    for (std::size_t t = 0; t < d; ++t) total += transition[t * d + s] = 0.05 + rng.uniform();
    for (std::size_t t = 0; t < d; ++t) transition[t * d + s] /= total;
  }
  double total = 0.0;
  for (auto& p : initial) total += p = 0.1 + rng.uniform();
  for (auto& p : initial) p /= total;
  return FiniteStateChannel(d, std::move(emission), std::move(transition), std::move(initial));
}

CnotIdentities check_cnot_identities(const Tensor& cnot) {
  CnotIdentities out;
  if (cnot.dims() != std::vector<std::size_t>{2, 2, 2, 2}) return out;
  const Tensor both = sum_index(sum_index(cnot, 3), 2);
  out.sum_both = true;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) out.sum_both &= both.at({a, b}) == 1.0;

  const Tensor target = sum_index(cnot, 3);  // axes (a, b, c)
  out.sum_target = true;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t c = 0; c < 2; ++c) out.sum_target &= target.at({a, b, c}) == (a == c ? 1.0 : 0.0);

  out.fixed_inputs = true;
  for (unsigned a = 0; a < 2; ++a)
    for (unsigned b = 0; b < 2; ++b) {
      const Tensor fixed = fix_index(fix_index(cnot, 0, a), 0, b);
      const Tensor expected = outer(tensors::point(a), tensors::point(a ^ b));
      for (std::size_t i = 0; i < 4; ++i) out.fixed_inputs &= fixed.data()[i] == expected.data()[i];
    }
  return out;
}

double normalization_error(const FiniteStateChannel& ch, std::size_t n) {
  double worst = 0.0;
  std::vector<std::uint8_t> x(n), y(n);
  for (std::size_t xi = 0; xi < (std::size_t{1} << n); ++xi) {
    for (std::size_t j = 0; j < n; ++j) x[j] = (xi >> j) & 1u;
    double total = 0.0;
    for (std::size_t yi = 0; yi < (std::size_t{1} << n); ++yi) {
      for (std::size_t j = 0; j < n; ++j) y[j] = (yi >> j) & 1u;
      total += channel_likelihood(ch, x, y);
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

ContractionFit fit_contractions(Family family, const std::vector<int>& levels, std::size_t states,
                                std::uint64_t seed) {
  ContractionFit fit;
  Rng rng(seed);
  const FiniteStateChannel ch = random_channel(states, rng, true);
  std::vector<double> ratios;
  for (int n : levels) {
    const CodeSpec spec(family, n, {});
    std::vector<std::uint8_t> y(spec.length());
    for (auto& b : y) b = static_cast<std::uint8_t>(rng.bit());
    const ChainMpo mpo = evidence_mpo(ch, y);
    const DecodeResult r = sc_decode(spec, mpo);
    const double x = static_cast<double>(spec.length()) * n;
    fit.lengths.push_back(spec.length());
    fit.counts.push_back(static_cast<double>(r.stats.contractions));
    ratios.push_back(static_cast<double>(r.stats.contractions) / x);
  }
  // Least squares on the relative residuals count / (N log N) - c.
  double sum = 0.0;
  for (double r : ratios) sum += r;
  fit.c = ratios.empty() ? 0.0 : sum / static_cast<double>(ratios.size());
  for (double r : ratios) fit.max_deviation = std::max(fit.max_deviation, std::abs(r / fit.c - 1.0));
  return fit;
}

namespace {

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

// Worst relative difference between the fast engine and a reference over
// every SC step of random frames with random true prefixes.
double engine_gap(Family family, int n, std::size_t states, std::size_t frames, bool against_brute,
                  Rng& rng) {
  const auto circuit = std::make_shared<const Circuit>(Circuit::build(family, n));
  const std::size_t len = circuit->length();
  const std::size_t window = default_window(family);
  double worst = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const FiniteStateChannel ch = random_channel(states, rng);
    std::vector<std::uint8_t> y(len), u(len);
    for (auto& b : y) b = static_cast<std::uint8_t>(rng.bit());
    for (auto& b : u) b = static_cast<std::uint8_t>(rng.bit());
    const ChainMpo mpo = evidence_mpo(ch, y);
    DecodeState state(FastSchedule::shared(circuit), mpo);
    for (std::size_t lo = 0; lo < len; lo += window) {
      const std::size_t hi = std::min(len, lo + window);
      const std::span<const std::uint8_t> prefix(u.data(), lo);
      const MarginalTable fast = state.marginal(prefix, hi);
      const MarginalTable ref = against_brute ? brute_force_marginal(*circuit, ch, y, prefix, hi)
                                              : window_marginal_sweep(mpo, *circuit, prefix, hi);
      worst = std::max(worst, relative_difference(ref, fast));
    }
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  auto report = [&](std::string name, bool passed, std::string detail) {
    results.push_back({std::move(name), passed, std::move(detail)});
    if (options.on_check) options.on_check(results.back());
  };
  Rng rng(options.seed);

  const CnotIdentities id = check_cnot_identities(options.cnot ? *options.cnot : tensors::cnot());
  report("cnot: sum over both outputs", id.sum_both, "");
  report("cnot: sum over target output", id.sum_target, "");
  report("cnot: fixed inputs", id.fixed_inputs, "");

  const double ge_err = normalization_error(gilbert_elliott(0.02, 0.9, 0.01, 0.05), 6);
  report("normalization: Gilbert-Elliott, N=6", ge_err <= 1e-12, fmt("max error %.3g", ge_err));
  const double d3_err = normalization_error(random_channel(3, rng), 5);
  report("normalization: random d=3 channel, N=5", d3_err <= 1e-12, fmt("max error %.3g", d3_err));

  for (Family family : {Family::polar, Family::conv_polar})
    for (int n : {2, 3}) {
      double worst = 0.0;
      for (std::size_t d = 1; d <= 3; ++d) worst = std::max(worst, engine_gap(family, n, d, 3, true, rng));
      report("fast vs brute force: " + family_label(family) + " N=" + std::to_string(1 << n), worst <= 1e-9,
             fmt("max relative difference %.3g", worst));
    }

  {
    const auto c = std::make_shared<const Circuit>(polar_circuit(1));
    const ErrorProfile p = first_error_profile(c, error_mpo(lift_memoryless(bsc(0.1)), 2));
    const double e1 = p.value(0), e2 = p.value(1);
    const bool ok = std::abs(e1 - 0.18) <= 1e-12 && std::abs(e2 - 0.01) <= 1e-12;
    report("construction: N=2 over BSC(0.1)", ok, fmt("E(u1)=%.12g E(u2)=%.12g", e1, e2));
  }

  if (options.full) {
    for (Family family : {Family::polar, Family::conv_polar}) {
      const double worst = engine_gap(family, 6, 3, 5, false, rng);
      report("fast vs sweep: " + family_label(family) + " N=64 d=3", worst <= 1e-9,
             fmt("max relative difference %.3g", worst));
    }
    for (Family family : {Family::polar, Family::conv_polar}) {
      const ContractionFit fit = fit_contractions(family, {6, 7, 8, 9, 10}, 2, options.seed);
      report("contraction count ~ c N log N: " + family_label(family), fit.max_deviation <= 0.2,
             fmt("c=%.3f max deviation %.3f", fit.c, fit.max_deviation));
    }
  }
  return results;
}

}  // namespace polarmem
