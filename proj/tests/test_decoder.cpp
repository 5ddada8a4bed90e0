#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "polarmem/construction.hpp"
#include "polarmem/decoder.hpp"
#include "polarmem/verify.hpp"

using namespace polarmem;

namespace {

oracle::Bits random_bits(std::size_t n, Rng& rng) {
  oracle::Bits b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.bit());
  return b;
}

std::vector<double> normalized(const MarginalTable& t) {
  double total = 0.0;
  for (double v : t.values) total += v;
  std::vector<double> out;
  for (double v : t.values) out.push_back(v / total);
  return out;
}

std::vector<double> normalized(const std::vector<double>& t) {
  double total = 0.0;
  for (double v : t) total += v;
  std::vector<double> out;
  for (double v : t) out.push_back(v / total);
  return out;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(a[i]));
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst / scale;
}

std::vector<double> table_values(const MarginalTable& t) {
  std::vector<double> out;
  for (std::size_t w = 0; w < t.values.size(); ++w) out.push_back(t.value(w));
  return out;
}

const CircuitOptions all_options[] = {
    {Orientation::target_low, ShiftOrder::shifted_first},
    {Orientation::target_low, ShiftOrder::pairs_first},
    {Orientation::control_low, ShiftOrder::shifted_first},
    {Orientation::control_low, ShiftOrder::pairs_first},
};

}  // namespace

// ---------------------------------------------------------------- push-down

TEST_CASE("push-down: all inputs summed") {
  for (Family family : {Family::polar, Family::conv_polar})
    for (int n = 1; n <= 6; ++n) {
      const Circuit c = Circuit::build(family, n);
      const std::vector<LegState> in(c.length(), LegState::sum());
      const auto pd = push_down(c, in);
      for (const auto& leg : pd.legs) CHECK(leg.kind == LegState::Kind::sum);
      CHECK(pd.rank() == c.length());
      CHECK(pd.couplings == 0);
    }
}

TEST_CASE("push-down: all inputs fixed reproduces the encoder") {
  Rng rng(51);
  for (Family family : {Family::polar, Family::conv_polar})
    for (int n = 1; n <= 6; ++n) {
      const Circuit c = Circuit::build(family, n);
      const auto u = random_bits(c.length(), rng);
      std::vector<LegState> in;
      for (auto b : u) in.push_back(LegState::fixed(b));
      const auto pd = push_down(c, in);
      const auto x = c.apply(u);
      for (std::size_t j = 0; j < x.size(); ++j) CHECK(pd.legs[j] == LegState::fixed(x[j]));
    }
}

TEST_CASE("push-down matches symbolic enumeration of the induced codewords") {
  Rng rng(52);
  for (Family family : {Family::polar, Family::conv_polar})
    for (const auto& opt : all_options)
      for (int n : {2, 3}) {
        const Circuit c = Circuit::build(family, n, opt);
        const std::size_t len = c.length();
        const auto g = oracle::gate_list_matrix(c);
        for (std::size_t lo = 0; lo < len; ++lo)
          for (std::size_t hi = lo; hi <= std::min(len, lo + 3); ++hi) {
            const auto prefix = random_bits(lo, rng);
            std::vector<LegState> in;
            for (auto b : prefix) in.push_back(LegState::fixed(b));
            for (std::size_t i = lo; i < hi; ++i) in.push_back(LegState::open(static_cast<unsigned>(i - lo)));
            while (in.size() < len) in.push_back(LegState::sum());
            const auto pd = push_down(c, in);
            CHECK(pd.symbols == len - hi);

            // Affine subspace described by the result: constant + window(w) + span(rows).
            for (std::size_t w = 0; w < (std::size_t{1} << (hi - lo)); ++w) {
              oracle::Bits base(len);
              for (std::size_t j = 0; j < len; ++j)
                base[j] = pd.constant[j] ^ (std::popcount(pd.window[j] & static_cast<std::uint32_t>(w)) & 1u);
              std::set<oracle::Bits> predicted;
              for (std::size_t s = 0; s < (std::size_t{1} << pd.rank()); ++s) {
                oracle::Bits x = base;
                for (std::size_t r = 0; r < pd.rank(); ++r)
                  if ((s >> r) & 1u)
                    for (auto j : pd.rows[r]) x[j] ^= 1u;
                predicted.insert(x);
              }
              CHECK(predicted.size() == (std::size_t{1} << pd.rank()));

              std::map<oracle::Bits, std::size_t> induced;
              for (std::size_t rest = 0; rest < (std::size_t{1} << (len - hi)); ++rest) {
                oracle::Bits u = prefix;
                for (std::size_t t = 0; t < hi - lo; ++t) u.push_back((w >> t) & 1u);
                for (std::size_t t = 0; t < len - hi; ++t) u.push_back((rest >> t) & 1u);
                ++induced[oracle::multiply(u, g)];
              }
              std::set<oracle::Bits> seen;
              for (const auto& [x, count] : induced) {
                seen.insert(x);
                CHECK(count == std::size_t{1} << (pd.symbols - pd.rank()));
              }
              CHECK(seen == predicted);
            }
            // Leg kinds agree with the rows.
            for (std::size_t j = 0; j < len; ++j) {
              std::size_t in_rows = 0, singles = 0;
              for (const auto& r : pd.rows)
                if (std::find(r.begin(), r.end(), j) != r.end()) {
                  ++in_rows;
                  singles += r.size() == 1;
                }
              if (singles) CHECK(pd.legs[j].kind == LegState::Kind::sum);
              else if (in_rows) CHECK(pd.legs[j].kind == LegState::Kind::coupled);
              else CHECK(pd.legs[j] == LegState::affine(pd.window[j], pd.constant[j]));
            }
          }
      }
}

// ---------------------------------------------------------------- engines

TEST_CASE("brute force matches the path-enumeration oracle") {
  Rng rng(53);
  for (Family family : {Family::polar, Family::conv_polar})
    for (std::size_t d = 1; d <= 3; ++d)
      for (int n : {1, 2, 3}) {
        const Circuit c = Circuit::build(family, n);
        const auto g = oracle::gate_list_matrix(c);
        const auto ch = random_channel(d, rng);
        const auto y = random_bits(c.length(), rng);
        for (std::size_t lo = 0; lo < c.length(); ++lo) {
          const auto prefix = random_bits(lo, rng);
          const std::size_t hi = std::min(c.length(), lo + 2);
          const auto ref = oracle::enumerate_marginal(g, ch, y, prefix, hi);
          const auto got = brute_force_marginal(c, ch, y, prefix, hi);
          CHECK(max_rel(table_values(got), ref) <= 1e-12);
        }
      }
  CHECK_THROWS_AS(brute_force_marginal(polar_circuit(13), lift_memoryless(bsc(0.1)),
                                       oracle::Bits(8192, 0), oracle::Bits{}, 1),
                  DecoderError);
}

TEST_CASE("N=2 polar hand-computed sums") {
  const double h = 0.2;
  const auto ch = lift_memoryless(bsc(h));
  const oracle::Bits y{0, 0};
  const auto mpo = evidence_mpo(ch, y);
  const Circuit c = polar_circuit(1);
  // x = (u1 ^ u2, u2): u1 = 0 sums x in {00, 11}, u1 = 1 sums x in {10, 01}.
  const std::vector<double> first{(1 - h) * (1 - h) + h * h, 2 * h * (1 - h)};
  CHECK(max_rel(table_values(window_marginal_sweep(mpo, c, oracle::Bits{}, 1)), first) <= 1e-15);
  CHECK(max_rel(table_values(brute_force_marginal(c, ch, y, oracle::Bits{}, 1)), first) <= 1e-15);
  // Given u1 = 1: u2 = 0 gives x = 10, u2 = 1 gives x = 01.
  const std::vector<double> second{h * (1 - h), h * (1 - h)};
  CHECK(max_rel(table_values(window_marginal_sweep(mpo, c, oracle::Bits{1}, 2)), second) <= 1e-15);
  DecodeState state(FastSchedule::shared(std::make_shared<const Circuit>(c)), mpo);
  CHECK(max_rel(table_values(state.marginal(oracle::Bits{}, 1)), first) <= 1e-15);
}

TEST_CASE("uniform channel gives a uniform table") {
  Rng rng(54);
  for (Family family : {Family::polar, Family::conv_polar}) {
    const auto circuit = std::make_shared<const Circuit>(Circuit::build(family, 5));
    const auto mpo = evidence_mpo(lift_memoryless(bsc(0.5)), random_bits(32, rng));
    DecodeState state(FastSchedule::shared(circuit), mpo);
    const auto prefix = random_bits(7, rng);
    const auto fast = state.marginal(prefix, 10);
    const auto sweep = window_marginal_sweep(mpo, *circuit, prefix, 10);
    for (std::size_t w = 1; w < 8; ++w) {
      CHECK(fast.values[w] == doctest::Approx(fast.values[0]).epsilon(1e-12));
      CHECK(sweep.values[w] == doctest::Approx(sweep.values[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("noiseless channel puts the table on the true input") {
  Rng rng(55);
  for (Family family : {Family::polar, Family::conv_polar}) {
    const CodeSpec spec(family, 4, {});
    const auto u = random_bits(16, rng);
    const auto mpo = evidence_mpo(lift_memoryless(bsc(0.0)), spec.circuit().apply(u));
    const auto t = window_marginal_sweep(mpo, spec.circuit(), oracle::Bits{}, 1);
    CHECK(t.values[u[0]] > 0.0);
    CHECK(t.values[u[0] ^ 1u] == 0.0);
  }
}

TEST_CASE("property: fast, sweep and brute-force tables agree") {
  Rng rng(56);
  for (Family family : {Family::polar, Family::conv_polar})
    for (const auto& opt : all_options)
      for (int n : {1, 2, 3})
        for (std::size_t d = 1; d <= 3; ++d) {
          const auto circuit = std::make_shared<const Circuit>(Circuit::build(family, n, opt));
          const std::size_t len = circuit->length();
          const auto ch = random_channel(d, rng);
          const auto y = random_bits(len, rng);
          const auto u = random_bits(len, rng);
          const auto mpo = evidence_mpo(ch, y);
          for (std::size_t window = 1; window <= 3; ++window) {
            DecodeState state(FastSchedule::shared(circuit), mpo);
            for (std::size_t lo = 0; lo < len; lo += window) {
              const std::size_t hi = std::min(len, lo + window);
              const std::span<const std::uint8_t> prefix(u.data(), lo);
              const auto brute = brute_force_marginal(*circuit, ch, y, prefix, hi);
              CHECK(relative_difference(brute, state.marginal(prefix, hi)) <= 1e-10);
              CHECK(relative_difference(brute, window_marginal_sweep(mpo, *circuit, prefix, hi)) <= 1e-10);
            }
          }
        }
}

TEST_CASE("property: fast matches sweep at N=64 and N=128 with memory") {
  Rng rng(57);
  for (Family family : {Family::polar, Family::conv_polar})
    for (int n : {6, 7}) {
      const auto circuit = std::make_shared<const Circuit>(Circuit::build(family, n));
      const std::size_t len = circuit->length();
      const auto mpo = evidence_mpo(random_channel(2, rng), random_bits(len, rng));
      const auto u = random_bits(len, rng);
      DecodeState state(FastSchedule::shared(circuit), mpo);
      const std::size_t window = default_window(family);
      for (std::size_t lo = 0; lo < len; lo += window) {
        const std::size_t hi = std::min(len, lo + window);
        const std::span<const std::uint8_t> prefix(u.data(), lo);
        CHECK(relative_difference(window_marginal_sweep(mpo, *circuit, prefix, hi), state.marginal(prefix, hi)) <=
              1e-10);
      }
    }
}

TEST_CASE("memoryless tables match the textbook SC recursion") {
  Rng rng(58);
  for (double h : {0.05, 0.2, 0.4})
    for (int n : {3, 5}) {
      const auto w = bsc(h);
      const auto circuit = std::make_shared<const Circuit>(polar_circuit(n));
      const std::size_t len = circuit->length();
      const auto y = random_bits(len, rng);
      const auto u = random_bits(len, rng);
      const auto mpo = evidence_mpo(lift_memoryless(w), y);
      DecodeState state(FastSchedule::shared(circuit), mpo);
      for (std::size_t i = 0; i < len; ++i) {
        const oracle::Bits prefix(u.begin(), u.begin() + static_cast<long>(i));
        const auto ref = oracle::sc_channel(w, y.data(), len, prefix);
        const auto got = state.marginal(prefix, i + 1);
        CHECK(max_rel(normalized(got), normalized(std::vector<double>{ref[0], ref[1]})) <= 1e-12);
      }
    }
}

TEST_CASE("first window sums to the total likelihood") {
  Rng rng(59);
  for (Family family : {Family::polar, Family::conv_polar})
    for (int n : {2, 3}) {
      const auto circuit = std::make_shared<const Circuit>(Circuit::build(family, n));
      const std::size_t len = circuit->length();
      const auto g = oracle::gate_list_matrix(*circuit);
      const auto ch = random_channel(2, rng);
      const auto y = random_bits(len, rng);
      double total = 0.0;
      for (std::size_t uv = 0; uv < (std::size_t{1} << len); ++uv)
        total += oracle::path_likelihood(ch, oracle::multiply(oracle::bits_of(uv, len), g), y);
      const auto mpo = evidence_mpo(ch, y);
      DecodeState state(FastSchedule::shared(circuit), mpo);
      const auto t = state.marginal(oracle::Bits{}, default_window(family));
      double sum = 0.0;
      for (std::size_t w = 0; w < t.values.size(); ++w) sum += t.value(w);
      CHECK(sum == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("message size stays within d^2 2^B") {
  Rng rng(60);
  for (Family family : {Family::polar, Family::conv_polar})
    for (std::size_t d : {1u, 2u, 3u}) {
      const CodeSpec spec(family, 8, {});
      const auto mpo = evidence_mpo(random_channel(d, rng), random_bits(spec.length(), rng));
      const auto r = sc_decode(spec, mpo);
      CHECK(r.stats.max_entries <= d * d * (std::size_t{1} << FastSchedule::max_open));
      CHECK(r.stats.max_entries > 0);
    }
}

// ---------------------------------------------------------------- SC decoding

TEST_CASE("decide_window: joint argmax, frozen positions held at zero, lexicographic ties") {
  MarginalTable t;
  t.lo = 4;
  t.hi = 6;
  t.values = {0.1, 0.5, 0.5, 0.2};  // w=1 is (1,0), w=2 is (0,1)
  CHECK(decide_window(t, 0, 1e-10) == 2);   // (0,1) precedes (1,0)
  CHECK(decide_window(t, 0b10, 1e-10) == 1);  // u_{lo+1} frozen
  CHECK(decide_window(t, 0b01, 1e-10) == 2);
  CHECK(decide_window(t, 0b11, 1e-10) == 0);
  t.values = {0.3, 0.3 * (1 + 1e-12), 0.1, 0.0};
  CHECK(decide_window(t, 0, 1e-10) == 0);
  CHECK(decide_window(t, 0, 0.0) == 1);
}

TEST_CASE("noiseless round trip up to N=256") {
  Rng rng(61);
  const auto ch = gilbert_elliott(0.0, 0.0, 0.01, 0.05);
  for (Family family : {Family::polar, Family::conv_polar})
    for (int n = 1; n <= 8; ++n) {
      const std::size_t len = std::size_t{1} << n;
      const auto c = construct_frozen_set(family, n, len / 2, gilbert_elliott(0.0, 0.9, 0.01, 0.05),
                                          ConstructionMode::corr);
      for (int t = 0; t < 3; ++t) {
        const auto msg = random_bits(c.spec.dimension(), rng);
        const auto x = encode(c.spec, msg);
        const auto r = sc_decode(c.spec, evidence_mpo(ch, x));
        CHECK(r.message == msg);
        CHECK(r.u == c.spec.scatter(msg));
        CHECK(r.zero_tables == 0);
      }
    }
  // Fully unfrozen codes as well.
  for (Family family : {Family::polar, Family::conv_polar}) {
    const CodeSpec spec(family, 8, {});
    const auto msg = random_bits(256, rng);
    CHECK(sc_decode(spec, evidence_mpo(ch, encode(spec, msg))).message == msg);
    DecodeOptions sweep;
    sweep.engine = Engine::sweep;
    CHECK(sc_decode(spec, evidence_mpo(ch, encode(spec, msg)), sweep).message == msg);
  }
}

TEST_CASE("SC decisions match a brute-force sequential rule at N=8 over GE") {
  Rng rng(62);
  const auto ge = gilbert_elliott(0.02, 0.7, 0.1, 0.2);
  for (Family family : {Family::polar, Family::conv_polar}) {
    const auto c = construct_frozen_set(family, 3, 4, ge, ConstructionMode::corr);
    const auto g = oracle::gate_list_matrix(c.spec.circuit());
    const std::size_t window = default_window(family);
    for (int f = 0; f < 200; ++f) {
      const auto msg = random_bits(4, rng);
      const auto y = sample_transmission(ge, encode(c.spec, msg), rng).y;
      oracle::Bits u;
      for (std::size_t lo = 0; lo < 8; lo += window) {
        const std::size_t hi = std::min<std::size_t>(8, lo + window);
        const auto table = oracle::enumerate_marginal(g, ge, y, u, hi);
        // Joint argmax over free positions; enumerate in lexicographic order of
        // (u_lo, u_lo+1, ...) and keep the first maximum up to the tie tolerance.
        double best = -1.0;
        std::size_t best_w = 0;
        for (std::size_t rank = 0; rank < table.size(); ++rank) {
          std::size_t w = 0;
          for (std::size_t t = 0; t < hi - lo; ++t) w |= ((rank >> (hi - lo - 1 - t)) & 1u) << t;
          bool ok = true;
          for (std::size_t t = 0; t < hi - lo; ++t) ok &= !(c.spec.is_frozen(lo + t) && ((w >> t) & 1u));
          if (ok && table[w] > best * (1 + 1e-10)) {
            best = table[w];
            best_w = w;
          }
        }
        for (std::size_t t = 0; t < hi - lo; ++t) u.push_back((best_w >> t) & 1u);
      }
      const auto r = sc_decode(c.spec, evidence_mpo(ge, y));
      CHECK(r.u == u);
    }
  }
}

TEST_CASE("caching does not change decisions") {
  Rng rng(63);
  const auto ge = gilbert_elliott(0.0, 0.9, 0.02, 0.1);
  for (Family family : {Family::polar, Family::conv_polar}) {
    const auto c = construct_frozen_set(family, 6, 32, ge, ConstructionMode::corr);
    DecodeOptions off;
    off.caching = false;
    std::uint64_t hits = 0;
    for (int f = 0; f < 100; ++f) {
      const auto y = sample_transmission(ge, encode(c.spec, random_bits(32, rng)), rng).y;
      const auto mpo = evidence_mpo(ge, y);
      const auto a = sc_decode(c.spec, mpo);
      const auto b = sc_decode(c.spec, mpo, off);
      CHECK(a.u == b.u);
      hits += a.stats.cache_hits;
      CHECK(b.stats.cache_hits == 0);
    }
    CHECK(hits > 0);
  }
}

TEST_CASE("equal crossovers decode like the memoryless decoder") {
  Rng rng(64);
  const double h = 0.08;
  const auto ge = gilbert_elliott(h, h, 0.02, 0.1);
  const auto mem = lift_memoryless(bsc(h));
  for (Family family : {Family::polar, Family::conv_polar}) {
    const auto c = construct_frozen_set(family, 7, 64, mem, ConstructionMode::corr);
    for (int f = 0; f < 100; ++f) {
      const auto y = sample_transmission(ge, encode(c.spec, random_bits(64, rng)), rng).y;
      CHECK(sc_decode(c.spec, evidence_mpo(ge, y)).u == sc_decode(c.spec, evidence_mpo(mem, y)).u);
    }
  }
}

TEST_CASE("engines agree on full decodes") {
  Rng rng(65);
  const auto ge = gilbert_elliott(0.01, 0.8, 0.05, 0.2);
  DecodeOptions sweep;
  sweep.engine = Engine::sweep;
  for (Family family : {Family::polar, Family::conv_polar}) {
    const auto c = construct_frozen_set(family, 6, 32, ge, ConstructionMode::corr);
    for (int f = 0; f < 10; ++f) {
      const auto y = sample_transmission(ge, encode(c.spec, random_bits(32, rng)), rng).y;
      const auto mpo = evidence_mpo(ge, y);
      CHECK(sc_decode(c.spec, mpo).u == sc_decode(c.spec, mpo, sweep).u);
    }
  }
}

TEST_CASE("frozen positions are forced even when y disagrees") {
  const auto c = construct_frozen_set(Family::polar, 4, 8, lift_memoryless(bsc(0.1)), ConstructionMode::corr);
  const auto mpo = evidence_mpo(lift_memoryless(bsc(0.0)), c.spec.circuit().apply(oracle::Bits(16, 1)));
  const auto r = sc_decode(c.spec, mpo);
  for (auto i : c.spec.frozen()) CHECK(r.u[i] == 0);
}

TEST_CASE("window size is a parameter") {
  Rng rng(66);
  const auto ge = gilbert_elliott(0.0, 0.9, 0.01, 0.05);
  const auto c = construct_frozen_set(Family::conv_polar, 5, 16, ge, ConstructionMode::corr);
  const auto x = encode(c.spec, random_bits(16, rng));
  for (std::size_t window : {1u, 2u, 3u, 4u}) {
    DecodeOptions opt;
    opt.window = window;
    std::size_t steps = 0;
    opt.on_step = [&](const StepRecord& s) {
      CHECK(s.hi - s.lo <= window);
      ++steps;
    };
    const auto r = sc_decode(c.spec, evidence_mpo(lift_memoryless(bsc(0.0)), x), opt);
    CHECK(encode(c.spec, r.message) == x);
    CHECK(steps > 0);
  }
  DecodeOptions wide;
  wide.window = FastSchedule::max_open + 1;
  CHECK_THROWS_AS(sc_decode(c.spec, evidence_mpo(ge, x), wide), DecoderError);
}

TEST_CASE("length mismatch is rejected") {
  const CodeSpec spec(Family::polar, 3, {});
  CHECK_THROWS_AS(sc_decode(spec, evidence_mpo(lift_memoryless(bsc(0.1)), oracle::Bits(4, 0))), DecoderError);
}

TEST_CASE("long blocks stay finite through rescaling") {
  Rng rng(67);
  const auto ge = gilbert_elliott(0.0, 0.9, 0.01, 0.05);
  const auto c = construct_frozen_set(Family::conv_polar, 10, 512, ge, ConstructionMode::corr);
  const auto y = sample_transmission(ge, encode(c.spec, random_bits(512, rng)), rng).y;
  const auto r = sc_decode(c.spec, evidence_mpo(ge, y));
  CHECK(r.zero_tables == 0);
}
