#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "polarmem/decoder.hpp"

namespace polarmem {

namespace {

using Words = std::vector<std::uint64_t>;

bool test(const Words& w, std::size_t i) { return w[i >> 6] >> (i & 63) & 1u; }
void flip(Words& w, std::size_t i) { w[i >> 6] ^= std::uint64_t{1} << (i & 63); }
void xor_into(Words& dst, const Words& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

long first_bit(const Words& w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i]) return static_cast<long>(i * 64 + std::countr_zero(w[i]));
  return -1;
}

long last_bit(const Words& w) {
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i]) return static_cast<long>(i * 64 + 63 - std::countl_zero(w[i]));
  return -1;
}

// Affine GF(2) form of one wire: constant + window bits + summed symbols.
struct Form {
  std::uint8_t constant = 0;
  std::uint32_t window = 0;
  Words symbols;

  void add(const Form& o) {
    constant ^= o.constant;
    window ^= o.window;
    xor_into(symbols, o.symbols);
  }
};

struct Row {
  Words bits;
  long start, end;
  void refresh() {
    start = first_bit(bits);
    end = last_bit(bits);
  }
};

// Rows with distinct starts and distinct ends generate the code with minimal
// total span; rows that end up zero were dependent.
std::vector<Row> minimal_span(std::vector<Row> rows) {
  std::map<long, Row> by_start;
  for (auto& r : rows) {
    r.refresh();
    while (r.start >= 0) {
      auto it = by_start.find(r.start);
      if (it == by_start.end()) {
        by_start.emplace(r.start, std::move(r));
        break;
      }
      if (it->second.end > r.end) std::swap(it->second, r);
      xor_into(r.bits, it->second.bits);
      r.refresh();
    }
  }
  std::vector<Row> basis;
  for (auto& [s, r] : by_start) basis.push_back(std::move(r));

  std::map<long, std::size_t> by_end;
  std::vector<std::size_t> work(basis.size());
  for (std::size_t i = 0; i < work.size(); ++i) work[i] = i;
  while (!work.empty()) {
    const std::size_t i = work.back();
    work.pop_back();
    auto it = by_end.find(basis[i].end);
    if (it == by_end.end()) {
      by_end.emplace(basis[i].end, i);
      continue;
    }
    const std::size_t j = it->second;
    const std::size_t longer = basis[i].start < basis[j].start ? i : j;
    const std::size_t shorter = longer == i ? j : i;
    xor_into(basis[longer].bits, basis[shorter].bits);
    basis[longer].refresh();
    it->second = shorter;
    work.push_back(longer);
  }

  for (const auto& r : basis) {
    if (r.start != r.end) continue;
    for (auto& o : basis)
      if (&o != &r && test(o.bits, static_cast<std::size_t>(r.start))) flip(o.bits, r.start);
  }
  std::sort(basis.begin(), basis.end(), [](const Row& a, const Row& b) { return a.start < b.start; });
  return basis;
}

}  // namespace

PushDownResult push_down(const Circuit& circuit, std::span<const LegState> inputs) {
  const std::size_t n = circuit.length();
  if (inputs.size() != n) throw DecoderError("one leg state per input is required");
  std::size_t symbols = 0;
  for (const auto& leg : inputs) {
    if (leg.kind == LegState::Kind::coupled) throw DecoderError("coupled input legs are not allowed");
    if (leg.kind == LegState::Kind::sum) ++symbols;
  }
  const std::size_t words = (symbols + 63) / 64;

  std::vector<Form> forms(n), next(n);
  std::size_t sym = 0;
  for (std::size_t i = 0; i < n; ++i) {
    forms[i].symbols.assign(words, 0);
    switch (inputs[i].kind) {
      case LegState::Kind::fixed: forms[i].constant = inputs[i].value; break;
      case LegState::Kind::affine:
        forms[i].constant = inputs[i].value;
        forms[i].window = inputs[i].mask;
        break;
      default: flip(forms[i].symbols, sym++); break;
    }
  }
  for (int level = 0; level < circuit.levels(); ++level) {
    for (const auto& sub : circuit.global_sublayers(level))
      for (const auto& g : sub) forms[g.target].add(forms[g.control]);
    for (std::size_t w = 0; w < n; ++w) next[circuit.route(level, w)] = std::move(forms[w]);
    forms.swap(next);
  }

  PushDownResult out;
  out.symbols = symbols;
  out.constant.resize(n);
  out.window.resize(n);
  const std::size_t pos_words = (n + 63) / 64;
  std::vector<Row> rows(symbols, Row{Words(pos_words, 0), -1, -1});
  for (std::size_t j = 0; j < n; ++j) {
    out.constant[j] = forms[j].constant;
    out.window[j] = forms[j].window;
    for (std::size_t s = 0; s < symbols; ++s)
      if (test(forms[j].symbols, s)) flip(rows[s].bits, j);
  }
  const auto basis = minimal_span(std::move(rows));

  std::vector<std::uint8_t> covered(n, 0), single(n, 0);
  for (const auto& r : basis) {
    std::vector<std::uint32_t> positions;
    for (long j = r.start; j <= r.end; ++j)
      if (test(r.bits, static_cast<std::size_t>(j))) {
        positions.push_back(static_cast<std::uint32_t>(j));
        covered[j] = 1;
      }
    if (positions.size() == 1)
      single[positions[0]] = 1;
    else
      ++out.couplings;
    out.rows.push_back(std::move(positions));
  }
  out.legs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (single[j])
      out.legs[j] = LegState::sum();
    else if (covered[j])
      out.legs[j] = {LegState::Kind::coupled, out.window[j], out.constant[j]};
    else
      out.legs[j] = LegState::affine(out.window[j], out.constant[j]);
  }
  return out;
}

MarginalTable window_marginal_sweep(const ChainMpo& mpo, const Circuit& circuit,
                                    std::span<const std::uint8_t> prefix, std::size_t hi,
                                    EngineStats* stats) {
  const std::size_t n = circuit.length();
  const std::size_t lo = prefix.size();
  if (mpo.length() != n) throw DecoderError("channel chain length differs from code length");
  if (hi < lo || hi > n) throw DecoderError("window outside the block");
  if (hi - lo > 16) throw DecoderError("window too wide");

  std::vector<LegState> legs(n, LegState::sum());
  for (std::size_t i = 0; i < lo; ++i) legs[i] = LegState::fixed(prefix[i]);
  for (std::size_t i = lo; i < hi; ++i) legs[i] = LegState::open(static_cast<unsigned>(i - lo));
  const PushDownResult pd = push_down(circuit, legs);

  // Trellis bookkeeping per position: rows entering, rows leaving, rows touching.
  const std::size_t rows = pd.rows.size();
  std::vector<std::vector<std::uint32_t>> starting(n), ending(n), members(n);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const auto& pos = pd.rows[r];
    starting[pos.front()].push_back(r);
    ending[pos.back()].push_back(r);
    for (auto j : pos) members[j].push_back(r);
  }

  const std::size_t d = mpo.states();
  std::uint64_t contractions = 0;
  std::size_t widest = 0;
  MarginalTable table;
  table.lo = lo;
  table.hi = hi;
  const std::size_t entries = std::size_t{1} << (hi - lo);
  std::vector<double> mantissa(entries);
  std::vector<std::int64_t> exps(entries, 0);

  std::vector<int> slot_of(rows, -1);
  std::vector<std::uint32_t> active;
  std::vector<double> vec, grown, moved;
  for (std::size_t w = 0; w < entries; ++w) {
    active.clear();
    std::fill(slot_of.begin(), slot_of.end(), -1);
    vec.assign(mpo.initial().data().begin(), mpo.initial().data().end());
    std::int64_t exponent = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t states_before = std::size_t{1} << active.size();
      for (auto r : starting[j]) {
        slot_of[r] = static_cast<int>(active.size());
        active.push_back(r);
      }
      const std::size_t states = std::size_t{1} << active.size();
      widest = std::max(widest, active.size());
      if (active.size() > 24) throw DecoderError("coupling trellis too wide");
      grown.resize(states * d);
      for (std::size_t idx = 0; idx < states; ++idx)
        std::copy_n(vec.begin() + static_cast<long>((idx & (states_before - 1)) * d), d,
                    grown.begin() + static_cast<long>(idx * d));

      std::uint32_t touch = 0;
      for (auto r : members[j]) touch |= 1u << slot_of[r];
      const unsigned base = pd.constant[j] ^ (std::popcount(pd.window[j] & w) & 1u);
      moved.assign(states * d, 0.0);
      for (std::size_t idx = 0; idx < states; ++idx) {
        const unsigned x = base ^ (std::popcount(static_cast<std::uint32_t>(idx) & touch) & 1u);
        const double* a = mpo.matrix(j, x);
        const double* v = grown.data() + idx * d;
        double* o = moved.data() + idx * d;
        for (std::size_t s = 0; s < d; ++s) {
          if (v[s] == 0.0) continue;
          for (std::size_t t = 0; t < d; ++t) o[t] += v[s] * a[s * d + t];
        }
        ++contractions;
      }

      if (!ending[j].empty()) {
        std::uint32_t drop = 0;
        for (auto r : ending[j]) drop |= 1u << slot_of[r];
        std::vector<std::uint32_t> kept;
        for (std::size_t s = 0; s < active.size(); ++s)
          if (!(drop >> s & 1u)) kept.push_back(active[s]);
        vec.assign((std::size_t{1} << kept.size()) * d, 0.0);
        for (std::size_t idx = 0; idx < states; ++idx) {
          std::size_t packed = 0, bit = 0;
          for (std::size_t s = 0; s < active.size(); ++s)
            if (!(drop >> s & 1u)) packed |= ((idx >> s) & 1u) << bit++;
          for (std::size_t t = 0; t < d; ++t) vec[packed * d + t] += moved[idx * d + t];
        }
        for (auto r : ending[j]) slot_of[r] = -1;
        active = std::move(kept);
        for (std::size_t s = 0; s < active.size(); ++s) slot_of[active[s]] = static_cast<int>(s);
      } else {
        vec.swap(moved);
      }

      double peak = 0.0;
      for (double v : vec) peak = std::max(peak, v);
      if (peak > 0.0) {
        int e = 0;
        std::frexp(peak, &e);
        for (double& v : vec) v = std::ldexp(v, -e);
        exponent += e;
      }
    }
    double total = 0.0;
    const auto term = mpo.terminal().data();
    for (std::size_t t = 0; t < d; ++t) total += vec[t] * term[t];
    mantissa[w] = total;
    exps[w] = exponent + static_cast<std::int64_t>(pd.symbols - pd.rank());
  }

  std::int64_t top = 0;
  bool any = false;
  for (std::size_t w = 0; w < entries; ++w)
    if (mantissa[w] > 0.0) {
      int e = 0;
      std::frexp(mantissa[w], &e);
      const std::int64_t full = exps[w] + e;
      top = any ? std::max(top, full) : full;
      any = true;
    }
  table.exponent = top;
  table.values.resize(entries);
  for (std::size_t w = 0; w < entries; ++w)
    table.values[w] = std::ldexp(mantissa[w], static_cast<int>(exps[w] - top));

  if (stats) {
    stats->contractions += contractions;
    stats->couplings += pd.couplings;
    stats->max_entries = std::max<std::uint64_t>(stats->max_entries, (std::size_t{1} << widest) * d);
  }
  return table;
}

}  // namespace polarmem
