#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "polarmem/decoder.hpp"

namespace polarmem {

namespace {

using DepList = std::vector<std::uint32_t>;

DepList symmetric_difference(const DepList& a, const DepList& b) {
  DepList out;
  out.reserve(a.size() + b.size());
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// out += a * b for row-major d x d blocks.
void multiply_add(const double* a, const double* b, double* out, std::size_t d) {
  if (d == 1) {
    out[0] += a[0] * b[0];
    return;
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double aij = a[i * d + j];
      if (aij == 0.0) continue;
      const double* brow = b + j * d;
      double* orow = out + i * d;
      for (std::size_t k = 0; k < d; ++k) orow[k] += aij * brow[k];
    }
}

}  // namespace

FastSchedule::FastSchedule(std::shared_ptr<const Circuit> circuit) : circuit_(std::move(circuit)) {
  const int n = circuit_->levels();
  levels_.resize(static_cast<std::size_t>(n));
  plans_.resize(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    Level& lv = levels_[static_cast<std::size_t>(l)];
    const std::size_t m = circuit_->block_size(l);
    lv.block = m;
    const auto& subs = circuit_->block_sublayers(l);

    lv.forward.resize(m);
    for (std::uint32_t t = 0; t < m; ++t) lv.forward[t] = {t};
    for (const auto& sub : subs)
      for (const auto& g : sub)
        lv.forward[g.target] = symmetric_difference(lv.forward[g.target], lv.forward[g.control]);

    // Inputs in terms of outputs: undo the sublayers in reverse order.
    std::vector<DepList> inverse(m);
    for (std::uint32_t t = 0; t < m; ++t) inverse[t] = {t};
    for (auto it = subs.rbegin(); it != subs.rend(); ++it)
      for (const auto& g : *it)
        inverse[g.target] = symmetric_difference(inverse[g.target], inverse[g.control]);

    lv.max_forward.resize(m);
    for (std::size_t t = 0; t < m; ++t) lv.max_forward[t] = lv.forward[t].back();

    lv.left_reach.assign(m + 1, 0);
    lv.right_reach.assign(m + 1, 0);
    for (std::size_t h = 1; h <= m; ++h) {
      std::uint32_t left = lv.left_reach[h - 1], right = lv.right_reach[h - 1];
      for (auto w : inverse[h - 1]) {
        if (w & 1u)
          right = std::max(right, w / 2 + 1);
        else
          left = std::max(left, w / 2 + 1);
      }
      lv.left_reach[h] = left;
      lv.right_reach[h] = right;
    }
  }
}

std::shared_ptr<FastSchedule> FastSchedule::shared(const std::shared_ptr<const Circuit>& circuit) {
  using Key = std::tuple<int, int, int, int>;
  static std::mutex registry_mutex;
  static std::map<Key, std::weak_ptr<FastSchedule>> registry;
  const Key key{static_cast<int>(circuit->family()), circuit->levels(),
                static_cast<int>(circuit->options().orientation),
                static_cast<int>(circuit->options().shift_order)};
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[key];
  if (auto existing = slot.lock()) return existing;
  auto created = std::make_shared<FastSchedule>(circuit);
  slot = created;
  return created;
}

const FastSchedule::Plan& FastSchedule::plan(int level, std::size_t lo, std::size_t hi) {
  const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | hi;
  std::lock_guard lock(mutex_);
  auto& table = plans_.at(static_cast<std::size_t>(level));
  auto it = table.find(key);
  if (it != table.end()) return *it->second;
  auto plan = std::make_unique<Plan>(build_plan(level, lo, hi));
  return *table.emplace(key, std::move(plan)).first->second;
}

std::size_t FastSchedule::plan_count() const {
  std::lock_guard lock(mutex_);
  std::size_t total = 0;
  for (const auto& t : plans_) total += t.size();
  return total;
}

FastSchedule::Plan FastSchedule::build_plan(int level, std::size_t lo, std::size_t hi) const {
  const Level& lv = levels_.at(static_cast<std::size_t>(level));
  const std::size_t m = lv.block, half = m / 2;
  if (lo > hi || hi > m) throw DecoderError("request window outside the block");

  auto first_open = [&](std::uint32_t parity) {
    for (std::size_t p = 0; p < half; ++p)
      if (lv.max_forward[2 * p + parity] >= lo) return static_cast<std::uint32_t>(p);
    return static_cast<std::uint32_t>(half);
  };

  Plan plan{};
  plan.lo = static_cast<std::uint32_t>(lo);
  plan.hi = static_cast<std::uint32_t>(hi);
  plan.left_lo = first_open(0);
  plan.right_lo = first_open(1);
  plan.left_hi = std::max(plan.left_lo, lv.left_reach[hi]);
  plan.right_hi = std::max(plan.right_lo, lv.right_reach[hi]);
  if (plan.left_width() > max_open || plan.right_width() > max_open ||
      plan.left_width() + plan.right_width() > 31)
    throw DecoderError("open-axis overflow at level " + std::to_string(level) + " for window [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + ")");

  std::vector<std::uint32_t> wires;
  for (auto p = plan.left_lo; p < plan.left_hi; ++p) wires.push_back(2 * p);
  for (auto p = plan.right_lo; p < plan.right_hi; ++p) wires.push_back(2 * p + 1);

  plan.open_image.assign(hi - lo, 0);
  std::map<std::uint32_t, std::uint32_t> hidden;  // hidden input -> mask over outputs
  for (std::size_t k = 0; k < wires.size(); ++k) {
    WindowOutput out{wires[k], {}, 0};
    for (auto v : lv.forward[wires[k]]) {
      if (v < lo) {
        out.prefix.push_back(v);
      } else if (v < hi) {
        out.open |= 1u << (v - lo);
        plan.open_image[v - lo] |= 1u << k;
      } else {
        hidden[v] |= 1u << k;
      }
    }
    plan.outputs.push_back(std::move(out));
  }

  std::vector<std::uint32_t> basis;
  for (const auto& [v, mask] : hidden) {
    std::uint32_t r = mask;
    for (auto b : basis) r = std::min(r, r ^ b);
    if (r) {
      basis.push_back(r);
      std::sort(basis.begin(), basis.end(), std::greater<>());
    }
  }
  plan.hidden_span = {0};
  for (auto b : basis) {
    const std::size_t size = plan.hidden_span.size();
    for (std::size_t i = 0; i < size; ++i) plan.hidden_span.push_back(plan.hidden_span[i] ^ b);
  }
  return plan;
}

DecodeState::DecodeState(std::shared_ptr<FastSchedule> schedule, const ChainMpo& mpo, bool caching)
    : schedule_(std::move(schedule)), mpo_(&mpo), caching_(caching) {
  const Circuit& c = schedule_->circuit();
  if (mpo.length() != c.length())
    throw DecoderError("channel chain length differs from code length");
  d_ = mpo.states();
  levels_ = c.levels();
  nodes_.resize(2 * c.length() - 1);
  for (int l = 0; l <= levels_; ++l) {
    const std::size_t m = c.length() >> l;
    for (std::size_t b = 0; b < (std::size_t{1} << l); ++b) nodes_[node_index(l, b)].known.assign(m, 0);
  }
}

void DecodeState::normalize(Message& m) {
  double peak = 0.0;
  for (double v : m.values) peak = std::max(peak, std::abs(v));
  if (peak == 0.0 || !std::isfinite(peak)) return;
  int e = 0;
  std::frexp(peak, &e);
  if (e == 0) return;
  for (double& v : m.values) v = std::ldexp(v, -e);
  m.exponent += e;
}

void DecodeState::truncate(int level, std::size_t block, std::size_t keep) {
  Node& node = nodes_[node_index(level, block)];
  if (node.known_len <= keep) return;
  node.known_len = keep;
  std::erase_if(node.cache, [&](const Entry& e) { return e.lo > keep; });
  if (level == levels_) return;
  const auto& lv = schedule_->level(level);
  const std::size_t half = lv.block / 2;
  for (std::uint32_t parity = 0; parity < 2; ++parity) {
    std::size_t k = 0;
    while (k < half && lv.max_forward[2 * k + parity] < keep) ++k;
    truncate(level + 1, 2 * block + parity, k);
  }
}

void DecodeState::extend_child(int level, std::size_t block, std::size_t child_block, bool right,
                               std::size_t upto) {
  const Node& parent = nodes_[node_index(level, block)];
  Node& child = nodes_[node_index(level + 1, child_block)];
  const auto& lv = schedule_->level(level);
  for (std::size_t p = child.known_len; p < upto; ++p) {
    const std::size_t wire = 2 * p + (right ? 1 : 0);
    if (lv.max_forward[wire] >= parent.known_len)
      throw DecoderError("child prefix depends on unknown inputs");
    std::uint8_t bit = 0;
    for (auto v : lv.forward[wire]) bit ^= parent.known[v];
    child.known[p] = bit;
  }
  child.known_len = std::max(child.known_len, upto);
}

DecodeState::Message DecodeState::leaf(std::size_t position, std::size_t lo, std::size_t hi) {
  const std::size_t dd = d_ * d_;
  const Node& node = nodes_[node_index(levels_, position)];
  Message m;
  const double* a0 = mpo_->matrix(position, 0);
  const double* a1 = mpo_->matrix(position, 1);
  if (lo == 0 && hi == 1) {
    m.values.assign(a0, a0 + dd);
    m.values.insert(m.values.end(), a1, a1 + dd);
  } else if (lo == 0) {
    m.values.resize(dd);
    for (std::size_t i = 0; i < dd; ++i) m.values[i] = a0[i] + a1[i];
  } else {
    const double* a = node.known[0] ? a1 : a0;
    m.values.assign(a, a + dd);
  }
  ++stats_.contractions;
  normalize(m);
  return m;
}

DecodeState::Message DecodeState::compute(int level, std::size_t block, std::size_t lo,
                                          std::size_t hi) {
  if (level == levels_) return leaf(block, lo, hi);
  const auto& plan = schedule_->plan(level, lo, hi);
  extend_child(level, block, 2 * block, false, plan.left_lo);
  extend_child(level, block, 2 * block + 1, true, plan.right_lo);
  const auto left = request(level + 1, 2 * block, plan.left_lo, plan.left_hi);
  const auto right = request(level + 1, 2 * block + 1, plan.right_lo, plan.right_hi);

  const Node& node = nodes_[node_index(level, block)];
  std::uint32_t constant = 0;
  for (std::size_t k = 0; k < plan.outputs.size(); ++k) {
    std::uint8_t bit = 0;
    for (auto v : plan.outputs[k].prefix) bit ^= node.known[v];
    constant |= static_cast<std::uint32_t>(bit) << k;
  }

  const std::size_t dd = d_ * d_;
  const std::size_t width = hi - lo;
  const std::uint32_t left_mask = (1u << plan.left_width()) - 1;
  const unsigned left_bits = plan.left_width();
  Message m;
  m.values.assign((std::size_t{1} << width) * dd, 0.0);
  m.exponent = left->exponent + right->exponent;
  for (std::uint32_t w = 0; w < (1u << width); ++w) {
    std::uint32_t base = constant;
    for (std::size_t j = 0; j < width; ++j)
      if (w >> j & 1u) base ^= plan.open_image[j];
    double* out = m.values.data() + w * dd;
    for (auto x : plan.hidden_span) {
      const std::uint32_t idx = base ^ x;
      const double* l = left->values.data() + (idx & left_mask) * dd;
      const double* r = right->values.data() + (idx >> left_bits) * dd;
      multiply_add(l, r, out, d_);
      ++stats_.contractions;
    }
  }
  normalize(m);
  return m;
}

std::shared_ptr<const DecodeState::Message> DecodeState::request(int level, std::size_t block,
                                                                 std::size_t lo, std::size_t hi) {
  Node& node = nodes_[node_index(level, block)];
  if (node.known_len < lo) throw DecoderError("request ahead of the known prefix");
  if (caching_) {
    for (const auto& e : node.cache)
      if (e.lo == lo && e.hi == hi) {
        ++stats_.cache_hits;
        return e.message;
      }
  }
  ++stats_.cache_misses;
  auto message = std::make_shared<const Message>(compute(level, block, lo, hi));
  const std::uint64_t entries = message->values.size();
  if (entries > d_ * d_ * (std::uint64_t{1} << FastSchedule::max_open))
    throw DecoderError("block message exceeds the open-axis bound");
  stats_.max_entries = std::max(stats_.max_entries, entries);
  if (caching_) {
    // Prefixes only grow during a decode, so the request with the smallest lo
    // is the least likely to be asked for again.
    constexpr std::size_t capacity = 8;
    if (node.cache.size() >= capacity) {
      auto oldest = std::min_element(node.cache.begin(), node.cache.end(),
                                     [](const Entry& a, const Entry& b) {
                                       return std::tie(a.lo, a.hi) < std::tie(b.lo, b.hi);
                                     });
      node.cache.erase(oldest);
    }
    node.cache.push_back({static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi), message});
  }
  return message;
}

MarginalTable DecodeState::marginal(std::span<const std::uint8_t> prefix, std::size_t hi) {
  const std::size_t n = schedule_->circuit().length();
  const std::size_t lo = prefix.size();
  if (hi < lo || hi > n) throw DecoderError("window outside the block");
  if (hi - lo > FastSchedule::max_open) throw DecoderError("window wider than the open-axis bound");

  Node& root = nodes_[0];
  const std::size_t common = std::min(lo, root.known_len);
  for (std::size_t i = 0; i < common; ++i)
    if ((prefix[i] & 1u) != root.known[i]) {
      truncate(0, 0, i);
      break;
    }
  for (std::size_t i = root.known_len; i < lo; ++i) root.known[i] = prefix[i] & 1u;
  root.known_len = std::max(root.known_len, lo);

  const auto message = request(0, 0, lo, hi);
  const std::size_t dd = d_ * d_;
  const double* init = mpo_->initial().data().data();
  const double* term = mpo_->terminal().data().data();
  MarginalTable table;
  table.lo = lo;
  table.hi = hi;
  table.exponent = message->exponent;
  table.values.resize(std::size_t{1} << (hi - lo));
  for (std::size_t w = 0; w < table.values.size(); ++w) {
    const double* mat = message->values.data() + w * dd;
    double total = 0.0;
    for (std::size_t s = 0; s < d_; ++s) {
      if (init[s] == 0.0) continue;
      double row = 0.0;
      for (std::size_t t = 0; t < d_; ++t) row += mat[s * d_ + t] * term[t];
      total += init[s] * row;
    }
    table.values[w] = total;
    ++stats_.contractions;
  }
  double peak = 0.0;
  for (double v : table.values) peak = std::max(peak, v);
  if (peak > 0.0) {
    int e = 0;
    std::frexp(peak, &e);
    for (double& v : table.values) v = std::ldexp(v, -e);
    table.exponent += e;
  }
  return table;
}

MarginalTable window_marginal_fast(DecodeState& state, std::span<const std::uint8_t> prefix,
                                   std::size_t hi) {
  return state.marginal(prefix, hi);
}

}  // namespace polarmem
