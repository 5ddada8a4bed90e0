#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "polarmem/channel.hpp"
#include "polarmem/codes.hpp"

namespace polarmem {

class DecoderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unnormalized window marginal: entry w is values[w] * 2^exponent, where bit t
/// of w is the value of input position lo + t.
struct MarginalTable {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::vector<double> values;
  std::int64_t exponent = 0;

  std::size_t width() const noexcept { return hi - lo; }
  double value(std::size_t w) const;  // may underflow to 0 for long blocks
  double max_value() const;
  bool all_zero() const;
};

/// max_w |a_w - b_w| / max_w |a_w|, evaluated on the common scale.
double relative_difference(const MarginalTable& a, const MarginalTable& b);

struct EngineStats {
  std::uint64_t contractions = 0;  // d x d products, leaf slices and root closures
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t max_entries = 0;   // largest message tensor
  std::uint64_t couplings = 0;     // sweep engine: residual parity couplings seen

  EngineStats& operator+=(const EngineStats& o);
};

// ---------------------------------------------------------------- push-down

struct LegState {
  enum class Kind : std::uint8_t { fixed, sum, affine, coupled };
  Kind kind = Kind::sum;
  std::uint32_t mask = 0;  // window bits (affine)
  std::uint8_t value = 0;  // constant bit (fixed, affine)

  static LegState fixed(unsigned bit) { return {Kind::fixed, 0, static_cast<std::uint8_t>(bit & 1u)}; }
  static LegState sum() { return {Kind::sum, 0, 0}; }
  static LegState open(unsigned window_bit) { return {Kind::affine, 1u << window_bit, 0}; }
  static LegState affine(std::uint32_t mask, unsigned constant) {
    return mask ? LegState{Kind::affine, mask, static_cast<std::uint8_t>(constant & 1u)}
                : fixed(constant);
  }
  bool operator==(const LegState&) const = default;
};

/// Channel-side leg states after propagating input leg states through the
/// circuit. Summed inputs become free GF(2) symbols; the code they generate on
/// the channel positions is kept in minimal-span form (distinct starts and
/// ends). A channel leg that is covered by a weight-1 row is Sum; one touched
/// by longer rows is coupled to other legs by a parity constraint.
struct PushDownResult {
  std::vector<LegState> legs;            // per channel position
  std::vector<std::uint8_t> constant;    // affine part, per channel position
  std::vector<std::uint32_t> window;     // window-bit mask, per channel position
  std::vector<std::vector<std::uint32_t>> rows;  // minimal-span generator rows (positions)
  std::size_t symbols = 0;               // number of summed inputs
  std::size_t couplings = 0;             // rows of weight >= 2
  std::size_t rank() const noexcept { return rows.size(); }
};

PushDownResult push_down(const Circuit& circuit, std::span<const LegState> inputs);

// ---------------------------------------------------------------- engines

/// Reference engine: push-down followed by one left-to-right sweep of the MPO
/// per window assignment, over a trellis of the residual couplings.
MarginalTable window_marginal_sweep(const ChainMpo& mpo, const Circuit& circuit,
                                    std::span<const std::uint8_t> prefix, std::size_t hi,
                                    EngineStats* stats = nullptr);

/// Literal enumeration of all suffix assignments (N <= 12).
MarginalTable brute_force_marginal(const Circuit& circuit, const FiniteStateChannel& ch,
                                   std::span<const std::uint8_t> y,
                                   std::span<const std::uint8_t> prefix, std::size_t hi);

/// Per-level contraction plans of the fast engine, shared between decode states
/// of the same circuit. Thread-safe.
class FastSchedule {
 public:
  static constexpr std::size_t max_open = 6;

  struct WindowOutput {
    std::uint32_t wire;                    // local output wire after the level's gates
    std::vector<std::uint32_t> prefix;     // known inputs it depends on
    std::uint32_t open = 0;                // window bits it depends on
  };

  /// Contraction of one node for request (lo, hi): prefix inputs < lo known,
  /// window [lo, hi) open, inputs >= hi summed.
  struct Plan {
    std::uint32_t lo, hi;
    std::uint32_t left_lo, left_hi, right_lo, right_hi;  // child requests
    std::vector<WindowOutput> outputs;   // left window outputs, then right ones
    std::vector<std::uint32_t> open_image;  // per window bit: mask over outputs
    std::vector<std::uint32_t> hidden_span;  // all hidden images over outputs
    std::uint32_t left_width() const { return left_hi - left_lo; }
    std::uint32_t right_width() const { return right_hi - right_lo; }
  };

  struct Level {
    std::size_t block = 0;
    std::vector<std::vector<std::uint32_t>> forward;  // output wire -> inputs
    std::vector<std::uint32_t> max_forward;           // largest input per output wire
    std::vector<std::uint32_t> left_reach;            // per hi: 1 + last left output any v_{<hi} needs
    std::vector<std::uint32_t> right_reach;
  };

  explicit FastSchedule(std::shared_ptr<const Circuit> circuit);

  /// Process-wide schedule for the circuit's (family, n, options).
  static std::shared_ptr<FastSchedule> shared(const std::shared_ptr<const Circuit>& circuit);

  const Circuit& circuit() const noexcept { return *circuit_; }
  const Level& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  const Plan& plan(int level, std::size_t lo, std::size_t hi);
  std::size_t plan_count() const;

 private:
  Plan build_plan(int level, std::size_t lo, std::size_t hi) const;

  std::shared_ptr<const Circuit> circuit_;
  std::vector<Level> levels_;
  mutable std::mutex mutex_;
  std::vector<std::unordered_map<std::uint64_t, std::unique_ptr<Plan>>> plans_;
};

/// Per-frame state of the fast engine: the known input bits of every tree node
/// and a small cache of block messages per node. Messages for request (lo, hi)
/// stay valid while the node's first lo inputs are unchanged.
class DecodeState {
 public:
  DecodeState(std::shared_ptr<FastSchedule> schedule, const ChainMpo& mpo, bool caching = true);
  /// The state keeps a reference to the chain, so temporaries are rejected.
  DecodeState(std::shared_ptr<FastSchedule>, ChainMpo&&, bool = true) = delete;

  /// Window marginal for inputs [prefix.size(), hi) given the known prefix.
  MarginalTable marginal(std::span<const std::uint8_t> prefix, std::size_t hi);

  const EngineStats& stats() const noexcept { return stats_; }
  const ChainMpo& mpo() const noexcept { return *mpo_; }

  struct Message {
    std::vector<double> values;  // 2^width blocks of d x d, row-major
    std::int64_t exponent = 0;
  };

 private:
  struct Entry {
    std::uint32_t lo, hi;
    std::shared_ptr<const Message> message;
  };
  struct Node {
    std::vector<std::uint8_t> known;
    std::size_t known_len = 0;
    std::vector<Entry> cache;
  };

  std::size_t node_index(int level, std::size_t block) const {
    return (std::size_t{1} << level) - 1 + block;
  }
  std::shared_ptr<const Message> request(int level, std::size_t block, std::size_t lo,
                                         std::size_t hi);
  Message compute(int level, std::size_t block, std::size_t lo, std::size_t hi);
  Message leaf(std::size_t position, std::size_t lo, std::size_t hi);
  void extend_child(int level, std::size_t block, std::size_t child_block, bool right,
                    std::size_t upto);
  void truncate(int level, std::size_t block, std::size_t keep);
  void normalize(Message& m);

  std::shared_ptr<FastSchedule> schedule_;
  const ChainMpo* mpo_;
  bool caching_;
  std::size_t d_;
  int levels_;
  std::vector<Node> nodes_;
  EngineStats stats_;
};

MarginalTable window_marginal_fast(DecodeState& state, std::span<const std::uint8_t> prefix,
                                   std::size_t hi);

// ---------------------------------------------------------------- SC decoding

enum class Engine { fast, sweep };

struct StepRecord {
  std::size_t lo, hi;
  const MarginalTable* table;
  std::uint32_t decision;  // bit t = decided value of position lo + t
};

struct DecodeOptions {
  Engine engine = Engine::fast;
  std::size_t window = 0;       // 0: 1 for polar, 3 for conv-polar
  bool caching = true;
  double tie_tolerance = 1e-10;  // relative; entries this close to the maximum tie
  std::function<void(const StepRecord&)> on_step;
};

struct DecodeResult {
  std::vector<std::uint8_t> u;
  std::vector<std::uint8_t> message;
  EngineStats stats;
  std::size_t zero_tables = 0;  // windows whose table underflowed to all zeros
};

std::size_t default_window(Family family);

/// Joint argmax over the free positions of a window, frozen positions held at
/// 0. Ties go to the lexicographically smallest (u_lo, u_lo+1, ...).
std::uint32_t decide_window(const MarginalTable& table, std::uint32_t frozen_mask,
                            double tie_tolerance);

DecodeResult sc_decode(const CodeSpec& spec, const ChainMpo& mpo, const DecodeOptions& options = {});

}  // namespace polarmem
