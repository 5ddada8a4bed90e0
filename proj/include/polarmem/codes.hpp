#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarmem {

class CodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Family { polar, conv_polar };

/// Which wire of an adjacent pair (lo, hi) carries the CNOT control.
///   target_low:  (lo, hi) -> (lo ^ hi, hi), control on the later-decoded wire.
///   control_low: (lo, hi) -> (lo, lo ^ hi).
/// Only target_low polarizes under decoding in input order 1..N.
enum class Orientation { target_low, control_low };

/// Order of the two conv-polar sublayers within a level, seen from the inputs.
enum class ShiftOrder { shifted_first, pairs_first };

struct CircuitOptions {
  Orientation orientation = Orientation::target_low;
  ShiftOrder shift_order = ShiftOrder::shifted_first;
  bool operator==(const CircuitOptions&) const = default;
};

struct Gate {
  std::uint32_t control;
  std::uint32_t target;
};

/// Encoding circuit as a recursion of levels. Level l acts on 2^l blocks of
/// M = N >> l wires. Within a block, the level applies its sublayers of CNOTs,
/// then routes local output t to child block (t & 1) at child position t >> 1
/// (even local positions to the left half, odd ones to the right half). After
/// the last level the blocks have size 1 and their order is the channel order.
class Circuit {
 public:
  static Circuit build(Family family, int n, CircuitOptions options = {});

  Family family() const noexcept { return family_; }
  const CircuitOptions& options() const noexcept { return options_; }
  int levels() const noexcept { return n_; }
  std::size_t length() const noexcept { return std::size_t{1} << n_; }
  std::size_t block_size(int level) const { return length() >> level; }

  /// Gates of one level in block-local wire indices, grouped by sublayer in
  /// application order.
  const std::vector<std::vector<Gate>>& block_sublayers(int level) const {
    return sublayers_.at(static_cast<std::size_t>(level));
  }

  /// Sublayers of one level with global wire indices (block b occupies wires
  /// [b*M, (b+1)*M) at that level).
  std::vector<std::vector<Gate>> global_sublayers(int level) const;

  /// Global wire index at level+1 of global wire `wire` leaving level `level`.
  std::size_t route(int level, std::size_t wire) const;

  std::size_t gate_count() const noexcept;

  std::vector<std::uint8_t> apply(std::span<const std::uint8_t> u) const;

 private:
  Family family_ = Family::polar;
  CircuitOptions options_;
  int n_ = 0;
  std::vector<std::vector<std::vector<Gate>>> sublayers_;
};

Circuit polar_circuit(int n, CircuitOptions options = {});
Circuit cpc_circuit(int n, CircuitOptions options = {});

/// Code family, length N = 2^n and frozen positions (0-based, sorted). Frozen
/// inputs carry the value 0.
class CodeSpec {
 public:
  CodeSpec(Family family, int n, std::vector<std::uint32_t> frozen, CircuitOptions options = {});

  Family family() const noexcept { return family_; }
  int levels() const noexcept { return n_; }
  std::size_t length() const noexcept { return std::size_t{1} << n_; }
  std::size_t dimension() const noexcept { return length() - frozen_.size(); }
  double rate() const noexcept { return static_cast<double>(dimension()) / length(); }
  const std::vector<std::uint32_t>& frozen() const noexcept { return frozen_; }
  bool is_frozen(std::size_t i) const { return frozen_mask_.at(i) != 0; }
  std::uint8_t frozen_value() const noexcept { return 0; }
  const CircuitOptions& options() const noexcept { return circuit_->options(); }
  const Circuit& circuit() const noexcept { return *circuit_; }
  const std::shared_ptr<const Circuit>& circuit_ptr() const noexcept { return circuit_; }

  /// Input word with the message scattered into the non-frozen positions.
  std::vector<std::uint8_t> scatter(std::span<const std::uint8_t> message) const;
  /// Message bits read off the non-frozen positions of an input word.
  std::vector<std::uint8_t> gather(std::span<const std::uint8_t> u) const;

 private:
  Family family_;
  int n_;
  std::vector<std::uint32_t> frozen_;
  std::vector<std::uint8_t> frozen_mask_;
  std::shared_ptr<const Circuit> circuit_;
};

std::vector<std::uint8_t> encode(const CodeSpec& spec, std::span<const std::uint8_t> message);

std::string family_name(Family family);   // "polar" / "conv-polar"
std::string family_label(Family family);  // "pc" / "cpc"
Family parse_family(const std::string& text);

}  // namespace polarmem
