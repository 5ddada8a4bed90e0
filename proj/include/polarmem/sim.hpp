#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polarmem/channel.hpp"
#include "polarmem/codes.hpp"
#include "polarmem/construction.hpp"
#include "polarmem/decoder.hpp"

namespace polarmem {

class SimError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// base: memoryless construction and decoder at the average crossover.
/// interleaved: as base, with a fresh uniform interleaver around the channel.
/// correlated: construction and decoder use the true channel.
enum class Regime { base, interleaved, correlated };

std::string regime_name(Regime r);  // "base" / "int" / "corr"
Regime parse_regime(const std::string& text);

struct GilbertParams {
  double h_good = 0.0;
  double h_bad = 0.9;
  double p_good_to_bad = 0.01;
  double p_bad_to_good = 0.05;
  FiniteStateChannel channel() const;
};

/// Rows of the simulation parameter table: Bad-state crossover 0.9, noiseless
/// Good state, good-to-bad ratio 5.
struct TableRow {
  double burst_label;  // nominal average burst length of the row
  double p_bad_to_good;
  double p_good_to_bad;
};
const std::vector<TableRow>& table_rows();

struct SimConfig {
  Family family = Family::polar;
  int n = 10;
  std::size_t rate_num = 1;
  std::size_t rate_den = 2;
  GilbertParams channel;
  Regime regime = Regime::correlated;
  std::size_t max_frames = 100000;
  std::size_t error_budget = 100;  // 0: no early stop
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t window = 0;  // 0: family default
  bool fixed_interleaver = false;
  bool record_time = false;
  CircuitOptions circuit;

  std::size_t length() const { return std::size_t{1} << n; }
  /// k = round(N * rate).
  std::size_t dimension() const;
  double rate() const { return static_cast<double>(rate_num) / static_cast<double>(rate_den); }
};

struct FerResult {
  std::size_t frames = 0;
  std::size_t frame_errors = 0;
  std::size_t bit_errors = 0;
  double fer = 0.0;  // NaN when no frame ran
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double seconds = 0.0;
  std::uint64_t contractions = 0;
  bool defined() const { return frames > 0; }
};

struct Interval {
  double lo, hi;
};
/// Wilson score interval at 95% confidence.
Interval wilson_interval(std::size_t successes, std::size_t trials);

/// Everything a frame needs besides its random stream.
struct TrialContext {
  CodeSpec spec;
  FiniteStateChannel channel;         // channel that generates the noise
  FiniteStateChannel decode_channel;  // channel assumed by the decoder
  Regime regime;
  std::optional<std::vector<std::uint32_t>> interleaver;  // fixed interleaver, if any
  DecodeOptions decode;
};

TrialContext make_trial_context(const SimConfig& cfg);

struct TrialOutcome {
  bool frame_error = false;
  std::size_t bit_errors = 0;
  std::uint64_t contractions = 0;
};

TrialOutcome run_trial(const TrialContext& ctx, Rng& rng);

using TrialFunction = std::function<TrialOutcome(std::uint64_t frame, Rng& rng)>;

/// Runs frames in fixed chunks until the frame cap or the error budget is met.
/// Frame f always uses Rng::stream(seed, f), and the stopping frame is found
/// by scanning outcomes in frame order, so results do not depend on the
/// worker count.
FerResult estimate_fer(const SimConfig& cfg);
FerResult estimate_fer(const SimConfig& cfg, const TrialFunction& trial);

struct SweepRow {
  SimConfig config;
  FerResult result;
  std::string error;  // non-empty when the row failed
};

std::vector<SweepRow> sweep(const std::vector<SimConfig>& grid,
                            const std::function<void(const SweepRow&)>& on_row = {});

/// Preset grids: "fig2a", "fig2b", "fig2cd".
std::vector<SimConfig> preset_grid(const std::string& name);
bool is_preset(const std::string& name);

std::string csv_header();
std::string csv_row(const SweepRow& row);
void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace polarmem
