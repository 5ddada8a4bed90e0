// Command-line front end: construct, decode, simulate, sweep, verify.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "polarmem/construction.hpp"
#include "polarmem/decoder.hpp"
#include "polarmem/io.hpp"
#include "polarmem/sim.hpp"
#include "polarmem/verify.hpp"

using namespace polarmem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("POLARMEM_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw FormatError("POLARMEM_SEED must be a non-negative integer");
  }
  return 1;
}

// Writes to a file, or to stdout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw FormatError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

CircuitOptions circuit_options(const std::string& orientation, const std::string& order) {
  CircuitOptions o;
  o.orientation = parse_orientation(orientation);
  o.shift_order = parse_shift_order(order);
  return o;
}

std::string format_fer(const FerResult& r) {
  if (!r.defined()) return "undefined";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4g [%.4g, %.4g]", r.fer, r.ci_lo, r.ci_hi);
  return buf;
}

// Per (family, n, rate, channel): FER by regime, with the expected ordering
// corr < base checked on the confidence intervals.
void print_summary(std::ostream& os, const std::vector<SweepRow>& rows) {
  using Key = std::tuple<int, int, std::size_t, std::size_t, double, double, double, double>;
  std::map<Key, std::map<Regime, const SweepRow*>> groups;
  std::vector<Key> order;
  for (const auto& row : rows) {
    const auto& c = row.config;
    const Key key{static_cast<int>(c.family), c.n, c.rate_num, c.rate_den, c.channel.h_good,
                  c.channel.h_bad, c.channel.p_good_to_bad, c.channel.p_bad_to_good};
    if (!groups.count(key)) order.push_back(key);
    groups[key][c.regime] = &row;
  }
  os << "summary:\n";
  for (const auto& key : order) {
    const auto& g = groups[key];
    const SimConfig& c = g.begin()->second->config;
    os << "  " << family_label(c.family) << " n=" << c.n << " rate=" << c.rate_num << "/" << c.rate_den
       << " pGB=" << c.channel.p_good_to_bad << " pBG=" << c.channel.p_bad_to_good << ":";
    for (const auto& [regime, row] : g)
      os << " " << regime_name(regime) << " " << (row->error.empty() ? format_fer(row->result) : "failed");
    auto base = g.find(Regime::base), corr = g.find(Regime::correlated);
    if (base != g.end() && corr != g.end() && base->second->error.empty() && corr->second->error.empty() &&
        base->second->result.defined() && corr->second->result.defined()) {
      const FerResult& b = base->second->result;
      const FerResult& k = corr->second->result;
      if (!(k.fer < b.fer))
        os << "  VIOLATION: corr >= base";
      else if (k.ci_hi >= b.ci_lo)
        os << "  (corr < base, CIs overlap)";
    }
    os << '\n';
  }
}

struct SimFlags {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t frames = 100000;
  std::size_t errors = 100;
  std::string out = "-";
  bool record_time = false;
  bool fixed_interleaver = false;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--seed", f.seed, "Base seed (default: $POLARMEM_SEED or 1)");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--frames", f.frames, "Frame cap per point");
  cmd->add_option("--errors", f.errors, "Frame-error budget per point (0: run all frames)");
  cmd->add_option("--out", f.out, "CSV output path ('-' for stdout)");
  cmd->add_flag("--record-time", f.record_time, "Write wall time in the seconds column");
  cmd->add_flag("--fixed-interleaver", f.fixed_interleaver, "One interleaver per point instead of per frame");
}

void apply_sim_flags(SimConfig& c, const SimFlags& f, CLI::App* cmd) {
  if (cmd->count("--seed") || std::getenv("POLARMEM_SEED")) c.seed = f.seed;
  c.workers = f.workers;
  if (cmd->count("--frames")) c.max_frames = f.frames;
  if (cmd->count("--errors")) c.error_budget = f.errors;
  c.record_time = f.record_time;
  c.fixed_interleaver = f.fixed_interleaver;
}

int run_grid(const std::vector<SimConfig>& grid, const SimFlags& flags) {
  Output out(flags.out);
  out.stream() << csv_header() << '\n';
  const auto rows = sweep(grid, [&](const SweepRow& row) {
    out.stream() << csv_row(row) << '\n';
    out.stream().flush();
    std::clog << family_label(row.config.family) << " n=" << row.config.n << " "
              << regime_name(row.config.regime) << " pBG=" << row.config.channel.p_bad_to_good << ": "
              << (row.error.empty() ? format_fer(row.result) + " (" + std::to_string(row.result.frames) +
                                          " frames)"
                                    : "error: " + row.error)
              << '\n';
  });
  print_summary(flags.out == "-" ? std::clog : std::cout, rows);
  for (const auto& r : rows)
    if (!r.error.empty()) return exit_failure;
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successive-cancellation decoding of polar and convolutional polar codes over finite-state "
               "channels"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 1;
  try {
    seed = default_seed();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }

  // construct
  auto* construct = app.add_subcommand("construct", "Build a frozen set from first-error probabilities");
  std::string c_family, c_channel, c_mode = "corr", c_out = "-", c_profile, c_orient = "target-low",
                        c_order = "shifted-first";
  int c_n = 0;
  std::size_t c_k = 0;
  construct->add_option("--family", c_family, "polar | conv-polar")->required();
  construct->add_option("--n", c_n, "Polarization steps (N = 2^n)")->required()->check(CLI::Range(1, 16));
  construct->add_option("--k", c_k, "Number of information bits")->required();
  construct->add_option("--channel", c_channel, "Channel description file")->required()->check(CLI::ExistingFile);
  construct->add_option("--mode", c_mode, "iid | corr")->check(CLI::IsMember({"iid", "corr"}));
  construct->add_option("--out", c_out, "Code file to write ('-' for stdout)");
  construct->add_option("--emit-profile", c_profile, "Write the E(u_i) profile as CSV ('-' for stdout)");
  construct->add_option("--orientation", c_orient, "CNOT orientation: target-low | control-low");
  construct->add_option("--conv-order", c_order, "conv-polar sublayer order: shifted-first | pairs-first");

  // decode
  auto* decode = app.add_subcommand("decode", "Decode one received word");
  std::string d_code, d_channel, d_y, d_engine = "fast";
  std::size_t d_window = 0;
  bool d_verbose = false;
  decode->add_option("--code", d_code, "Code file")->required()->check(CLI::ExistingFile);
  decode->add_option("--channel", d_channel, "Channel description file")->required()->check(CLI::ExistingFile);
  decode->add_option("--y", d_y, "Received word as a 0/1 string or a file")->required();
  decode->add_option("--engine", d_engine, "fast | sweep")->check(CLI::IsMember({"fast", "sweep"}));
  decode->add_option("--window", d_window, "Decode window (default 1 for polar, 3 for conv-polar)");
  decode->add_flag("--verbose", d_verbose, "Print every window table");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Estimate the FER of one configuration");
  SimFlags s_flags;
  s_flags.seed = seed;
  std::string s_family = "polar", s_rate = "1/2", s_regime = "corr", s_channel;
  int s_n = 10;
  std::size_t s_window = 0;
  GilbertParams s_ge;
  simulate->add_option("--family", s_family, "polar | conv-polar");
  simulate->add_option("--n", s_n, "Polarization steps")->check(CLI::Range(1, 16));
  simulate->add_option("--rate", s_rate, "Code rate a/b");
  simulate->add_option("--regime", s_regime, "base | int | corr")->check(CLI::IsMember({"base", "int", "corr"}));
  simulate->add_option("--channel", s_channel, "Gilbert-Elliott or BSC channel file")->check(CLI::ExistingFile);
  simulate->add_option("--hG", s_ge.h_good, "Good-state crossover");
  simulate->add_option("--hB", s_ge.h_bad, "Bad-state crossover");
  simulate->add_option("--pGB", s_ge.p_good_to_bad, "P(G -> B)");
  simulate->add_option("--pBG", s_ge.p_bad_to_good, "P(B -> G)");
  simulate->add_option("--window", s_window, "Decode window");
  add_sim_flags(simulate, s_flags);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of configurations");
  SimFlags w_flags;
  w_flags.seed = seed;
  std::string w_grid;
  bool w_list = false;
  sweep_cmd->add_option("--grid", w_grid, "fig2a | fig2b | fig2cd | grid file")->required();
  sweep_cmd->add_flag("--list", w_list, "Print the grid lines and exit");
  add_sim_flags(sweep_cmd, w_flags);

  // verify
  auto* verify = app.add_subcommand("verify", "Run the self-verification suites");
  std::string v_level = "quick";
  verify->add_option("--level", v_level, "quick | full")->check(CLI::IsMember({"quick", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*construct) {
      const Family family = parse_family(c_family);
      const CircuitOptions opts = circuit_options(c_orient, c_order);
      const std::size_t length = std::size_t{1} << c_n;
      if (c_k > length) throw FormatError("--k exceeds N = " + std::to_string(length));
      const ChannelDescription ch = read_channel_file(c_channel);
      if (!ch.channel.per_state_bsc())
        throw FormatError("construction needs a channel whose per-state laws are BSCs");
      const Construction built = construct_frozen_set(family, c_n, c_k, ch.channel, parse_mode(c_mode), opts);
      {
        Output out(c_out);
        write_code(out.stream(), built.spec);
      }
      if (!c_profile.empty()) {
        Output prof(c_profile);
        write_profile_csv(prof.stream(), built.profile, built.spec.frozen());
      }
      return exit_ok;
    }

    if (*decode) {
      const CodeSpec spec = read_code_file(d_code);
      const ChannelDescription ch = read_channel_file(d_channel);
      const auto y = read_bits_argument(d_y);
      if (y.size() != spec.length())
        throw FormatError("received word has " + std::to_string(y.size()) + " bits, code length is " +
                          std::to_string(spec.length()));
      DecodeOptions opts;
      opts.engine = d_engine == "sweep" ? Engine::sweep : Engine::fast;
      opts.window = d_window;
      if (d_verbose)
        opts.on_step = [](const StepRecord& s) {
          std::cout << "window [" << s.lo + 1 << ", " << s.hi << "]:";
          for (std::size_t w = 0; w < s.table->values.size(); ++w) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %.6e", s.table->values[w]);
            std::cout << buf;
          }
          std::cout << " x2^" << s.table->exponent << " -> ";
          for (std::size_t t = 0; t < s.hi - s.lo; ++t) std::cout << ((s.decision >> t) & 1u);
          std::cout << '\n';
        };
      const ChainMpo mpo = evidence_mpo(ch.channel, y);
      const DecodeResult r = sc_decode(spec, mpo, opts);
      std::cout << "u=" << format_bits(r.u) << '\n';
      std::cout << "message=" << format_bits(r.message) << '\n';
      if (d_verbose)
        std::cout << "contractions=" << r.stats.contractions << " cache_hits=" << r.stats.cache_hits
                  << " couplings=" << r.stats.couplings << '\n';
      if (r.zero_tables) {
        std::cerr << "warning: " << r.zero_tables << " window tables were all zero\n";
        return exit_failure;
      }
      return exit_ok;
    }

    if (*simulate) {
      SimConfig c;
      c.family = parse_family(s_family);
      c.n = s_n;
      const auto slash = s_rate.find('/');
      if (slash == std::string::npos) throw FormatError("--rate must be written a/b");
      c.rate_num = std::stoul(s_rate.substr(0, slash));
      c.rate_den = std::stoul(s_rate.substr(slash + 1));
      c.regime = parse_regime(s_regime);
      c.window = s_window;
      if (!s_channel.empty()) {
        const ChannelDescription ch = read_channel_file(s_channel);
        if (!ch.gilbert) throw FormatError("simulate needs a ge or bsc channel file");
        c.channel = *ch.gilbert;
      } else {
        c.channel = s_ge;
      }
      apply_sim_flags(c, s_flags, simulate);
      return run_grid({c}, s_flags);
    }

    if (*sweep_cmd) {
      std::vector<SimConfig> grid = is_preset(w_grid) ? preset_grid(w_grid) : read_grid_file(w_grid);
      if (w_list) {
        for (const auto& c : grid) std::cout << format_grid_line(c) << '\n';
        return exit_ok;
      }
      for (auto& c : grid) apply_sim_flags(c, w_flags, sweep_cmd);
      return run_grid(grid, w_flags);
    }

    if (*verify) {
      VerifyOptions opts;
      opts.full = v_level == "full";
      opts.seed = seed;
      bool all = true;
      opts.on_check = [&](const CheckResult& r) {
        all &= r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << '\n';
      };
      run_verification(opts);
      return all ? exit_ok : exit_failure;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_usage;
}
