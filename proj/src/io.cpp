#include "polarmem/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace polarmem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) { return trim(line.substr(0, line.find('#'))); }

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("value of '" + key + "' is not a number: '" + text + "'");
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw FormatError("value of '" + key + "' is not an integer: '" + text + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_double(key, trim(item)));
  return out;
}

std::ifstream open_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open '" + path + "'");
  return f;
}

using KeyValues = std::map<std::string, std::string>;

std::pair<std::string, std::string> split_key_value(const std::string& token, const std::string& where) {
  const auto eq = token.find('=');
  if (eq == std::string::npos) throw FormatError(where + ": expected key=value, got '" + token + "'");
  return {trim(token.substr(0, eq)), trim(token.substr(eq + 1))};
}

const std::string& require(const KeyValues& kv, const std::string& key, const std::string& what) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(what + " is missing '" + key + "'");
  return it->second;
}

void reject_unknown(const KeyValues& kv, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const auto& [k, v] : kv)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw FormatError(what + ": unknown key '" + k + "'");
}

}  // namespace

ChannelDescription parse_channel(std::istream& is) {
  KeyValues kv;
  std::string line;
  for (int number = 1; std::getline(is, line); ++number) {
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    auto [k, v] = split_key_value(body, "channel line " + std::to_string(number));
    if (!kv.emplace(k, v).second) throw FormatError("channel key '" + k + "' given twice");
  }
  const std::string family = require(kv, "family", "channel description");
  try {
    if (family == "ge" || family == "gilbert-elliott") {
      reject_unknown(kv, {"family", "hG", "hB", "pGB", "pBG", "init"}, "ge channel");
      GilbertParams g{to_double("hG", require(kv, "hG", "ge channel")),
                      to_double("hB", require(kv, "hB", "ge channel")),
                      to_double("pGB", require(kv, "pGB", "ge channel")),
                      to_double("pBG", require(kv, "pBG", "ge channel"))};
      FiniteStateChannel ch = g.channel();
      if (kv.count("init")) ch = ch.with_initial(to_list("init", kv["init"]));
      return {"ge", ch, g};
    }
    if (family == "bsc") {
      reject_unknown(kv, {"family", "h"}, "bsc channel");
      const double h = to_double("h", require(kv, "h", "bsc channel"));
      return {"bsc", lift_memoryless(bsc(h)), GilbertParams{h, h, 0.5, 0.5}};
    }
    if (family == "custom") {
      reject_unknown(kv, {"family", "d", "q", "h", "p", "init"}, "custom channel");
      const long long d = to_integer("d", require(kv, "d", "custom channel"));
      if (d < 1 || d > 64) throw FormatError("custom channel: d must lie in 1..64");
      const auto states = static_cast<std::size_t>(d);
      const auto q = to_list("q", require(kv, "q", "custom channel"));
      std::vector<double> p;
      if (kv.count("h") && kv.count("p")) throw FormatError("custom channel: give either h or p");
      if (kv.count("h")) {
        const auto h = to_list("h", kv["h"]);
        if (h.size() != states) throw FormatError("custom channel: h needs d values");
        p.resize(4 * states);
        for (std::size_t s = 0; s < states; ++s) {
          p[(0 * 2 + 0) * states + s] = 1.0 - h[s];
          p[(0 * 2 + 1) * states + s] = h[s];
          p[(1 * 2 + 0) * states + s] = h[s];
          p[(1 * 2 + 1) * states + s] = 1.0 - h[s];
        }
      } else {
        p = to_list("p", require(kv, "p", "custom channel"));
      }
      std::vector<double> init(states, 1.0 / static_cast<double>(states));
      FiniteStateChannel ch(states, p, q, init);
      ch = ch.with_initial(kv.count("init") ? to_list("init", kv["init"]) : stationary(ch));
      return {"custom", ch, std::nullopt};
    }
  } catch (const ChannelError& e) {
    throw FormatError(std::string("invalid channel: ") + e.what());
  }
  throw FormatError("unknown channel family '" + family + "'");
}

ChannelDescription read_channel_file(const std::string& path) {
  auto f = open_file(path);
  return parse_channel(f);
}

std::string orientation_name(Orientation o) {
  return o == Orientation::target_low ? "target-low" : "control-low";
}

std::string shift_order_name(ShiftOrder o) {
  return o == ShiftOrder::shifted_first ? "shifted-first" : "pairs-first";
}

Orientation parse_orientation(const std::string& text) {
  if (text == "target-low") return Orientation::target_low;
  if (text == "control-low") return Orientation::control_low;
  throw FormatError("unknown orientation '" + text + "'");
}

ShiftOrder parse_shift_order(const std::string& text) {
  if (text == "shifted-first") return ShiftOrder::shifted_first;
  if (text == "pairs-first") return ShiftOrder::pairs_first;
  throw FormatError("unknown conv-polar sublayer order '" + text + "'");
}

CodeSpec parse_code(std::istream& is) {
  KeyValues kv;
  std::vector<std::uint32_t> frozen;
  bool in_list = false;
  std::string line;
  for (int number = 1; std::getline(is, line); ++number) {
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    if (in_list) {
      const long long pos = to_integer("frozen", body);
      if (pos < 1) throw FormatError("frozen positions are 1-based");
      frozen.push_back(static_cast<std::uint32_t>(pos - 1));
      continue;
    }
    auto [k, v] = split_key_value(body, "code line " + std::to_string(number));
    if (k == "frozen") {
      in_list = true;
      if (!v.empty()) throw FormatError("list frozen positions one per line after 'frozen='");
      continue;
    }
    if (!kv.emplace(k, v).second) throw FormatError("code key '" + k + "' given twice");
  }
  reject_unknown(kv, {"family", "n", "k", "orientation", "conv_order"}, "code file");
  if (!in_list) throw FormatError("code file is missing 'frozen='");
  const Family family = parse_family(require(kv, "family", "code file"));
  const long long n = to_integer("n", require(kv, "n", "code file"));
  if (n < 1 || n > 20) throw FormatError("code file: n must lie in 1..20");
  const long long k = to_integer("k", require(kv, "k", "code file"));
  CircuitOptions opts;
  if (kv.count("orientation")) opts.orientation = parse_orientation(kv["orientation"]);
  if (kv.count("conv_order")) opts.shift_order = parse_shift_order(kv["conv_order"]);
  try {
    CodeSpec spec(family, static_cast<int>(n), std::move(frozen), opts);
    if (k < 0 || static_cast<std::size_t>(k) != spec.dimension())
      throw FormatError("code file: k differs from N minus the number of frozen positions");
    return spec;
  } catch (const CodeError& e) {
    throw FormatError(std::string("invalid code: ") + e.what());
  }
}

CodeSpec read_code_file(const std::string& path) {
  auto f = open_file(path);
  return parse_code(f);
}

void write_code(std::ostream& os, const CodeSpec& spec) {
  os << "family=" << family_name(spec.family()) << '\n';
  os << "n=" << spec.levels() << '\n';
  os << "k=" << spec.dimension() << '\n';
  const CircuitOptions defaults;
  if (spec.options().orientation != defaults.orientation)
    os << "orientation=" << orientation_name(spec.options().orientation) << '\n';
  if (spec.family() == Family::conv_polar && spec.options().shift_order != defaults.shift_order)
    os << "conv_order=" << shift_order_name(spec.options().shift_order) << '\n';
  os << "frozen=\n";
  for (auto i : spec.frozen()) os << i + 1 << '\n';
}

std::vector<SimConfig> parse_grid(std::istream& is) {
  std::vector<SimConfig> grid;
  std::string line;
  for (int number = 1; std::getline(is, line); ++number) {
    const std::string body = strip_comment(line);
    if (body.empty()) continue;
    const std::string where = "grid line " + std::to_string(number);
    SimConfig cfg;
    std::istringstream tokens(body);
    for (std::string token; tokens >> token;) {
      auto [k, v] = split_key_value(token, where);
      try {
        if (k == "family") {
          cfg.family = parse_family(v);
        } else if (k == "n") {
          cfg.n = static_cast<int>(to_integer(k, v));
        } else if (k == "rate") {
          const auto slash = v.find('/');
          if (slash == std::string::npos) throw FormatError(where + ": rate must be written a/b");
          cfg.rate_num = static_cast<std::size_t>(to_integer(k, v.substr(0, slash)));
          cfg.rate_den = static_cast<std::size_t>(to_integer(k, v.substr(slash + 1)));
        } else if (k == "regime") {
          cfg.regime = parse_regime(v);
        } else if (k == "hG") {
          cfg.channel.h_good = to_double(k, v);
        } else if (k == "hB") {
          cfg.channel.h_bad = to_double(k, v);
        } else if (k == "pGB") {
          cfg.channel.p_good_to_bad = to_double(k, v);
        } else if (k == "pBG") {
          cfg.channel.p_bad_to_good = to_double(k, v);
        } else if (k == "seed") {
          cfg.seed = static_cast<std::uint64_t>(to_integer(k, v));
        } else if (k == "frames") {
          cfg.max_frames = static_cast<std::size_t>(to_integer(k, v));
        } else if (k == "errors") {
          cfg.error_budget = static_cast<std::size_t>(to_integer(k, v));
        } else if (k == "window") {
          cfg.window = static_cast<std::size_t>(to_integer(k, v));
        } else {
          throw FormatError(where + ": unknown key '" + k + "'");
        }
      } catch (const CodeError& e) {
        throw FormatError(where + ": " + e.what());
      } catch (const SimError& e) {
        throw FormatError(where + ": " + e.what());
      }
    }
    if (cfg.n < 1 || cfg.n > 16) throw FormatError(where + ": n must lie in 1..16");
    if (cfg.rate_den == 0 || cfg.rate_num > cfg.rate_den) throw FormatError(where + ": rate must lie in [0, 1]");
    grid.push_back(cfg);
  }
  return grid;
}

std::vector<SimConfig> read_grid_file(const std::string& path) {
  auto f = open_file(path);
  return parse_grid(f);
}

std::string format_grid_line(const SimConfig& cfg) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "family=%s n=%d rate=%zu/%zu regime=%s hG=%.10g hB=%.10g pGB=%.10g pBG=%.10g",
                family_label(cfg.family).c_str(), cfg.n, cfg.rate_num, cfg.rate_den,
                regime_name(cfg.regime).c_str(), cfg.channel.h_good, cfg.channel.h_bad,
                cfg.channel.p_good_to_bad, cfg.channel.p_bad_to_good);
  return buf;
}

std::vector<std::uint8_t> parse_bits(const std::string& text) {
  std::vector<std::uint8_t> bits;
  for (char c : text) {
    if (c == '0' || c == '1')
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    else if (!std::isspace(static_cast<unsigned char>(c)) && c != ',')
      throw FormatError(std::string("bit strings may only contain 0 and 1, got '") + c + "'");
  }
  return bits;
}

std::vector<std::uint8_t> read_bits_argument(const std::string& arg) {
  const bool literal = !arg.empty() && arg.find_first_not_of("01 ,") == std::string::npos;
  if (literal) return parse_bits(arg);
  if (!std::filesystem::exists(arg)) throw FormatError("'" + arg + "' is neither a bit string nor a file");
  auto f = open_file(arg);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string body;
  for (std::string line; std::getline(ss, line);) body += strip_comment(line);
  return parse_bits(body);
}

std::string format_bits(std::span<const std::uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

void write_profile_csv(std::ostream& os, const ErrorProfile& profile, std::span<const std::uint32_t> frozen) {
  std::vector<std::uint8_t> is_frozen(profile.log2_e.size(), 0);
  for (auto i : frozen) is_frozen.at(i) = 1;
  os << "position,E,log2_E,frozen\n";
  char buf[128];
  for (std::size_t i = 0; i < profile.log2_e.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%d\n", i + 1, profile.value(i), profile.log2_e[i],
                  is_frozen[i]);
    os << buf;
  }
}

}  // namespace polarmem
