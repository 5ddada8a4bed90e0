#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarmem/channel.hpp"
#include "polarmem/codes.hpp"
#include "polarmem/construction.hpp"
#include "polarmem/sim.hpp"

namespace polarmem {

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Channel description, one key=value per line, '#' starts a comment.
///   family=ge      hG, hB, pGB, pBG [, init]
///   family=bsc     h
///   family=custom  d, q (d*d values, q[s'][s] row by row), then either h
///                  (d per-state crossovers) or p (4*d values p[y][x][s]),
///                  optional init (defaults to the stationary law)
/// Lists are comma separated.
struct ChannelDescription {
  std::string family;
  FiniteStateChannel channel;
  std::optional<GilbertParams> gilbert;  // set for family=ge and bsc
};

ChannelDescription parse_channel(std::istream& is);
ChannelDescription read_channel_file(const std::string& path);

/// Code file: family, n, k, optional orientation / conv_order, then a line
/// "frozen=" followed by one 1-based position per line.
CodeSpec parse_code(std::istream& is);
CodeSpec read_code_file(const std::string& path);
void write_code(std::ostream& os, const CodeSpec& spec);

/// Grid file: one configuration per line as whitespace separated key=value
/// tokens (family, n, rate, regime, hG, hB, pGB, pBG, seed, frames, errors,
/// window).
std::vector<SimConfig> parse_grid(std::istream& is);
std::vector<SimConfig> read_grid_file(const std::string& path);
std::string format_grid_line(const SimConfig& cfg);

/// Bits given as a 0/1 string (whitespace ignored) or a file holding one.
std::vector<std::uint8_t> parse_bits(const std::string& text);
std::vector<std::uint8_t> read_bits_argument(const std::string& arg);
std::string format_bits(std::span<const std::uint8_t> bits);

std::string orientation_name(Orientation o);
std::string shift_order_name(ShiftOrder o);
Orientation parse_orientation(const std::string& text);
ShiftOrder parse_shift_order(const std::string& text);

void write_profile_csv(std::ostream& os, const ErrorProfile& profile, std::span<const std::uint32_t> frozen);

}  // namespace polarmem
