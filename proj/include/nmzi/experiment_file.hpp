#pragma once

// Line-oriented description of a complete run. One directive per line,
// '#' starts a comment, blank lines are ignored, LF or CRLF:
//
//   bs <BS1|BS2|BS3|BS4> t=<float>
//   mirror <A|B|C|E|F> freq_hz=<float> amp_phase=<float> amp_deflect=<float>
//   phase inner=<float> outer=<float>
//   convention <as_written|experiment_matched>      (optional)
//   detector <intensity_sum|position_differential>
//   sim rate_hz=<float> duration_s=<float> window=<hann|rect>
//
// key=value pairs may come in any order. t is the amplitude transmissivity;
// phases are radians.

#include <stdexcept>
#include <string>
#include <string_view>

#include "nmzi/optics.hpp"
#include "nmzi/signal.hpp"

namespace nmzi {

struct SourceMap {
  std::array<int, 4> bs{};
  std::array<int, 5> mirror{};
  int phase = 0;
  int convention = 0;  // 0 when the default was used
  int detector = 0;
  int sim = 0;
};

struct ExperimentFile {
  NmziConfig config;
  VibrationSpec vibrations;
  DetectorModel detector = DetectorModel::IntensitySum;
  SimParams sim;
  SourceMap source;

  /// Structural equality; the source map is not compared.
  friend bool operator==(const ExperimentFile& l, const ExperimentFile& r) {
    return l.config == r.config && l.vibrations == r.vibrations && l.detector == r.detector &&
           l.sim == r.sim;
  }
};

enum class ParseErrorKind { UnknownKeyword, DuplicateElement, MissingElement, ValueOutOfRange, MalformedNumber };

std::string_view to_string(ParseErrorKind kind) noexcept;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, ParseErrorKind kind, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  ParseErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

  /// "line:col kind message"
  std::string formatted() const;

 private:
  int line_;
  int column_;
  ParseErrorKind kind_;
  std::string message_;
};

/// Throws ParseError on the first problem found; never returns partial data.
ExperimentFile parse_experiment(std::string_view text);

/// Canonical form: bs1..bs4, mirrors A..F, phase, convention, detector, sim,
/// shortest round-trip floats, LF line endings.
std::string serialize_experiment(const ExperimentFile& file);

std::string_view to_string(DetectorModel d) noexcept;
std::string_view to_string(Window w) noexcept;

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double x);

}  // namespace nmzi
