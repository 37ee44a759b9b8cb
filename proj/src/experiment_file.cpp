#include "nmzi/experiment_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <vector>

namespace nmzi {

namespace {

struct Token {
  std::string_view text;
  int column;
};

struct KeyValue {
  std::string_view key;
  std::string_view value;
  int key_column;
  int value_column;
};

std::vector<Token> tokenize(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

class LineParser {
 public:
  LineParser(int line, std::vector<Token> tokens) : line_(line), tokens_(std::move(tokens)) {}

  [[noreturn]] void fail(int column, ParseErrorKind kind, const std::string& message) const {
    throw ParseError(line_, column, kind, message);
  }

  const Token& directive() const { return tokens_[0]; }

  // Positional argument right after the directive.
  const Token& argument(std::string_view what) const {
    if (tokens_.size() < 2) fail(end_column(), ParseErrorKind::MissingElement, "expected " + std::string(what));
    return tokens_[1];
  }

  void expect_no_more(std::size_t from) const {
    if (tokens_.size() > from) {
      fail(tokens_[from].column, ParseErrorKind::UnknownKeyword,
           "unexpected token '" + std::string(tokens_[from].text) + "'");
    }
  }

  // Remaining tokens as key=value pairs drawn from `allowed`.
  std::vector<KeyValue> pairs(std::size_t from, std::initializer_list<std::string_view> allowed) const {
    std::vector<KeyValue> out;
    for (std::size_t i = from; i < tokens_.size(); ++i) {
      const auto& tok = tokens_[i];
      const auto eq = tok.text.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        fail(tok.column, ParseErrorKind::UnknownKeyword, "expected key=value, got '" + std::string(tok.text) + "'");
      }
      const auto key = tok.text.substr(0, eq);
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(tok.column, ParseErrorKind::UnknownKeyword, "unknown key '" + std::string(key) + "'");
      }
      for (const auto& kv : out) {
        if (kv.key == key) fail(tok.column, ParseErrorKind::DuplicateElement, "key '" + std::string(key) + "' repeated");
      }
      out.push_back({key, tok.text.substr(eq + 1), tok.column, tok.column + static_cast<int>(eq) + 1});
    }
    for (auto key : allowed) {
      bool present = false;
      for (const auto& kv : out) present = present || kv.key == key;
      if (!present) fail(directive().column, ParseErrorKind::MissingElement, "missing key '" + std::string(key) + "'");
    }
    return out;
  }

  double number(const KeyValue& kv) const {
    double value = 0.0;
    const char* first = kv.value.data();
    const char* last = first + kv.value.size();
    // from_chars has no explicit plus sign.
    if (last - first > 1 && *first == '+' && first[1] != '-' && first[1] != '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (kv.value.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
      fail(kv.value_column, ParseErrorKind::MalformedNumber,
           "'" + std::string(kv.value) + "' is not a finite number");
    }
    return value;
  }

  double number_in(const KeyValue& kv, double lo, double hi, bool open_lo, const char* range) const {
    const double v = number(kv);
    if (v > hi || v < lo || (open_lo && v == lo)) {
      fail(kv.value_column, ParseErrorKind::ValueOutOfRange,
           std::string(kv.key) + "=" + std::string(kv.value) + " outside " + range);
    }
    return v;
  }

  int line() const { return line_; }

 private:
  int end_column() const {
    const auto& last = tokens_.back();
    return last.column + static_cast<int>(last.text.size());
  }

  int line_;
  std::vector<Token> tokens_;
};

const KeyValue& find(const std::vector<KeyValue>& kvs, std::string_view key) {
  for (const auto& kv : kvs) {
    if (kv.key == key) return kv;
  }
  throw std::logic_error("key checked by LineParser::pairs");
}


void claim(const LineParser& p, const Token& at, int& slot, const std::string& what) {
  if (slot != 0) {
    p.fail(at.column, ParseErrorKind::DuplicateElement,
           what + " already defined on line " + std::to_string(slot));
  }
  slot = p.line();
}

constexpr double kHuge = 1e308;

}  // namespace

std::string_view to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::UnknownKeyword: return "UnknownKeyword";
    case ParseErrorKind::DuplicateElement: return "DuplicateElement";
    case ParseErrorKind::MissingElement: return "MissingElement";
    case ParseErrorKind::ValueOutOfRange: return "ValueOutOfRange";
    case ParseErrorKind::MalformedNumber: return "MalformedNumber";
  }
  return "?";
}

ParseError::ParseError(int line, int column, ParseErrorKind kind, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + " " +
                         std::string(to_string(kind)) + " " + message),
      line_(line),
      column_(column),
      kind_(kind),
      message_(message) {}

std::string ParseError::formatted() const { return what(); }

std::string_view to_string(DetectorModel d) noexcept {
  return d == DetectorModel::IntensitySum ? "intensity_sum" : "position_differential";
}

std::string_view to_string(Window w) noexcept { return w == Window::Hann ? "hann" : "rect"; }

std::string format_shortest(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

ExperimentFile parse_experiment(std::string_view text) {
  ExperimentFile out;
  auto& src = out.source;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    const LineParser p(line_no, std::move(tokens));
    const auto word = p.directive().text;

    if (word == "bs") {
      const auto& name = p.argument("beam splitter name");
      static constexpr std::string_view names[] = {"BS1", "BS2", "BS3", "BS4"};
      int which = -1;
      for (int i = 0; i < 4; ++i) {
        if (name.text == names[i]) which = i;
      }
      if (which < 0) p.fail(name.column, ParseErrorKind::UnknownKeyword, "unknown beam splitter '" + std::string(name.text) + "'");
      claim(p, name, src.bs[which], std::string(name.text));
      const auto kvs = p.pairs(2, {"t"});
      const auto ratio = SplitRatio::from_transmissivity(p.number_in(find(kvs, "t"), 0.0, 1.0, false, "[0, 1]"));
      SplitRatio* slots[] = {&out.config.ratios.bs1, &out.config.ratios.bs2, &out.config.ratios.bs3,
                             &out.config.ratios.bs4};
      *slots[which] = ratio;
    } else if (word == "mirror") {
      const auto& name = p.argument("mirror name");
      const auto mirror = mirror_from_name(name.text);
      if (!mirror) p.fail(name.column, ParseErrorKind::UnknownKeyword, "unknown mirror '" + std::string(name.text) + "'");
      claim(p, name, src.mirror[index(*mirror)], "mirror " + std::string(name.text));
      const auto kvs = p.pairs(2, {"freq_hz", "amp_phase", "amp_deflect"});
      auto& v = out.vibrations[*mirror];
      v.freq_hz = p.number_in(find(kvs, "freq_hz"), 0.0, kHuge, true, "(0, inf)");
      v.amp_phase = p.number_in(find(kvs, "amp_phase"), -kMaxVibrationAmplitude, kMaxVibrationAmplitude, false, "[-0.01, 0.01]");
      v.amp_deflect = p.number_in(find(kvs, "amp_deflect"), -kMaxVibrationAmplitude, kMaxVibrationAmplitude, false, "[-0.01, 0.01]");
    } else if (word == "phase") {
      claim(p, p.directive(), src.phase, "phase");
      const auto kvs = p.pairs(1, {"inner", "outer"});
      out.config.phi = p.number(find(kvs, "inner"));
      out.config.chi = p.number(find(kvs, "outer"));
    } else if (word == "convention") {
      claim(p, p.directive(), src.convention, "convention");
      const auto& arg = p.argument("convention name");
      const auto conv = convention_from_string(arg.text);
      if (!conv) p.fail(arg.column, ParseErrorKind::UnknownKeyword, "unknown convention '" + std::string(arg.text) + "'");
      p.expect_no_more(2);
      out.config.convention = *conv;
    } else if (word == "detector") {
      claim(p, p.directive(), src.detector, "detector");
      const auto& arg = p.argument("detector model");
      if (arg.text == "intensity_sum") {
        out.detector = DetectorModel::IntensitySum;
      } else if (arg.text == "position_differential") {
        out.detector = DetectorModel::PositionDifferential;
      } else {
        p.fail(arg.column, ParseErrorKind::UnknownKeyword, "unknown detector '" + std::string(arg.text) + "'");
      }
      p.expect_no_more(2);
    } else if (word == "sim") {
      claim(p, p.directive(), src.sim, "sim");
      const auto kvs = p.pairs(1, {"rate_hz", "duration_s", "window"});
      out.sim.sample_rate_hz = p.number_in(find(kvs, "rate_hz"), 0.0, kHuge, true, "(0, inf)");
      out.sim.duration_s = p.number_in(find(kvs, "duration_s"), 0.0, kHuge, true, "(0, inf)");
      const auto& window = find(kvs, "window");
      if (window.value == "hann") {
        out.sim.window = Window::Hann;
      } else if (window.value == "rect") {
        out.sim.window = Window::Rectangular;
      } else {
        p.fail(window.value_column, ParseErrorKind::UnknownKeyword, "unknown window '" + std::string(window.value) + "'");
      }
    } else {
      p.fail(p.directive().column, ParseErrorKind::UnknownKeyword, "unknown directive '" + std::string(word) + "'");
    }
  }

  const int eof_line = line_no + 1;
  auto missing = [&](const std::string& what) {
    throw ParseError(eof_line, 1, ParseErrorKind::MissingElement, what + " not defined");
  };
  for (int i = 0; i < 4; ++i) {
    if (src.bs[i] == 0) missing("BS" + std::to_string(i + 1));
  }
  for (Mirror m : kAllMirrors) {
    if (src.mirror[index(m)] == 0) missing(std::string("mirror ") + mirror_name(m));
  }
  if (src.phase == 0) missing("phase");
  if (src.detector == 0) missing("detector");
  if (src.sim == 0) missing("sim");
  return out;
}

std::string serialize_experiment(const ExperimentFile& file) {
  std::string out;
  const auto& q = file.config.ratios;
  const SplitRatio* ratios[] = {&q.bs1, &q.bs2, &q.bs3, &q.bs4};
  for (int i = 0; i < 4; ++i) {
    out += "bs BS" + std::to_string(i + 1) + " t=" + format_shortest(ratios[i]->t()) + "\n";
  }
  for (Mirror m : kAllMirrors) {
    const auto& v = file.vibrations[m];
    out += std::string("mirror ") + mirror_name(m) + " freq_hz=" + format_shortest(v.freq_hz) +
           " amp_phase=" + format_shortest(v.amp_phase) + " amp_deflect=" + format_shortest(v.amp_deflect) + "\n";
  }
  out += "phase inner=" + format_shortest(file.config.phi) + " outer=" + format_shortest(file.config.chi) + "\n";
  out += "convention " + std::string(to_string(file.config.convention)) + "\n";
  out += "detector " + std::string(to_string(file.detector)) + "\n";
  out += "sim rate_hz=" + format_shortest(file.sim.sample_rate_hz) + " duration_s=" +
         format_shortest(file.sim.duration_s) + " window=" + std::string(to_string(file.sim.window)) + "\n";
  return out;
}

}  // namespace nmzi
