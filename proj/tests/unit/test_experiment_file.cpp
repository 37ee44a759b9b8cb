#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmzi/experiment_file.hpp"

using namespace nmzi;
namespace fs = std::filesystem;

namespace {

const fs::path kCorpus = NMZI_CORPUS_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> corpus(const char* sub) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kCorpus / sub)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

ParseError parse_failure(std::string_view text) {
  try {
    parse_experiment(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a ParseError");
  return ParseError(0, 0, ParseErrorKind::UnknownKeyword, "");
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("equal-intensity setup file") {
  const auto file = parse_experiment(slurp(kCorpus / "valid/reference_setup.nmzi"));
  CHECK(file.config.ratios == equal_intensity_ratios());
  CHECK(file.config.phi == 0.22);
  CHECK(file.config.chi == 0.11);
  CHECK(file.config.convention == SignConvention::ExperimentMatched);
  CHECK(file.vibrations == VibrationSpec::staggered(1e-3, 0.0));
  CHECK(file.detector == DetectorModel::IntensitySum);
  CHECK(file.sim == SimParams{});
  CHECK(file.source.bs[0] == 2);
  CHECK(file.source.mirror[4] == 10);
  CHECK(file.source.sim == 14);
}

TEST_CASE("error positions") {
  const auto empty = parse_failure("");
  CHECK(empty.line() == 1);
  CHECK(empty.kind() == ParseErrorKind::MissingElement);

  const auto range = parse_failure("bs BS1 t=1.5\n");
  CHECK(range.kind() == ParseErrorKind::ValueOutOfRange);
  CHECK(range.line() == 1);
  CHECK(range.column() == 10);
  CHECK(range.formatted().rfind("1:10 ValueOutOfRange ", 0) == 0);

  const auto word = parse_failure("\n\n  mirror Q freq_hz=1 amp_phase=0 amp_deflect=0\n");
  CHECK(word.line() == 3);
  CHECK(word.column() == 10);
  CHECK(word.kind() == ParseErrorKind::UnknownKeyword);

  const auto number = parse_failure("phase outer=0.1 inner=0.2.3");
  CHECK(number.kind() == ParseErrorKind::MalformedNumber);
  CHECK(number.column() == 23);
}

TEST_CASE("valid corpus parses and round trips") {
  const auto files = corpus("valid");
  CHECK(files.size() >= 10);
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    const auto text = slurp(path);
    const auto first = parse_experiment(text);
    const auto canonical = serialize_experiment(first);
    const auto second = parse_experiment(canonical);
    CHECK(second == first);
    CHECK(serialize_experiment(second) == canonical);
    CHECK(canonical.find('\r') == std::string::npos);
  }
}

TEST_CASE("invalid corpus reports the expected kind and line") {
  const auto files = corpus("invalid");
  CHECK(files.size() >= 15);
  const std::regex header(R"(# expect: (\w+) line (\d+))");
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    const auto text = slurp(path);
    std::smatch m;
    const std::string first_line = text.substr(0, text.find('\n'));
    REQUIRE(std::regex_search(first_line, m, header));
    const auto err = parse_failure(text);
    CHECK(to_string(err.kind()) == m[1].str());
    CHECK(err.line() == std::stoi(m[2].str()));
    CHECK(err.column() >= 1);
  }
}

TEST_CASE("canonical form of the setup file is stable") {
  const auto canonical = serialize_experiment(parse_experiment(slurp(kCorpus / "valid/reference_setup.nmzi")));
  CHECK(canonical == slurp(kCorpus / "golden/reference_setup.canonical"));
}

TEST_CASE("shortest float formatting round trips") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng) * std::pow(10.0, int(rng() % 20) - 10);
    CHECK(std::stod(format_shortest(x)) == x);
  }
  CHECK(format_shortest(0.1) == "0.1");
  CHECK(format_shortest(1100.0) == "1100");
}

TEST_CASE("a single garbled token is reported on its own line") {
  const auto lines = split_lines(slurp(kCorpus / "valid/reference_setup.nmzi"));
  std::mt19937_64 rng(17);
  int mutated = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t li = rng() % lines.size();
    if (lines[li].empty() || lines[li][0] == '#') continue;
    std::vector<std::string> tokens;
    std::stringstream ss(lines[li]);
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    const std::size_t ti = rng() % tokens.size();
    const std::string garbage = "x_" + std::to_string(rng() % 100000);
    // Either the whole token or only the value after '=' is replaced.
    const auto eq = tokens[ti].find('=');
    if (eq != std::string::npos && rng() % 2) {
      tokens[ti] = tokens[ti].substr(0, eq + 1) + garbage;
    } else {
      tokens[ti] = garbage;
    }
    std::string text;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (k != li) {
        text += lines[k] + "\n";
        continue;
      }
      for (std::size_t j = 0; j < tokens.size(); ++j) text += (j ? " " : "") + tokens[j];
      text += "\n";
    }
    ++mutated;
    const auto err = parse_failure(text);
    CHECK(err.line() == int(li + 1));
  }
  CHECK(mutated > 1000);
}

TEST_CASE("a failed parse yields no data") {
  // The only observable result of a bad file is the exception.
  bool produced = false;
  try {
    const auto f = parse_experiment("bs BS1 t=0.5\nbs BS1 t=0.6\n");
    produced = true;
    (void)f;
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::DuplicateElement);
    CHECK(e.line() == 2);
  }
  CHECK_FALSE(produced);
}
