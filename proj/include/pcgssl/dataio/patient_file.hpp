#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pcgssl/dataio/records.hpp"

namespace pcgssl {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

template <class Int>
Int parse_int(std::string_view token, Errc code, const char* what) {
  Int value{};
  std::istringstream in{std::string(token)};
  in >> value;
  if (!in || !in.eof()) fail(code, std::string("invalid ") + what + " '" + std::string(token) + "'");
  return value;
}

}  // namespace detail

/// Parses a challenge patient metadata file.
///
/// Grammar: a header `ID n_locations fs`, then n recording lines
/// `LOC LOC.hea LOC.wav [extra...]`, then `#Key: Value` annotation lines.
/// `#Murmur:` and `#Outcome:` are mandatory; `#Murmur locations:` is a
/// `+`-separated list or `nan`. Other keys are kept verbatim in
/// PatientRecord::annotations. Audio paths are relative to the patient file.
inline PatientRecord parse_patient_file(std::string_view text) {
  using detail::trim;
  std::vector<std::string_view> lines;
  for (auto line : detail::lines_of(text)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  require(!lines.empty(), Errc::MalformedHeader, "empty patient file");

  const auto header = detail::split_ws(lines[0]);
  if (header.size() != 3) fail(Errc::MalformedHeader, "header must be 'ID n_locations fs', got '" + std::string(lines[0]) + "'");

  PatientRecord p;
  p.patient_id = std::string(header[0]);
  const auto n = detail::parse_int<std::size_t>(header[1], Errc::MalformedHeader, "recording count");
  p.sample_rate_declared = detail::parse_int<int>(header[2], Errc::MalformedHeader, "sample rate");
  require(p.sample_rate_declared > 0, Errc::MalformedHeader, "sample rate must be positive");
  require(lines.size() >= n + 1, Errc::MalformedHeader, "fewer recording lines than declared");

  for (std::size_t i = 1; i <= n; ++i) {
    if (lines[i].front() == '#') fail(Errc::MalformedHeader, "fewer recording lines than declared");
    const auto tokens = detail::split_ws(lines[i]);
    if (tokens.size() < 3) fail(Errc::MalformedHeader, "recording line needs 'LOC hea wav': '" + std::string(lines[i]) + "'");
    RecordingRef r;
    r.location = parse_location(tokens[0]);
    r.audio_path = std::string(tokens[2]);
    r.sample_rate = p.sample_rate_declared;
    p.recordings.push_back(std::move(r));
  }

  for (std::size_t i = n + 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.front() != '#') fail(Errc::MalformedHeader, "unexpected line after recordings: '" + std::string(line) + "'");
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key(trim(line.substr(1, colon - 1)));
    const std::string value(trim(line.substr(colon + 1)));
    if (key == "Murmur") {
      p.murmur = parse_murmur(value);
      if (!p.murmur) fail(Errc::MissingMandatoryAnnotation, "unrecognised murmur label '" + value + "'");
    } else if (key == "Outcome") {
      p.outcome = parse_outcome(value);
      if (!p.outcome) fail(Errc::MissingMandatoryAnnotation, "unrecognised outcome label '" + value + "'");
    } else if (key == "Murmur locations") {
      if (value == "nan" || value.empty()) continue;
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto plus = rest.find('+');
        p.murmur_locations.insert(parse_location(trim(rest.substr(0, plus))));
        if (plus == std::string_view::npos) break;
        rest = rest.substr(plus + 1);
      }
    } else {
      p.annotations.emplace_back(key, value);
    }
  }

  if (!p.murmur) fail(Errc::MissingMandatoryAnnotation, "patient " + p.patient_id + " lacks '#Murmur:'");
  if (!p.outcome) fail(Errc::MissingMandatoryAnnotation, "patient " + p.patient_id + " lacks '#Outcome:'");
  validate(p);
  return p;
}

/// Writes a labeled record back in the grammar accepted by parse_patient_file.
inline std::string format_patient_file(const PatientRecord& p) {
  std::ostringstream out;
  out << p.patient_id << ' ' << p.recordings.size() << ' ' << p.sample_rate_declared << '\n';
  for (const auto& r : p.recordings) {
    auto hea = r.audio_path;
    hea.replace_extension(".hea");
    out << to_string(r.location) << ' ' << hea.string() << ' ' << r.audio_path.string() << '\n';
  }
  if (p.murmur) out << "#Murmur: " << to_string(*p.murmur) << '\n';
  out << "#Murmur locations: ";
  if (p.murmur_locations.empty()) {
    out << "nan";
  } else {
    bool first = true;
    for (Location loc : p.murmur_locations) {
      out << (first ? "" : "+") << to_string(loc);
      first = false;
    }
  }
  out << '\n';
  if (p.outcome) out << "#Outcome: " << to_string(*p.outcome) << '\n';
  for (const auto& [key, value] : p.annotations) out << '#' << key << ": " << value << '\n';
  return out.str();
}

}  // namespace pcgssl
