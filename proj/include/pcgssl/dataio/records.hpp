#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcgssl/core/error.hpp"

namespace pcgssl {

/// Auscultation site of a recording.
enum class Location { AV, PV, TV, MV, Phc, Other };

/// Class order is fixed: index 0 is the clinically severe class.
enum class Murmur { Present = 0, Unknown = 1, Absent = 2 };
enum class Outcome { Abnormal = 0, Normal = 1 };

constexpr std::string_view to_string(Location loc) noexcept {
  switch (loc) {
    case Location::AV: return "AV";
    case Location::PV: return "PV";
    case Location::TV: return "TV";
    case Location::MV: return "MV";
    case Location::Phc: return "Phc";
    case Location::Other: return "Other";
  }
  return "Other";
}

constexpr std::string_view to_string(Murmur m) noexcept {
  switch (m) {
    case Murmur::Present: return "Present";
    case Murmur::Unknown: return "Unknown";
    case Murmur::Absent: return "Absent";
  }
  return "Absent";
}

constexpr std::string_view to_string(Outcome o) noexcept {
  return o == Outcome::Abnormal ? "Abnormal" : "Normal";
}

inline Location parse_location(std::string_view code) {
  for (Location loc : {Location::AV, Location::PV, Location::TV, Location::MV, Location::Phc, Location::Other}) {
    if (code == to_string(loc)) return loc;
  }
  fail(Errc::UnknownLocationCode, "unknown auscultation location '" + std::string(code) + "'");
}

inline std::optional<Murmur> parse_murmur(std::string_view s) {
  for (Murmur m : {Murmur::Present, Murmur::Unknown, Murmur::Absent}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
  if (s == "Abnormal") return Outcome::Abnormal;
  if (s == "Normal") return Outcome::Normal;
  return std::nullopt;
}

struct RecordingRef {
  Location location = Location::Other;
  std::filesystem::path audio_path;
  int sample_rate = 0;
  std::size_t samples = 0;  // 0 until the audio has been read

  bool operator==(const RecordingRef&) const = default;
};

struct PatientRecord {
  std::string patient_id;
  int sample_rate_declared = 0;
  std::vector<RecordingRef> recordings;
  std::optional<Murmur> murmur;
  std::set<Location> murmur_locations;
  std::optional<Outcome> outcome;
  /// Annotation lines other than murmur/outcome, in file order.
  std::vector<std::pair<std::string, std::string>> annotations;

  bool labeled() const noexcept { return murmur.has_value() && outcome.has_value(); }

  bool operator==(const PatientRecord&) const = default;
};

/// Checks the record-level invariants (non-empty recordings, murmur locations
/// consistent with the murmur label and the recorded sites).
inline void validate(const PatientRecord& p) {
  require(!p.recordings.empty(), Errc::MalformedHeader, "patient " + p.patient_id + " has no recordings");
  if (p.murmur == Murmur::Present && p.murmur_locations.empty()) {
    fail(Errc::ContradictoryLabels, "patient " + p.patient_id + ": murmur Present but no murmur locations");
  }
  for (Location loc : p.murmur_locations) {
    bool recorded = false;
    for (const auto& r : p.recordings) recorded = recorded || r.location == loc;
    if (!recorded) {
      fail(Errc::ContradictoryLabels, "patient " + p.patient_id + ": murmur location " +
                                          std::string(to_string(loc)) + " has no recording");
    }
  }
}

}  // namespace pcgssl
