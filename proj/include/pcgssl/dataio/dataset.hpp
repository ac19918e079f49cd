#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcgssl/dataio/patient_file.hpp"
#include "pcgssl/dataio/records.hpp"
#include "pcgssl/dataio/wav.hpp"

namespace pcgssl {

struct DatasetLoad {
  std::vector<PatientRecord> patients;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void fill_from_audio(RecordingRef& r, std::vector<std::string>& warnings) {
  const auto audio = decode_wav(r.audio_path);
  if (r.sample_rate != 0 && r.sample_rate != audio.sample_rate) {
    warnings.push_back(r.audio_path.string() + ": header declares " + std::to_string(r.sample_rate) +
                       " Hz, WAV says " + std::to_string(audio.sample_rate) + " Hz; using the WAV rate");
  }
  r.sample_rate = audio.sample_rate;
  r.samples = audio.samples.size();
}

}  // namespace detail

/// Reads one patient file and resolves its audio paths against its directory.
/// With `probe_audio`, sample rate and length are taken from the WAV files.
inline PatientRecord load_patient_file(const std::filesystem::path& path, bool probe_audio,
                                       std::vector<std::string>* warnings = nullptr) {
  PatientRecord p;
  try {
    p = parse_patient_file(detail::read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  std::vector<std::string> local;
  for (auto& r : p.recordings) {
    r.audio_path = path.parent_path() / r.audio_path;
    if (probe_audio) detail::fill_from_audio(r, warnings ? *warnings : local);
  }
  return p;
}

/// Loads every `<id>.txt` patient file in a challenge-2022 style directory,
/// in lexicographic file order. Files that do not parse are fatal.
inline DatasetLoad load_dataset_2022(const std::filesystem::path& dir, bool probe_audio = true) {
  if (!std::filesystem::is_directory(dir)) fail(Errc::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  DatasetLoad load;
  for (const auto& f : files) load.patients.push_back(load_patient_file(f, probe_audio, &load.warnings));
  return load;
}

/// Loads a 2016-style directory: a RECORDS index with one relative recording
/// path per line (".wav" appended when the line has no extension). Every
/// recording becomes an unlabeled single-recording patient at location Other,
/// identified by its relative path without extension.
inline DatasetLoad load_dataset_2016(const std::filesystem::path& dir, bool probe_audio = true) {
  const auto index = dir / "RECORDS";
  std::istringstream lines(detail::read_text(index));
  DatasetLoad load;
  std::string line;
  while (std::getline(lines, line)) {
    const auto entry = std::string(detail::trim(line));
    if (entry.empty() || entry.front() == '#') continue;
    std::filesystem::path rel(entry);
    if (!rel.has_extension()) rel += ".wav";
    RecordingRef r;
    r.location = Location::Other;
    r.audio_path = dir / rel;
    if (probe_audio) detail::fill_from_audio(r, load.warnings);
    PatientRecord p;
    p.patient_id = std::filesystem::path(entry).replace_extension().generic_string();
    p.sample_rate_declared = r.sample_rate;
    p.recordings.push_back(std::move(r));
    load.patients.push_back(std::move(p));
  }
  return load;
}

}  // namespace pcgssl
