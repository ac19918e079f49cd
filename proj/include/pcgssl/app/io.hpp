#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcgssl/classify/predict.hpp"
#include "pcgssl/core/error.hpp"
#include "pcgssl/eval/metrics.hpp"

namespace pcgssl::app {

/// Replaces `path` with `text` through a temporary file and rename.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(Errc::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_number(double v) {
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

/// `patient_id<TAB>murmur<TAB>outcome`, one line per patient.
inline std::string format_predictions(const std::vector<classify::PatientPrediction>& preds) {
  std::ostringstream out;
  for (const auto& p : preds) out << p.patient_id << '\t' << to_string(p.murmur) << '\t' << to_string(p.outcome) << '\n';
  return out.str();
}

using LabelTable = std::map<std::string, std::pair<Murmur, Outcome>>;

inline LabelTable read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open predictions " + path.string());
  LabelTable out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, m, o;
    if (!std::getline(fields, id, '\t') || !std::getline(fields, m, '\t') || !std::getline(fields, o, '\t')) {
      fail(Errc::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": expected 'id<TAB>murmur<TAB>outcome'");
    }
    const auto murmur = parse_murmur(m);
    const auto outcome = parse_outcome(o);
    if (!murmur || !outcome) fail(Errc::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": unknown label");
    if (!out.emplace(id, std::pair{*murmur, *outcome}).second) {
      fail(Errc::InvalidArgument, path.string() + ": patient " + id + " predicted twice");
    }
  }
  return out;
}

/// Per-recording mean probabilities for both tasks. Recordings without
/// windows have empty probability fields.
inline std::string format_recording_probs(const std::vector<classify::PatientPrediction>& preds) {
  std::ostringstream out;
  out << "patient_id,recording_index,location,windows,murmur,p_present,p_unknown,p_absent,outcome,p_abnormal,p_normal\n";
  for (const auto& p : preds) {
    for (const auto& r : p.recordings) {
      out << p.patient_id << ',' << r.recording_index << ',' << to_string(r.location) << ',' << r.windows << ',';
      if (r.murmur) {
        out << to_string(static_cast<Murmur>(r.murmur->label));
        for (double v : r.murmur->probabilities) out << ',' << format_number(v);
        out << ',' << to_string(static_cast<Outcome>(r.outcome->label));
        for (double v : r.outcome->probabilities) out << ',' << format_number(v);
      } else {
        out << ",,,,,,";
      }
      out << '\n';
    }
  }
  return out.str();
}

inline std::string format_metrics(const std::vector<eval::MetricReport>& reports) {
  std::ostringstream out;
  out << "task,accuracy,macro_f1,weighted_accuracy,cost\n";
  for (const auto& r : reports) {
    out << r.task << ',' << format_number(r.accuracy) << ',' << format_number(r.macro_f1) << ','
        << format_number(r.weighted_accuracy) << ',';
    if (r.cost) out << format_number(*r.cost);
    out << '\n';
  }
  return out.str();
}

}  // namespace pcgssl::app
