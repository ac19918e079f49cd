#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/classify/aggregate.hpp"
#include "pcgssl/classify/head.hpp"

namespace pcgssl::classify {

struct TaskHead {
  nn::ParameterSet<float> params;
  HeadConfig config;
};

struct RecordingResult {
  std::size_t recording_index = 0;
  Location location = Location::Other;
  std::size_t windows = 0;
  std::optional<RecordingPrediction> murmur;
  std::optional<RecordingPrediction> outcome;
};

struct PatientPrediction {
  std::string patient_id;
  Murmur murmur = Murmur::Absent;
  Outcome outcome = Outcome::Normal;
  std::vector<RecordingResult> recordings;
  std::optional<std::string> warning;
};

/// Window probabilities -> recording means -> patient labels. Recordings
/// without windows are left out; a patient with no windows at all is
/// predicted Absent / Normal with a warning.
inline std::vector<PatientPrediction> predict_patients(std::span<const PatientRecord> patients, std::span<const Window> windows,
                                                       nn::ParameterSet<float>& backbone, const nn::BackboneConfig& bcfg,
                                                       TaskHead& murmur_head, TaskHead& outcome_head) {
  std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> by_recording;
  for (std::size_t i = 0; i < windows.size(); ++i) by_recording[{windows[i].patient_id, windows[i].recording_index}].push_back(i);

  std::vector<std::vector<double>> murmur_probs, outcome_probs;
  if (!windows.empty()) {
    const auto features = nn::embed_windows(windows, backbone, bcfg);
    murmur_probs = predict_probs(features, murmur_head.params, murmur_head.config);
    outcome_probs = predict_probs(features, outcome_head.params, outcome_head.config);
  }

  std::vector<PatientPrediction> out;
  out.reserve(patients.size());
  for (const auto& p : patients) {
    PatientPrediction pred;
    pred.patient_id = p.patient_id;
    std::vector<Murmur> murmurs;
    std::vector<Outcome> outcomes;
    for (std::size_t r = 0; r < p.recordings.size(); ++r) {
      RecordingResult rec{r, p.recordings[r].location, 0, {}, {}};
      const auto it = by_recording.find({p.patient_id, r});
      if (it != by_recording.end()) {
        std::vector<std::vector<double>> mp, op;
        for (auto i : it->second) {
          mp.push_back(murmur_probs[i]);
          op.push_back(outcome_probs[i]);
        }
        rec.windows = it->second.size();
        rec.murmur = aggregate_recording(mp);
        rec.outcome = aggregate_recording(op);
        murmurs.push_back(static_cast<Murmur>(rec.murmur->label));
        outcomes.push_back(static_cast<Outcome>(rec.outcome->label));
      }
      pred.recordings.push_back(std::move(rec));
    }
    if (murmurs.empty()) {
      pred.warning = "patient " + p.patient_id + " has no recording long enough to window; predicting Absent/Normal";
    } else {
      pred.murmur = aggregate_patient_murmur(murmurs);
      pred.outcome = aggregate_patient_outcome(outcomes);
    }
    out.push_back(std::move(pred));
  }
  return out;
}

}  // namespace pcgssl::classify
