#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/dataio/records.hpp"
#include "pcgssl/dsp/window.hpp"

namespace pcgssl {

enum class Task { Murmur, Outcome };

inline std::string_view to_string(Task t) { return t == Task::Murmur ? "murmur" : "outcome"; }

inline Task parse_task(std::string_view s) {
  if (s == "murmur") return Task::Murmur;
  if (s == "outcome") return Task::Outcome;
  fail(Errc::InvalidArgument, "unknown task '" + std::string(s) + "'");
}

/// Class index 0 is the clinically severe class (Present / Abnormal); ties in
/// aggregation resolve toward it.
struct TaskSpec {
  Task task = Task::Murmur;
  std::vector<std::string> classes;

  static TaskSpec murmur() { return {Task::Murmur, {"Present", "Unknown", "Absent"}}; }
  static TaskSpec outcome() { return {Task::Outcome, {"Abnormal", "Normal"}}; }
  static TaskSpec of(Task t) { return t == Task::Murmur ? murmur() : outcome(); }

  std::size_t num_classes() const { return classes.size(); }
  std::string_view name() const { return to_string(task); }

  /// The patient-level label as a class index.
  int patient_label(const PatientRecord& p) const {
    if (task == Task::Murmur) {
      require(p.murmur.has_value(), Errc::MissingLabel, "patient " + p.patient_id + " has no murmur label");
      return static_cast<int>(*p.murmur);
    }
    require(p.outcome.has_value(), Errc::MissingLabel, "patient " + p.patient_id + " has no outcome label");
    return static_cast<int>(*p.outcome);
  }
};

/// Attaches the task label to every window of `patient`. For murmur, a
/// Present patient's windows are Present only at murmur locations and Absent
/// elsewhere; Unknown and Absent propagate unchanged.
inline void propagate_labels(const PatientRecord& patient, std::span<Window> windows, const TaskSpec& task) {
  const int label = task.patient_label(patient);
  for (auto& w : windows) {
    require(w.patient_id == patient.patient_id, Errc::InvalidArgument,
            "window of patient " + w.patient_id + " given to patient " + patient.patient_id);
    if (task.task == Task::Murmur && *patient.murmur == Murmur::Present) {
      w.label = static_cast<int>(patient.murmur_locations.count(w.location) ? Murmur::Present : Murmur::Absent);
    } else {
      w.label = label;
    }
  }
}

}  // namespace pcgssl
