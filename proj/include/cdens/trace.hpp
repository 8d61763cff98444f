#pragma once

#include <string>
#include <vector>

namespace cdens {

//! Per-candidate record of a Goldenshluger-Lepski selection.
struct TraceRecord {
  std::string id;     // candidate identifier, e.g. "h=(0.0771,0.146)" or "m=(3,5)"
  double sigma = 0;   // penalty term (sigma or pen)
  double a_value = 0; // A(candidate)
  double objective = 0; // a_value + sigma
};

//! Full selection trace: every candidate with its penalty, A value and
//! objective, plus the chosen candidate. chosen always minimizes objective
//! among records under the selector's documented tie-break.
struct SelectionTrace {
  std::vector<TraceRecord> records;
  std::string chosen;
};

} // namespace cdens
