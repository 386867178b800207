#pragma once

#include <optional>
#include <string>
#include <vector>

#include "damplqr/linalg.hpp"
#include "damplqr/model_based.hpp"

namespace damplqr {

// One per-iteration record. Phase 1 rows log the damping-coefficient trials
// (accepted marks the final one), phase 2 rows pair each new gain with the
// damping sum that includes its step, phase 3 rows log the refinement.
struct TraceRow {
  int phase = 0;
  int index = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  Matrix gain;
  double delta_norm = 0.0;
  double residual = 0.0;
  bool accepted = true;
  // Diagnostic only: filled by annotate_spectral_radii when the true model
  // is supplied; the synthesis itself never computes it.
  std::optional<double> spectral_radius;
};

struct SynthesisReport {
  std::string algorithm;  // "pi" or "qlearn"
  double beta_tilde = 0.0;
  std::vector<double> alphas;
  double gamma_final = 0.0;
  Matrix stabilizing_gain;   // phase-2 output
  Matrix K;                  // final gain
  SymMatrix P;               // final value matrix
  std::optional<SymMatrix> H;  // final Q-function matrix (qlearn only)
  int phase1_rejections = 0;
  int phase2_steps = 0;
  int phase3_steps = 0;
  double final_delta = 0.0;
  double final_residual = 0.0;
  std::vector<TraceRow> trace;
  bool diagnostics = false;  // true once spectral radii were annotated
};

// Fills TraceRow::spectral_radius (and the report flag) from the true model.
// Kept separate from the synthesis so the model-free path stays model-free.
void annotate_spectral_radii(SynthesisReport& report, const SystemModel& sys);

// Plot-ready CSV with one line per trace row; parses back losslessly.
std::string trace_to_csv(const SynthesisReport& report);

}  // namespace damplqr
