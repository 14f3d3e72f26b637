#pragma once

// Trajectory driver: repeated steps with diagnostics recorded on a fixed
// step cadence.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lcflow/diagnostics.hpp"
#include "lcflow/flow.hpp"

namespace lcflow {

/// Called after every record with the recorded state and its diagnostics.
using Observer = std::function<void(const FlowState&, const DiagnosticsRecord&)>;

struct Trajectory {
  FlowState initial;
  FlowState final_state;
  std::vector<DiagnosticsRecord> records;
  double dt = 0.0;
  bool converged = false;
  bool aborted = false;
  std::string message;
};

/// Runs the flow from `state` until K_osc < kosc_stop, t reaches t_end, or
/// max_steps is hit. The input curve is resampled to config.n first if its
/// node count differs. A record is taken at step 0, every record_every steps,
/// and at the final state.
inline Trajectory evolve(FlowState state, const FlowConfig& config, const std::vector<Observer>& observers = {}) {
  config.validate();
  if (state.curve.size() != config.n) {
    const double L0 = state.L0;
    state.curve = resample_by_arclength(state.curve, config.n);
    state.L0 = L0;
  }
  const Stepper stepper(config, config.n, state.L0);
  Trajectory out{state, state, {}, stepper.dt(), false, false, {}};
  const ClosedCurve& initial = out.initial.curve;

  FlowState prev = state;
  auto take = [&](const FlowState& s) {
    DiagnosticsRecord r = record(s, initial, config.h_mode);
    if (!out.records.empty()) {
      const auto res = identity_residuals(prev, s, config.h_mode);
      r.r_iii = res.r_iii;
      r.r_iv = res.r_iv;
      r.r_v = res.r_v;
      r.r_vi = res.r_vi;
      r.r_vi_full = res.r_vi_full;
      for (std::size_t i = 0; i < s.curve.size(); ++i)
        r.interval_disp = std::max(r.interval_disp, norm(s.curve[i] - prev.curve[i]));
    }
    out.records.push_back(r);
    prev = s;
    for (const auto& obs : observers) obs(s, r);
    return r.K_osc;
  };

  double K = take(state);
  // Stop once the next step would overshoot t_end by more than half a step.
  const double t_stop = config.t_end - 0.5 * stepper.dt();
  try {
    while (true) {
      if (K < config.kosc_stop) {
        out.converged = true;
        break;
      }
      if (state.t > t_stop) {
        out.message = "t_end reached before K_osc fell below kosc_stop";
        break;
      }
      if (config.max_steps > 0 && state.step >= config.max_steps) {
        out.message = "max_steps reached before K_osc fell below kosc_stop";
        break;
      }
      state = stepper.advance(state);
      if (state.step % config.record_every == 0) K = take(state);
    }
  } catch (const FlowError& e) {
    out.aborted = true;
    out.message = e.what();
    state = e.last_valid();
  }
  if (out.records.back().step != state.step) take(state);
  if (out.converged) out.message = "converged";
  out.final_state = std::move(state);
  return out;
}

}  // namespace lcflow
