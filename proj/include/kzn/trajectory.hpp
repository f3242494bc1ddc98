#pragma once

#include <string>
#include <vector>

#include "kzn/norms.hpp"

namespace kzn {

/// Solver state at one instant: the acoustic potential u, its time
/// derivative and the velocity field, all on the full node set.
struct State {
  double t = 0.0;
  Field u;
  Field ut;
  VectorField v;
};

/// Per-sample scalar diagnostics recorded while time stepping.  Norms use
/// the run's exponent p; the W^2 column for u_t stands in for the
/// fractional-order norm appearing in the continuous theory, which for
/// p = 2 reduces to one derivative order and is bounded by this one.
struct SampleDiagnostics {
  double t = 0.0;
  double u_lp = 0.0;
  double u_w1p = 0.0;
  double u_w2p = 0.0;
  double ut_lp = 0.0;
  double ut_w1p = 0.0;
  double ut_w2p = 0.0;
  double v_w1p = 0.0;  ///< placeholder until v_inf is known, then ||v - v_inf||
  double degeneracy_min = 1.0;
  int newton_iterations = 0;
};

enum class RunTermination { Completed, Degeneracy, NumericalFailure };

const char* to_string(RunTermination t);

/// Norm columns and degeneracy margin for one state.
SampleDiagnostics compute_sample_diagnostics(const State& state, const Domain& domain,
                                             double p, double k,
                                             int newton_iterations);

/// Time-stepped solution samples plus diagnostics.  states and samples
/// always have equal length and share time stamps; stride > 1 keeps every
/// stride-th step (plus the final one).
struct Trajectory {
  std::vector<State> states;
  std::vector<SampleDiagnostics> samples;
  double dt = 0.0;          ///< stepper step size
  double sample_dt = 0.0;   ///< spacing between stored samples
  RunTermination termination = RunTermination::Completed;
  std::string termination_detail;

  std::size_t size() const { return states.size(); }
  bool completed() const { return termination == RunTermination::Completed; }

  std::vector<double> times() const;
};

}  // namespace kzn
