#include "kzn/trajectory.hpp"

#include "kzn/norms.hpp"

namespace kzn {

SampleDiagnostics compute_sample_diagnostics(const State& state, const Domain& domain,
                                             double p, double k,
                                             int newton_iterations) {
  SampleDiagnostics s;
  s.t = state.t;
  s.u_lp = discrete_norm(state.u, domain, {p, 0});
  s.u_w1p = discrete_norm(state.u, domain, {p, 1});
  s.u_w2p = discrete_norm(state.u, domain, {p, 2});
  s.ut_lp = discrete_norm(state.ut, domain, {p, 0});
  s.ut_w1p = discrete_norm(state.ut, domain, {p, 1});
  s.ut_w2p = discrete_norm(state.ut, domain, {p, 2});
  s.v_w1p = discrete_norm(state.v, domain, {p, 1});
  s.degeneracy_min = (1.0 - 2.0 * k * state.u.array()).minCoeff();
  s.newton_iterations = newton_iterations;
  return s;
}

const char* to_string(RunTermination t) {
  switch (t) {
    case RunTermination::Completed: return "completed";
    case RunTermination::Degeneracy: return "degeneracy";
    case RunTermination::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.t);
  return t;
}

}  // namespace kzn
