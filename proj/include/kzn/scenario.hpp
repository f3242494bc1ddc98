#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kzn/boundary_data.hpp"
#include "kzn/diagnostics.hpp"
#include "kzn/domain.hpp"
#include "kzn/norms.hpp"
#include "kzn/params.hpp"
#include "kzn/trajectory.hpp"

namespace kzn {

/// Flat key = value description of one experiment.  Every field has a
/// textual key with the same name; parse_config and write_config round
/// trip exactly, and run summaries echo the full configuration so a run
/// can be reproduced from its artifacts.
struct ScenarioConfig {
  std::string name = "custom";

  // geometry
  std::string geometry = "interval";  // interval | rectangle | disk
  double interval_x0 = 0.0;
  double interval_length = 3.14159265358979323846;
  double rect_lx = 1.0;
  double rect_ly = 1.0;
  double disk_radius = 1.0;
  int cells = 200;
  int cells_y = 0;  // 0 means square cells on a rectangle

  // physics
  double c = 1.0;
  double b = 1.0;
  double k = 0.0;
  double rho0 = 1.0;

  // model: linear | kuznetsov | lift | vinf-analytic | eigen | deviation
  std::string model = "linear";

  // data family: zero | mode | multimode-random | boundary-bump |
  // boundary-expdecay | boundary-mismatch
  std::string data_family = "zero";
  double amplitude = 0.0;
  int mode = 1;
  int n_modes = 5;
  std::string u1_mode = "rate-matched";  // zero | rate-matched | factor
  double u1_factor = 0.0;
  double v0_amplitude = 0.0;
  double bump_t0 = 0.0;
  double bump_t1 = 1.0;
  double exp_rate = 1.0;
  unsigned long seed = 1234;

  // stepping
  std::string scheme = "newton";  // newton | semi-implicit
  double dt = 0.01;
  double t_end = 20.0;
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  double degeneracy_guard = 0.1;
  bool disable_nonlinearity = false;
  bool flip_transport_sign = false;
  bool strict = true;
  int store_stride = 1;

  // diagnostics
  double p = 2.0;
  double fit_t0 = -1.0;  // < 0 picks the final 60 % of the run
  double fit_t1 = -1.0;
  int max_derivative_order = 2;
  double compat_tol = -1.0;
  double tail_tolerance = 1e-5;
};

/// Exit codes shared by the scenario runner and the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitDegeneracy = 3,
  kExitNumericalFailure = 4,
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_file(const std::string& path);

/// Apply a single "key=value" override; throws std::invalid_argument for
/// unknown keys or malformed values.
void apply_override(ScenarioConfig& config, const std::string& assignment);

void write_config(const ScenarioConfig& config, std::ostream& out);

/// Deterministic summary record: insertion-ordered key/value lines, all
/// floating point values printed with 17 significant digits so repeated
/// runs compare bit for bit.
struct Summary {
  std::vector<std::pair<std::string, std::string>> entries;

  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, double value);
  void put(const std::string& key, int value);
  void put(const std::string& key, bool value);
  const std::string* find(const std::string& key) const;
  double get_double(const std::string& key) const;  ///< NaN when absent
};

void write_summary(const Summary& summary, std::ostream& out);

struct RunResult {
  int exit_code = kExitOk;
  Summary summary;
  std::string series_path;
  std::string summary_path;
  std::string config_path;
};

/// Execute a scenario and write its artifacts (series table, summary,
/// config echo) under out_dir.  Progress and errors go to `log`; all
/// failures are converted to the exit-code contract.
RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir,
                       std::ostream& log);

/// Named preset registry covering the verification scenarios.
std::vector<std::string> preset_names();
bool has_preset(const std::string& name);
ScenarioConfig preset(const std::string& name);
std::string preset_description(const std::string& name);

/// Grid and data assembly shared by the runner, the study drivers and the
/// tests.
Domain make_domain(const ScenarioConfig& config);

struct ScenarioData {
  BoundaryData g;
  Field u0;
  Field u1;
  VectorField v0;
};

ScenarioData build_data(const ScenarioConfig& config, const Domain& domain);

/// Forcing for a manufactured run with target u*(t,x) = e^{-t} sin(x) on
/// an interval: f = u*_tt - c^2 Lap u* - b Lap u*_t, evaluated by
/// high-order finite differencing of the closed-form u* so the forcing is
/// derived rather than transcribed.
Field manufactured_forcing(const PhysicalParams& params, const Domain& domain,
                           double t);
double manufactured_solution(double t, double x);

/// Time-step the scenario's trajectory model (linear or kuznetsov).
Trajectory solve_scenario_trajectory(const ScenarioConfig& config,
                                     const Domain& domain, const ScenarioData& data);

/// Pinned refinement studies against the modal / manufactured /
/// eigenvalue oracles; level l halves dt (or h) l times from the
/// documented base resolution.
ConvergenceStudy modal_dt_study(int levels = 3);
ConvergenceStudy modal_h_study(int levels = 3);
ConvergenceStudy manufactured_dt_study(int levels = 3);
ConvergenceStudy manufactured_h_study(int levels = 3);
ConvergenceStudy eigenvalue_study(const std::string& geometry, int levels = 2);

/// Continuous-dependence study on the configured scenario; direction is
/// one of u0, u1, v0, g or all.
PerturbationStudy run_perturbation(const ScenarioConfig& config,
                                   const std::string& direction,
                                   std::span<const double> deltas);

}  // namespace kzn
