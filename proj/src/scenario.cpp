#include "kzn/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kzn/errors.hpp"
#include "kzn/linear_solver.hpp"
#include "kzn/nonlinear_solver.hpp"
#include "kzn/operators.hpp"
#include "kzn/version.hpp"

namespace kzn {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
  }
}

unsigned long parse_ulong(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long x = std::stoul(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': bad boolean '" + v + "'");
}

// One registry drives parsing, echoing and overrides so the three can
// never drift apart.
struct KeyHandler {
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

const std::vector<std::pair<std::string, KeyHandler>>& key_registry() {
  static const std::vector<std::pair<std::string, KeyHandler>> reg = [] {
    std::vector<std::pair<std::string, KeyHandler>> r;
    auto add_str = [&r](const std::string& key, std::string ScenarioConfig::*f) {
      r.push_back({key,
                   {[f](ScenarioConfig& c, const std::string& v) { c.*f = v; },
                    [f](const ScenarioConfig& c) { return c.*f; }}});
    };
    auto add_dbl = [&r](const std::string& key, double ScenarioConfig::*f) {
      r.push_back({key,
                   {[key, f](ScenarioConfig& c, const std::string& v) {
                      c.*f = parse_double(key, v);
                    },
                    [f](const ScenarioConfig& c) { return fmt(c.*f); }}});
    };
    auto add_int = [&r](const std::string& key, int ScenarioConfig::*f) {
      r.push_back({key,
                   {[key, f](ScenarioConfig& c, const std::string& v) {
                      c.*f = parse_int(key, v);
                    },
                    [f](const ScenarioConfig& c) { return std::to_string(c.*f); }}});
    };
    auto add_bool = [&r](const std::string& key, bool ScenarioConfig::*f) {
      r.push_back({key,
                   {[key, f](ScenarioConfig& c, const std::string& v) {
                      c.*f = parse_bool(key, v);
                    },
                    [f](const ScenarioConfig& c) {
                      return std::string(c.*f ? "true" : "false");
                    }}});
    };

    add_str("name", &ScenarioConfig::name);
    add_str("geometry", &ScenarioConfig::geometry);
    add_dbl("interval_x0", &ScenarioConfig::interval_x0);
    add_dbl("interval_length", &ScenarioConfig::interval_length);
    add_dbl("rect_lx", &ScenarioConfig::rect_lx);
    add_dbl("rect_ly", &ScenarioConfig::rect_ly);
    add_dbl("disk_radius", &ScenarioConfig::disk_radius);
    add_int("cells", &ScenarioConfig::cells);
    add_int("cells_y", &ScenarioConfig::cells_y);
    add_dbl("c", &ScenarioConfig::c);
    add_dbl("b", &ScenarioConfig::b);
    add_dbl("k", &ScenarioConfig::k);
    add_dbl("rho0", &ScenarioConfig::rho0);
    add_str("model", &ScenarioConfig::model);
    add_str("data_family", &ScenarioConfig::data_family);
    add_dbl("amplitude", &ScenarioConfig::amplitude);
    add_int("mode", &ScenarioConfig::mode);
    add_int("n_modes", &ScenarioConfig::n_modes);
    add_str("u1_mode", &ScenarioConfig::u1_mode);
    add_dbl("u1_factor", &ScenarioConfig::u1_factor);
    add_dbl("v0_amplitude", &ScenarioConfig::v0_amplitude);
    add_dbl("bump_t0", &ScenarioConfig::bump_t0);
    add_dbl("bump_t1", &ScenarioConfig::bump_t1);
    add_dbl("exp_rate", &ScenarioConfig::exp_rate);
    r.push_back({"seed",
                 {[](ScenarioConfig& c, const std::string& v) {
                    c.seed = parse_ulong("seed", v);
                  },
                  [](const ScenarioConfig& c) { return std::to_string(c.seed); }}});
    add_str("scheme", &ScenarioConfig::scheme);
    add_dbl("dt", &ScenarioConfig::dt);
    add_dbl("t_end", &ScenarioConfig::t_end);
    add_dbl("newton_tol", &ScenarioConfig::newton_tol);
    add_int("newton_max_iter", &ScenarioConfig::newton_max_iter);
    add_dbl("degeneracy_guard", &ScenarioConfig::degeneracy_guard);
    add_bool("disable_nonlinearity", &ScenarioConfig::disable_nonlinearity);
    add_bool("flip_transport_sign", &ScenarioConfig::flip_transport_sign);
    add_bool("strict", &ScenarioConfig::strict);
    add_int("store_stride", &ScenarioConfig::store_stride);
    add_dbl("p", &ScenarioConfig::p);
    add_dbl("fit_t0", &ScenarioConfig::fit_t0);
    add_dbl("fit_t1", &ScenarioConfig::fit_t1);
    add_int("max_derivative_order", &ScenarioConfig::max_derivative_order);
    add_dbl("compat_tol", &ScenarioConfig::compat_tol);
    add_dbl("tail_tolerance", &ScenarioConfig::tail_tolerance);
    return r;
  }();
  return reg;
}

const KeyHandler* find_key(const std::string& key) {
  for (const auto& [k, h] : key_registry())
    if (k == key) return &h;
  return nullptr;
}

// Smooth bump supported on (0,1) with peak value 1 at s = 1/2.
double bump01(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (4.0 * s * (1.0 - s)));
}

double bump01_rate(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  double d = 4.0 * s * (1.0 - s);
  return bump01(s) * 4.0 * (1.0 - 2.0 * s) / (d * d);
}

}  // namespace

void Summary::put(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}
void Summary::put(const std::string& key, double value) { put(key, fmt(value)); }
void Summary::put(const std::string& key, int value) {
  put(key, std::to_string(value));
}
void Summary::put(const std::string& key, bool value) {
  put(key, std::string(value ? "true" : "false"));
}

const std::string* Summary::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

double Summary::get_double(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void write_summary(const Summary& summary, std::ostream& out) {
  for (const auto& [k, v] : summary.entries) out << k << " = " << v << "\n";
}

void apply_override(ScenarioConfig& config, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("expected key=value, got '" + assignment + "'");
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  const KeyHandler* h = find_key(key);
  if (!h) throw std::invalid_argument("unknown config key '" + key + "'");
  h->set(config, value);
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(config, line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return config;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(const ScenarioConfig& config, std::ostream& out) {
  for (const auto& [key, h] : key_registry())
    out << key << " = " << h.get(config) << "\n";
}

Domain make_domain(const ScenarioConfig& config) {
  if (config.geometry == "interval")
    return Domain::make_interval(config.interval_x0, config.interval_length,
                                 config.cells);
  if (config.geometry == "rectangle")
    return Domain::make_rectangle(config.rect_lx, config.rect_ly, config.cells,
                                  config.cells_y > 0 ? config.cells_y : config.cells);
  if (config.geometry == "disk")
    return Domain::make_disk(config.disk_radius, config.cells);
  throw std::invalid_argument("unknown geometry '" + config.geometry + "'");
}

namespace {

// Product of sines with mode index m on every axis; the principal shape
// for m = 1.  Interval and rectangle only.
struct ModeShape {
  const ScenarioConfig& config;
  double lambda = 0.0;

  ModeShape(const ScenarioConfig& cfg, const Domain& domain, int m) : config(cfg) {
    if (domain.geometry().kind == GeometryKind::Disk)
      throw std::invalid_argument(
          "mode data families are defined on interval and rectangle grids");
    if (domain.dim() == 1) {
      double f = m * kPi / config.interval_length;
      lambda = f * f;
    } else {
      double fx = m * kPi / config.rect_lx;
      double fy = m * kPi / config.rect_ly;
      lambda = fx * fx + fy * fy;
    }
    mode = m;
  }

  int mode = 1;

  double operator()(const std::array<double, 2>& x) const {
    if (config.geometry == "interval")
      return std::sin(mode * kPi * (x[0] - config.interval_x0) /
                      config.interval_length);
    return std::sin(mode * kPi * x[0] / config.rect_lx) *
           std::sin(mode * kPi * x[1] / config.rect_ly);
  }
};

Field sample_shape(const ModeShape& shape, const Domain& domain) {
  Field f(domain.n_nodes());
  for (int i = 0; i < domain.n_nodes(); ++i) f[i] = shape(domain.coord(i));
  return f;
}

double u1_coefficient(const ScenarioConfig& config, double lambda,
                      const PhysicalParams& params) {
  if (config.u1_mode == "zero") return 0.0;
  if (config.u1_mode == "factor") return config.u1_factor;
  if (config.u1_mode == "rate-matched") return -modal_slow_rate(lambda, params);
  throw std::invalid_argument("unknown u1_mode '" + config.u1_mode + "'");
}

PhysicalParams params_of(const ScenarioConfig& config) {
  PhysicalParams p;
  p.c = config.c;
  p.b = config.b;
  p.k = config.k;
  p.rho0 = config.rho0;
  return p;
}

}  // namespace

ScenarioData build_data(const ScenarioConfig& config, const Domain& domain) {
  ScenarioData data;
  data.g = BoundaryData::zero();
  data.u0 = Field::Zero(domain.n_nodes());
  data.u1 = Field::Zero(domain.n_nodes());
  data.v0 = VectorField::Zero(domain.n_nodes(), domain.dim());
  const PhysicalParams params = params_of(config);
  const double a = config.amplitude;

  if (config.data_family == "zero") return data;

  if (config.data_family == "mode") {
    ModeShape shape(config, domain, config.mode);
    Field s = sample_shape(shape, domain);
    data.u0 = a * s;
    data.u1 = a * u1_coefficient(config, shape.lambda, params) * s;
    if (config.v0_amplitude != 0.0) data.v0.col(0) = config.v0_amplitude * s;
    return data;
  }

  if (config.data_family == "multimode-random") {
    if (config.n_modes < 1)
      throw std::invalid_argument("n_modes must be positive");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> amp(0.2, 1.0);
    for (int m = 1; m <= config.n_modes; ++m) {
      ModeShape shape(config, domain, m);
      Field s = sample_shape(shape, domain);
      double am = a * amp(rng);
      data.u0 += am * s;
      data.u1 += am * u1_coefficient(config, shape.lambda, params) * s;
    }
    return data;
  }

  if (config.data_family == "boundary-bump") {
    // g = A bump((t - t0)/(t1 - t0)) psi(x); u0 = u1 = 0 stays compatible
    // because the bump and its rate vanish at t = 0.
    const double t0 = config.bump_t0, t1 = config.bump_t1;
    if (!(t1 > t0)) throw std::invalid_argument("bump support must be nonempty");
    const double len = t1 - t0;
    const ScenarioConfig cfg = config;
    auto psi = [cfg](const std::array<double, 2>& x) -> double {
      if (cfg.geometry == "interval")
        return (cfg.interval_x0 + cfg.interval_length - x[0]) / cfg.interval_length;
      if (cfg.geometry == "rectangle")
        return x[0] <= 1e-12 ? std::sin(kPi * x[1] / cfg.rect_ly) : 0.0;
      return 0.5 * (1.0 + x[0] / cfg.disk_radius);
    };
    data.g.value_fn = [a, t0, len, psi](double t, const std::array<double, 2>& x) {
      return a * bump01((t - t0) / len) * psi(x);
    };
    data.g.rate_fn = [a, t0, len, psi](double t, const std::array<double, 2>& x) {
      return a * bump01_rate((t - t0) / len) / len * psi(x);
    };
    data.g.support_end = t1;
    return data;
  }

  if (config.data_family == "boundary-expdecay") {
    // g = A e^{-rt} psi(x) with u0, u1 matched from the same closed form,
    // so both compatibility orders hold exactly at the nodes.
    const double rate = config.exp_rate;
    const ScenarioConfig cfg = config;
    auto psi = [cfg](const std::array<double, 2>& x) -> double {
      if (cfg.geometry == "interval")
        return std::cos(0.5 * kPi * (x[0] - cfg.interval_x0) / cfg.interval_length);
      if (cfg.geometry == "rectangle")
        return std::cos(0.5 * kPi * x[0] / cfg.rect_lx);
      return 0.5 * (1.0 + x[0] / cfg.disk_radius);
    };
    data.g.value_fn = [a, rate, psi](double t, const std::array<double, 2>& x) {
      return a * std::exp(-rate * t) * psi(x);
    };
    data.g.rate_fn = [a, rate, psi](double t, const std::array<double, 2>& x) {
      return -rate * a * std::exp(-rate * t) * psi(x);
    };
    for (int i = 0; i < domain.n_nodes(); ++i) {
      double s = psi(domain.coord(i));
      data.u0[i] = a * s;
      data.u1[i] = -rate * a * s;
    }
    return data;
  }

  if (config.data_family == "boundary-mismatch") {
    // Deliberately incompatible: constant boundary value against zero u0.
    data.g.value_fn = [a](double, const std::array<double, 2>&) { return a; };
    data.g.rate_fn = [](double, const std::array<double, 2>&) { return 0.0; };
    return data;
  }

  throw std::invalid_argument("unknown data_family '" + config.data_family + "'");
}

double manufactured_solution(double t, double x) {
  return std::exp(-t) * std::sin(x);
}

namespace {

// Fourth-order central stencils; spacing small enough that the stencil
// error sits far below the time-stepping error this forcing feeds.
constexpr double kMfdStep = 1e-2;

double stencil_dtt(const std::function<double(double)>& f, double t) {
  const double d = kMfdStep;
  return (-f(t - 2 * d) + 16 * f(t - d) - 30 * f(t) + 16 * f(t + d) - f(t + 2 * d)) /
         (12 * d * d);
}

double stencil_dt(const std::function<double(double)>& f, double t) {
  const double d = kMfdStep;
  return (f(t - 2 * d) - 8 * f(t - d) + 8 * f(t + d) - f(t + 2 * d)) / (12 * d);
}

}  // namespace

Field manufactured_forcing(const PhysicalParams& params, const Domain& domain,
                           double t) {
  if (domain.dim() != 1)
    throw std::invalid_argument("manufactured runs are defined on the interval");
  Field out(domain.n_nodes());
  const double c2 = params.c * params.c;
  for (int i = 0; i < domain.n_nodes(); ++i) {
    const double x = domain.coord(i)[0];
    auto in_t = [x](double tt) { return manufactured_solution(tt, x); };
    auto in_x = [t](double xx) { return manufactured_solution(t, xx); };
    auto ut_of_x = [t](double xx) {
      auto g = [xx](double tt) { return manufactured_solution(tt, xx); };
      return stencil_dt(g, t);
    };
    double utt = stencil_dtt(in_t, t);
    double u_xx = stencil_dtt(in_x, x);
    double ut_xx = stencil_dtt(ut_of_x, x);
    out[i] = utt - c2 * u_xx - params.b * ut_xx;
  }
  return out;
}

Trajectory solve_scenario_trajectory(const ScenarioConfig& config,
                                     const Domain& domain, const ScenarioData& data) {
  const PhysicalParams params = params_of(config);
  if (config.model == "linear") {
    LinearProblem problem;
    problem.params = params;
    problem.domain = &domain;
    problem.g = data.g;
    problem.u0 = data.u0;
    problem.u1 = data.u1;
    problem.v0 = data.v0;
    problem.dt = config.dt;
    problem.t_end = config.t_end;
    problem.p = config.p;
    problem.strict = config.strict;
    problem.compat_tol = config.compat_tol;
    problem.store_stride = config.store_stride;
    return solve_linear(problem);
  }
  if (config.model == "kuznetsov") {
    KuznetsovProblem problem;
    problem.params = params;
    problem.domain = &domain;
    problem.g = data.g;
    problem.u0 = data.u0;
    problem.u1 = data.u1;
    problem.v0 = data.v0;
    problem.dt = config.dt;
    problem.t_end = config.t_end;
    problem.p = config.p;
    problem.strict = config.strict;
    problem.compat_tol = config.compat_tol;

    NonlinearConfig nl;
    if (config.scheme == "newton")
      nl.scheme = NonlinearScheme::Newton;
    else if (config.scheme == "semi-implicit")
      nl.scheme = NonlinearScheme::SemiImplicit;
    else
      throw std::invalid_argument("unknown scheme '" + config.scheme + "'");
    nl.newton_tol = config.newton_tol;
    nl.newton_max_iter = config.newton_max_iter;
    nl.degeneracy_guard = config.degeneracy_guard;
    nl.disable_nonlinearity = config.disable_nonlinearity;
    nl.flip_transport_sign = config.flip_transport_sign;
    nl.store_stride = config.store_stride;
    return run_kuznetsov(problem, nl);
  }
  throw std::invalid_argument("model '" + config.model +
                              "' does not produce a trajectory");
}

namespace {

void put_fit(Summary& summary, const std::string& prefix, const RateFit& fit,
             bool attempted) {
  if (!attempted) {
    summary.put(prefix, std::string("nan"));
    summary.put(prefix + "_valid", false);
    return;
  }
  summary.put(prefix, fit.rate);
  summary.put(prefix + "_valid", fit.valid);
}

RateFit try_fit(const std::vector<double>& t, const std::vector<double>& y,
                const FitWindow& w, bool* ok) {
  try {
    RateFit f = fit_decay_rate_envelope(t, y, w);
    *ok = true;
    return f;
  } catch (const std::invalid_argument&) {
    *ok = false;
    return RateFit{};
  }
}

void write_series_file(const std::string& path, const Trajectory& traj,
                       const std::vector<double>& v_dist) {
  std::ofstream out(path);
  out << "t\tu_lp\tu_w1p\tu_w2p\tut_lp\tut_w1p\tut_w2p\tv_minus_vinf_w1p\t"
         "degeneracy_min\tnewton_iterations\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const SampleDiagnostics& s = traj.samples[i];
    out << fmt(s.t) << '\t' << fmt(s.u_lp) << '\t' << fmt(s.u_w1p) << '\t'
        << fmt(s.u_w2p) << '\t' << fmt(s.ut_lp) << '\t' << fmt(s.ut_w1p) << '\t'
        << fmt(s.ut_w2p) << '\t' << fmt(v_dist[i]) << '\t' << fmt(s.degeneracy_min)
        << '\t' << s.newton_iterations << "\n";
  }
}

void echo_config_into(Summary& summary, const ScenarioConfig& config) {
  std::ostringstream ss;
  write_config(config, ss);
  std::istringstream in(ss.str());
  std::string line;
  while (std::getline(in, line)) {
    std::size_t eq = line.find('=');
    summary.put("config." + trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir,
                       std::ostream& log) {
  namespace fs = std::filesystem;
  RunResult result;
  fs::create_directories(out_dir);
  result.series_path = (fs::path(out_dir) / (config.name + ".series.tsv")).string();
  result.summary_path = (fs::path(out_dir) / (config.name + ".summary.txt")).string();
  result.config_path = (fs::path(out_dir) / (config.name + ".config.cfg")).string();

  Summary& summary = result.summary;
  summary.put("version", std::string(kVersion));
  summary.put("name", config.name);
  summary.put("model", config.model);

  auto finish = [&](int code) {
    summary.put("exit_code", code);
    echo_config_into(summary, config);
    std::ofstream cfg(result.config_path);
    write_config(config, cfg);
    std::ofstream sum(result.summary_path);
    write_summary(summary, sum);
    result.exit_code = code;
    return result;
  };

  try {
    const PhysicalParams params = params_of(config);
    params.validate();
    Domain domain = make_domain(config);
    const double lambda0 = analytic_lambda0(domain.geometry());
    const double w0 = omega0(params, lambda0);
    summary.put("lambda0_analytic", lambda0);
    summary.put("omega0", w0);

    ScenarioData data = build_data(config, domain);

    // Non-trajectory models first.
    if (config.model == "eigen") {
      ConvergenceStudy study = eigenvalue_study(config.geometry, 2);
      summary.put("eigen_error_coarse", study.errors[0]);
      summary.put("eigen_error_fine", study.errors[1]);
      summary.put("eigen_observed_order", study.observed_orders[0]);
      summary.put("eigen_status", std::string(study.status == StudyStatus::Ok
                                                  ? "ok"
                                                  : study.status == StudyStatus::Invalid
                                                        ? "invalid"
                                                        : "saturated"));
      std::ofstream series(result.series_path);
      series << "level\terror\n";
      for (std::size_t i = 0; i < study.errors.size(); ++i)
        series << i << '\t' << fmt(study.errors[i]) << "\n";
      return finish(kExitOk);
    }

    if (config.model == "lift") {
      LiftResult lift = lift_boundary(data.g, params, domain, config.dt,
                                      config.t_end, config.tail_tolerance,
                                      config.store_stride);
      Trajectory direct =
          solve_lifting_direct(data.g, params.b, domain,
                               lift.trajectory.states.front().u, config.dt,
                               config.t_end, config.store_stride);

      double sup_diff = 0.0, sup_ref = 0.0, identity_max = 0.0, trace_err = 0.0;
      for (std::size_t i = 0; i < lift.trajectory.size(); ++i) {
        const State& wl = lift.trajectory.states[i];
        const State& wd = direct.states[i];
        sup_diff = std::max(sup_diff, (wl.u - wd.u).cwiseAbs().maxCoeff());
        sup_ref = std::max(sup_ref, wl.u.cwiseAbs().maxCoeff());
        Field lap = laplacian(wl.u, domain, boundary_trace(wl.u, domain));
        Field residual = wl.ut - params.b * lap;
        for (int bn : domain.boundary_nodes()) residual[bn] = 0.0;
        identity_max =
            std::max(identity_max, discrete_norm(residual, domain, {2.0, 0}));
        Eigen::VectorXd gt = data.g.value(domain, wl.t);
        trace_err = std::max(
            trace_err,
            (boundary_trace(wl.u, domain) - gt).cwiseAbs().maxCoeff());
      }
      summary.put("lift_rel_sup_diff", sup_ref > 0.0 ? sup_diff / sup_ref : 0.0);
      summary.put("lift_identity_residual_max", identity_max);
      summary.put("lift_trace_error", trace_err);
      summary.put("lift_tail_bound", lift.tail_bound);

      std::vector<double> zeros(lift.trajectory.size(), 0.0);
      write_series_file(result.series_path, lift.trajectory, zeros);
      return finish(kExitOk);
    }

    if (config.model == "vinf-analytic") {
      // Injected analytic trajectory u = A e^{-t} sin(x) on the interval;
      // the exact limit is v_inf = -(A/rho0) cos(x) e_1.
      if (domain.dim() != 1)
        throw std::invalid_argument("vinf-analytic runs on the interval");
      const double amp = config.amplitude;
      Trajectory traj;
      traj.dt = config.dt;
      traj.sample_dt = config.dt;
      long long n = std::llround(config.t_end / config.dt);
      Field shape(domain.n_nodes());
      Field cosx(domain.n_nodes());
      for (int i = 0; i < domain.n_nodes(); ++i) {
        shape[i] = std::sin(domain.coord(i)[0]);
        cosx[i] = std::cos(domain.coord(i)[0]);
      }
      VectorField grad_shape = gradient(shape, domain);
      for (long long i = 0; i <= n; ++i) {
        State s;
        s.t = i * config.dt;
        double env = amp * std::exp(-s.t);
        s.u = env * shape;
        s.ut = -env * shape;
        s.v = -(amp * (1.0 - std::exp(-s.t)) / params.rho0) * grad_shape;
        traj.samples.push_back(compute_sample_diagnostics(s, domain, config.p,
                                                          params.k, 0));
        traj.states.push_back(std::move(s));
      }
      VelocityLimit limit = v_infinity(traj, params, domain);
      double max_err =
          (limit.v_inf.col(0) + (amp / params.rho0) * cosx).cwiseAbs().maxCoeff();
      summary.put("vinf_max_error", max_err);
      summary.put("vinf_tail_bound", limit.tail_bound);
      summary.put("vinf_fit_rate", limit.fitted_rate);

      std::vector<double> v_dist(traj.size());
      for (std::size_t i = 0; i < traj.size(); ++i)
        v_dist[i] = discrete_norm(VectorField(traj.states[i].v - limit.v_inf),
                                  domain, {config.p, 1});
      write_series_file(result.series_path, traj, v_dist);
      return finish(kExitOk);
    }

    if (config.model == "deviation") {
      // Deviation from the linear solution at amplitude A and A/2; the
      // quadratic nonlinearity shrinks it by about 4.
      auto deviation_at = [&](double amp) {
        ScenarioConfig base = config;
        base.model = "kuznetsov";
        base.amplitude = amp;
        ScenarioData d = build_data(base, domain);
        Trajectory full = solve_scenario_trajectory(base, domain, d);
        ScenarioConfig lin = base;
        lin.disable_nonlinearity = true;
        Trajectory linear = solve_scenario_trajectory(lin, domain, d);
        if (!full.completed() || !linear.completed())
          throw NumericalFailure("deviation run terminated early");
        double dev = 0.0;
        for (std::size_t i = 0; i < full.size(); ++i)
          dev = std::max(dev, discrete_norm(Field(full.states[i].u -
                                                  linear.states[i].u),
                                            domain, {config.p, 0}));
        return dev;
      };
      double dev_full = deviation_at(config.amplitude);
      double dev_half = deviation_at(0.5 * config.amplitude);
      summary.put("deviation_full", dev_full);
      summary.put("deviation_half", dev_half);
      summary.put("deviation_ratio", dev_half > 0.0 ? dev_full / dev_half : 0.0);
      std::ofstream series(result.series_path);
      series << "amplitude\tdeviation\n";
      series << fmt(config.amplitude) << '\t' << fmt(dev_full) << "\n";
      series << fmt(0.5 * config.amplitude) << '\t' << fmt(dev_half) << "\n";
      return finish(kExitOk);
    }

    // Trajectory models: compatibility first so the report lands in the
    // summary whether or not the run proceeds.
    CompatReport compat = check_compatibility(data.g, data.u0, data.u1, config.p,
                                              domain, config.compat_tol);
    summary.put("compat_order0_ok", compat.order0_ok);
    summary.put("compat_order1_ok", compat.order1_ok.has_value()
                                        ? std::string(*compat.order1_ok ? "true"
                                                                        : "false")
                                        : std::string("na"));
    summary.put("compat_max_violation", compat.max_violation);
    summary.put("compat_tolerance", compat.tolerance);
    if (config.strict && !compat.ok()) {
      log << "validation failed: boundary/initial data incompatible (violation "
          << compat.max_violation << ")\n";
      summary.put("status", std::string("validation-failure"));
      summary.put("truncated", true);
      return finish(kExitValidation);
    }

    ScenarioConfig relaxed = config;
    relaxed.strict = false;  // already checked above
    Trajectory traj = solve_scenario_trajectory(relaxed, domain, data);

    summary.put("termination", std::string(to_string(traj.termination)));
    summary.put("truncated", !traj.completed());
    if (!traj.completed())
      summary.put("termination_detail", traj.termination_detail);
    summary.put("n_samples", static_cast<int>(traj.size()));
    summary.put("t_final", traj.states.back().t);

    // Velocity limit; zero or non-decaying runs fall back to the terminal
    // velocity so the distance column stays defined.
    VectorField v_inf = traj.states.back().v;
    std::string vinf_source = "terminal-fallback";
    double vinf_tail = 0.0, vinf_rate = 0.0;
    try {
      VelocityLimit limit = v_infinity(traj, params, domain);
      v_inf = limit.v_inf;
      vinf_tail = limit.tail_bound;
      vinf_rate = limit.fitted_rate;
      vinf_source = "fitted";
    } catch (const std::exception&) {
      if (traj.size() > 0 && traj.samples.back().u_lp == 0.0) {
        v_inf = traj.states.front().v;
        vinf_source = "v0-trivial";
      }
    }
    summary.put("vinf_source", vinf_source);
    summary.put("vinf_tail_bound", vinf_tail);
    summary.put("vinf_fit_rate", vinf_rate);

    std::vector<double> v_dist(traj.size());
    std::vector<double> grad_norms(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      v_dist[i] = discrete_norm(VectorField(traj.states[i].v - v_inf), domain,
                                {config.p, 1});
      grad_norms[i] =
          discrete_norm(gradient(traj.states[i].u, domain), domain, {config.p, 0});
    }

    const SampleDiagnostics& last = traj.samples.back();
    summary.put("u_lp_final", last.u_lp);
    summary.put("u_w1p_final", last.u_w1p);
    summary.put("u_w2p_final", last.u_w2p);
    summary.put("ut_lp_final", last.ut_lp);
    summary.put("ut_w1p_final", last.ut_w1p);
    summary.put("ut_w2p_final", last.ut_w2p);
    summary.put("v_minus_vinf_w1p_final", v_dist.back());
    double deg_min = 1.0;
    int newton_max = 0;
    for (const auto& s : traj.samples) {
      deg_min = std::min(deg_min, s.degeneracy_min);
      newton_max = std::max(newton_max, s.newton_iterations);
    }
    summary.put("degeneracy_min_overall", deg_min);
    summary.put("newton_iterations_max", newton_max);

    // Rate fits over the configured window (default: final 60 %); the
    // v-distance and grad-u fits stop at 80 % of the run to stay clear of
    // the truncation-dominated tail near t_end.
    const double t_end = traj.states.back().t;
    FitWindow uw{config.fit_t0 >= 0.0 ? config.fit_t0 : 0.4 * t_end,
                 config.fit_t1 > 0.0 ? config.fit_t1 : t_end};
    FitWindow vw{uw.t0, std::min(uw.t1, 0.8 * t_end)};
    std::vector<double> times = traj.times();

    auto series_of = [&](auto member) {
      std::vector<double> y(traj.samples.size());
      for (std::size_t i = 0; i < traj.samples.size(); ++i)
        y[i] = traj.samples[i].*member;
      return y;
    };

    bool ok = false;
    RateFit f_u_lp = try_fit(times, series_of(&SampleDiagnostics::u_lp), uw, &ok);
    put_fit(summary, "rate_u_lp", f_u_lp, ok);
    RateFit f_u_w1p = try_fit(times, series_of(&SampleDiagnostics::u_w1p), uw, &ok);
    put_fit(summary, "rate_u_w1p", f_u_w1p, ok);
    RateFit f_u_w2p = try_fit(times, series_of(&SampleDiagnostics::u_w2p), uw, &ok);
    put_fit(summary, "rate_u_w2p", f_u_w2p, ok);
    RateFit f_ut_lp = try_fit(times, series_of(&SampleDiagnostics::ut_lp), uw, &ok);
    put_fit(summary, "rate_ut_lp", f_ut_lp, ok);
    RateFit f_ut_w1p = try_fit(times, series_of(&SampleDiagnostics::ut_w1p), uw, &ok);
    put_fit(summary, "rate_ut_w1p", f_ut_w1p, ok);
    RateFit f_v = try_fit(times, v_dist, vw, &ok);
    put_fit(summary, "rate_v_minus_vinf_w1p", f_v, ok);
    RateFit f_grad = try_fit(times, grad_norms, vw, &ok);
    put_fit(summary, "rate_grad_u_lp", f_grad, ok);

    // Differentiated decay orders over the same window start; the report
    // caps its own v window.
    if (traj.completed() && config.max_derivative_order >= 0) {
      try {
        DerivativeDecayReport dd = derivative_decay_report(
            traj, domain, config.max_derivative_order, uw.t0, config.p);
        summary.put("derivative_degraded", dd.degraded);
        summary.put("derivative_last_reliable_order", dd.last_reliable_order);
        for (std::size_t j = 0; j < dd.u_rates.size(); ++j) {
          std::string tag = std::to_string(j);
          summary.put("derivative_u_rate_" + tag, dd.u_rates[j].rate);
          summary.put("derivative_u_valid_" + tag, dd.u_rates[j].valid);
          summary.put("derivative_v_rate_" + tag, dd.v_rates[j].rate);
          summary.put("derivative_v_valid_" + tag, dd.v_rates[j].valid);
        }
      } catch (const std::invalid_argument& e) {
        summary.put("derivative_report_error", std::string(e.what()));
      }
    }

    bool decay_checked = config.amplitude != 0.0 && traj.completed();
    summary.put("pass_decay",
                decay_checked
                    ? std::string(f_u_w2p.valid && f_ut_w1p.valid && f_v.valid &&
                                          f_u_w2p.rate >= 0.9 * w0 &&
                                          f_ut_w1p.rate >= 0.9 * w0 &&
                                          f_v.rate >= 0.9 * w0
                                      ? "true"
                                      : "false")
                    : std::string("na"));

    write_series_file(result.series_path, traj, v_dist);

    switch (traj.termination) {
      case RunTermination::Completed: return finish(kExitOk);
      case RunTermination::Degeneracy: return finish(kExitDegeneracy);
      case RunTermination::NumericalFailure: return finish(kExitNumericalFailure);
    }
    return finish(kExitOk);
  } catch (const UnsupportedExponent& e) {
    log << "validation failed: " << e.what() << "\n";
    summary.put("status", std::string("validation-failure"));
    summary.put("error", std::string(e.what()));
    return finish(kExitValidation);
  } catch (const ValidationError& e) {
    log << "validation failed: " << e.what() << "\n";
    summary.put("status", std::string("validation-failure"));
    summary.put("error", std::string(e.what()));
    return finish(kExitValidation);
  } catch (const std::invalid_argument& e) {
    log << "invalid configuration: " << e.what() << "\n";
    summary.put("status", std::string("validation-failure"));
    summary.put("error", std::string(e.what()));
    return finish(kExitValidation);
  } catch (const DegeneracyError& e) {
    log << "degeneracy: " << e.what() << "\n";
    summary.put("status", std::string("degeneracy"));
    summary.put("error", std::string(e.what()));
    return finish(kExitDegeneracy);
  } catch (const TruncationError& e) {
    log << "numerical failure: " << e.what() << "\n";
    summary.put("status", std::string("numerical-failure"));
    summary.put("error", std::string(e.what()));
    return finish(kExitNumericalFailure);
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << "\n";
    summary.put("status", std::string("numerical-failure"));
    summary.put("error", std::string(e.what()));
    return finish(kExitNumericalFailure);
  }
}

}  // namespace kzn
