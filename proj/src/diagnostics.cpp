#include "kzn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kzn/errors.hpp"
#include "kzn/operators.hpp"

namespace kzn {

namespace {

constexpr double kLogFloor = 1e-300;

struct Series {
  std::vector<double> t;
  std::vector<double> y;
};

Series window_slice(std::span<const double> times, std::span<const double> values,
                    const FitWindow& window) {
  if (times.size() != values.size())
    throw std::invalid_argument("times and values must have equal length");
  if (!(window.t1 > window.t0))
    throw std::invalid_argument("fit window must have positive length");
  Series s;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= window.t0 - 1e-12 && times[i] <= window.t1 + 1e-12) {
      s.t.push_back(times[i]);
      s.y.push_back(values[i]);
    }
  }
  return s;
}

RateFit fit_series(const Series& s, const FitWindow& window, double residual_cap) {
  if (s.t.size() < 4)
    throw std::invalid_argument("decay fit needs at least 4 samples in the window");

  RateFit fit;
  fit.window = window;
  fit.n_samples = static_cast<int>(s.t.size());

  std::vector<double> logs(s.y.size());
  bool positive = true;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    double v = s.y[i];
    if (!(v > kLogFloor)) {
      fit.clipped = true;
      positive = false;
      v = kLogFloor;
    }
    logs[i] = std::log(v);
  }

  double n = static_cast<double>(s.t.size());
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    st += s.t[i];
    sy += logs[i];
    stt += s.t[i] * s.t[i];
    sty += s.t[i] * logs[i];
  }
  double denom = n * stt - st * st;
  if (!(std::abs(denom) > 0.0))
    throw std::invalid_argument("degenerate time samples in decay fit");
  double slope = (n * sty - st * sy) / denom;
  fit.rate = -slope;
  fit.intercept = (sy - slope * st) / n;

  double ss = 0.0;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    double r = logs[i] - (fit.intercept + slope * s.t[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.valid = positive && fit.residual <= residual_cap;
  return fit;
}

}  // namespace

RateFit fit_decay_rate(std::span<const double> times, std::span<const double> values,
                       const FitWindow& window, double residual_cap) {
  return fit_series(window_slice(times, values, window), window, residual_cap);
}

RateFit fit_decay_rate_envelope(std::span<const double> times,
                                std::span<const double> values,
                                const FitWindow& window, double residual_cap) {
  Series s = window_slice(times, values, window);
  if (s.t.size() < 4)
    throw std::invalid_argument("decay fit needs at least 4 samples in the window");

  Series peaks;
  for (std::size_t i = 1; i + 1 < s.t.size(); ++i) {
    if (s.y[i] >= s.y[i - 1] && s.y[i] >= s.y[i + 1] &&
        (s.y[i] > s.y[i - 1] || s.y[i] > s.y[i + 1])) {
      peaks.t.push_back(s.t[i]);
      peaks.y.push_back(s.y[i]);
    }
  }
  if (peaks.t.size() < 4) return fit_series(s, window, residual_cap);
  RateFit fit = fit_series(peaks, window, residual_cap);
  fit.envelope = true;
  return fit;
}

CompatReport check_compatibility(const BoundaryData& g, const Field& u0,
                                 const Field& u1, double p, const Domain& domain,
                                 double tolerance) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw UnsupportedExponent("exponent p must be finite and exceed 1", p);
  if (std::abs(p - 1.5) < 1e-12)
    throw UnsupportedExponent("the borderline exponent p = 3/2 is excluded", p);
  if (u0.size() != domain.n_nodes() || u1.size() != domain.n_nodes())
    throw std::invalid_argument("initial data length does not match the grid");

  CompatReport report;
  report.p = p;
  double h = std::max(domain.hx(), domain.hy());
  report.tolerance = tolerance > 0.0 ? tolerance : 10.0 * h * h;

  Eigen::VectorXd g0 = g.value(domain, 0.0);
  Eigen::VectorXd trace0 = boundary_trace(u0, domain);
  report.order0_violation = (g0 - trace0).cwiseAbs().maxCoeff();
  report.order0_ok = report.order0_violation <= report.tolerance;
  report.max_violation = report.order0_violation;

  // The order-1 trace condition only constrains the data above the
  // borderline exponent.
  if (p > 1.5) {
    Eigen::VectorXd g1 = g.rate(domain, 0.0);
    Eigen::VectorXd trace1 = boundary_trace(u1, domain);
    report.order1_violation = (g1 - trace1).cwiseAbs().maxCoeff();
    report.order1_ok = report.order1_violation <= report.tolerance;
    report.max_violation = std::max(report.max_violation, report.order1_violation);
  }
  return report;
}

namespace {

// Central time differences of a sampled matrix series.  Order 1 and 2 use
// the classical three-point stencils; higher orders compose them, eating
// ceil(order/2) samples off each end per composition.
std::vector<Eigen::MatrixXd> difference_series(const std::vector<Eigen::MatrixXd>& s,
                                               double dt, int order) {
  if (order == 0) return s;
  if (order % 2 == 1) {
    auto base = difference_series(s, dt, order - 1);
    std::vector<Eigen::MatrixXd> out;
    if (base.size() < 3) return out;
    out.reserve(base.size() - 2);
    for (std::size_t i = 1; i + 1 < base.size(); ++i)
      out.push_back((base[i + 1] - base[i - 1]) / (2.0 * dt));
    return out;
  }
  auto base = difference_series(s, dt, order - 2);
  std::vector<Eigen::MatrixXd> out;
  if (base.size() < 3) return out;
  out.reserve(base.size() - 2);
  for (std::size_t i = 1; i + 1 < base.size(); ++i)
    out.push_back((base[i + 1] - 2.0 * base[i] + base[i - 1]) / (dt * dt));
  return out;
}

int trimmed_per_side(int order) {
  int trim = 0;
  while (order > 0) {
    trim += 1;
    order -= order % 2 == 1 ? 1 : 2;
  }
  return trim;
}

}  // namespace

DerivativeDecayReport derivative_decay_report(const Trajectory& trajectory,
                                              const Domain& domain, int max_order,
                                              double t_start, double p) {
  if (max_order < 0) throw std::invalid_argument("max_order must be nonnegative");
  if (trajectory.size() < static_cast<std::size_t>(4 + 2 * max_order))
    throw std::invalid_argument("trajectory too short for the requested orders");
  const double dt = trajectory.sample_dt;
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory lacks a sample spacing");

  const std::size_t n = trajectory.size();
  // v converges to a nonzero limit, so its order-0 series is measured
  // against the terminal sample as a stand-in for v_inf; differencing
  // removes the shift at every higher order anyway.
  const VectorField& v_ref = trajectory.states.back().v;
  std::vector<Eigen::MatrixXd> u_series(n), v_series(n);
  for (std::size_t i = 0; i < n; ++i) {
    u_series[i] = trajectory.states[i].u;
    v_series[i] = trajectory.states[i].v - v_ref;
  }
  std::vector<double> times = trajectory.times();
  const double t_end = times.back();
  const double eps = 2.2204460492503131e-16;

  double u_scale = 0.0, v_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u_scale = std::max(u_scale, u_series[i].cwiseAbs().maxCoeff());
    if (v_series[i].size() > 0)
      v_scale = std::max(v_scale, v_series[i].cwiseAbs().maxCoeff());
  }

  DerivativeDecayReport report;
  report.last_reliable_order = -1;
  for (int order = 0; order <= max_order; ++order) {
    auto du = difference_series(u_series, dt, order);
    auto dv = difference_series(v_series, dt, order);
    int trim = trimmed_per_side(order);
    std::vector<double> t_sub(times.begin() + trim, times.end() - trim);

    std::vector<double> u_norms(du.size()), v_norms(dv.size());
    for (std::size_t i = 0; i < du.size(); ++i) {
      u_norms[i] = discrete_norm(Field(du[i]), domain, {p, 2});
      v_norms[i] = discrete_norm(VectorField(dv[i]), domain, {p, 1});
    }

    // Rounding amplification of a j-fold difference quotient.
    double amplification = std::pow(2.0 / dt, order);
    double u_floor = 8.0 * eps * u_scale * amplification;
    double v_floor = 8.0 * eps * v_scale * amplification;
    report.u_noise_floor.push_back(u_floor);
    report.v_noise_floor.push_back(v_floor);

    FitWindow window{t_start, t_end - trim * dt};
    // The v series was shifted by its terminal sample and is forced to
    // zero there; keep the fit clear of that endpoint.
    FitWindow v_window{t_start, t_start + 0.8 * (window.t1 - t_start)};
    RateFit uf = fit_decay_rate_envelope(t_sub, u_norms, window);
    RateFit vf = fit_decay_rate_envelope(t_sub, v_norms, v_window);

    // Noise screening covers the fitted span only; outside it the v series
    // legitimately touches zero at the reference sample.
    auto min_in = [&t_sub](const std::vector<double>& y, const FitWindow& w) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < t_sub.size(); ++i)
        if (t_sub[i] >= w.t0 - 1e-12 && t_sub[i] <= w.t1 + 1e-12)
          m = std::min(m, y[i]);
      return m;
    };
    double u_min = min_in(u_norms, window);
    double v_min = min_in(v_norms, v_window);
    bool noisy = u_min < 10.0 * u_floor || v_min < 10.0 * v_floor;
    if (noisy) {
      uf.valid = false;
      vf.valid = false;
      report.degraded = true;
    }
    report.u_rates.push_back(uf);
    report.v_rates.push_back(vf);
    if (!report.degraded && uf.valid && vf.valid)
      report.last_reliable_order = order;
  }
  return report;
}

ConvergenceStudy convergence_study(const std::function<double(int)>& error_at_level,
                                   int levels, double saturation_floor) {
  if (!error_at_level) throw std::invalid_argument("error callback is empty");
  if (levels < 2) throw std::invalid_argument("a study needs at least 2 levels");

  ConvergenceStudy study;
  for (int l = 0; l < levels; ++l) study.errors.push_back(error_at_level(l));
  for (int l = 0; l + 1 < levels; ++l)
    study.observed_orders.push_back(std::log2(study.errors[l] / study.errors[l + 1]));

  for (double e : study.errors) {
    if (e < saturation_floor) study.status = StudyStatus::Saturated;
  }
  if (study.status == StudyStatus::Ok) {
    for (int l = 0; l + 1 < levels; ++l) {
      if (!(study.errors[l + 1] < study.errors[l])) {
        study.status = StudyStatus::Invalid;
        break;
      }
    }
  }
  return study;
}

PerturbationStudy perturbation_study(
    const std::function<Trajectory(double delta)>& run_perturbed,
    const Trajectory& baseline, const Domain& domain, std::span<const double> deltas,
    double p) {
  if (!run_perturbed) throw std::invalid_argument("perturbation callback is empty");

  PerturbationStudy study;
  for (double delta : deltas) {
    study.deltas.push_back(delta);
    if (!(delta > 0.0)) {
      study.ratios.push_back(0.0);
      study.succeeded.push_back(false);
      continue;
    }
    try {
      Trajectory perturbed = run_perturbed(delta);
      std::size_t m = std::min(perturbed.size(), baseline.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        Field diff = perturbed.states[i].u - baseline.states[i].u;
        worst = std::max(worst, discrete_norm(diff, domain, {p, 0}));
      }
      study.ratios.push_back(worst / delta);
      study.succeeded.push_back(true);
    } catch (const std::exception&) {
      study.ratios.push_back(0.0);
      study.succeeded.push_back(false);
    }
  }
  return study;
}

}  // namespace kzn
