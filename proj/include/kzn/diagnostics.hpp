#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kzn/boundary_data.hpp"
#include "kzn/domain.hpp"
#include "kzn/norms.hpp"
#include "kzn/trajectory.hpp"

namespace kzn {

struct FitWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

/// Least-squares exponential rate of a positive sample series: the model
/// is log y = intercept - rate * t, so positive `rate` means decay.
struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;
  FitWindow window;
  double residual = 0.0;  ///< RMS deviation of log samples from the line
  int n_samples = 0;
  bool clipped = false;   ///< samples at or below the floor were clipped
  bool envelope = false;  ///< fitted on local maxima instead of all samples
  bool valid = false;
};

/// Plain log-linear fit over the window.  Throws std::invalid_argument
/// when fewer than 4 samples fall inside.  `valid` requires strictly
/// positive samples (no clipping) and residual at most residual_cap.
RateFit fit_decay_rate(std::span<const double> times, std::span<const double> values,
                       const FitWindow& window, double residual_cap = 1.0);

/// Rate fit on the peak envelope: the log-linear fit is restricted to
/// local maxima of the series, which removes the downward bias the plain
/// fit suffers on oscillatory decays (the dips between peaks drag the
/// line down by several percent).  Falls back to the plain fit when the
/// window holds fewer than 4 peaks.
RateFit fit_decay_rate_envelope(std::span<const double> times,
                                std::span<const double> values,
                                const FitWindow& window, double residual_cap = 1.0);

/// Outcome of the compatibility check between boundary and initial data:
/// order 0 compares g(0) with the trace of u0, order 1 compares g_t(0)
/// with the trace of u1.  Order 1 only applies for p > 3/2 and the field
/// is absent below that threshold; p = 3/2 itself is rejected upstream.
struct CompatReport {
  double p = 2.0;
  double tolerance = 0.0;
  bool order0_ok = false;
  std::optional<bool> order1_ok;
  double max_violation = 0.0;
  double order0_violation = 0.0;
  double order1_violation = 0.0;

  bool ok() const { return order0_ok && order1_ok.value_or(true); }
};

/// Check trace compatibility at t = 0.  tolerance <= 0 selects a
/// grid-scaled default of 10 * h^2.  Throws UnsupportedExponent for
/// p <= 1 or p = 3/2.
CompatReport check_compatibility(const BoundaryData& g, const Field& u0,
                                 const Field& u1, double p, const Domain& domain,
                                 double tolerance = -1.0);

/// Decay rates of time-differentiated trajectories.  Order j series are
/// built by centred differencing of the stored samples (norm in W^2 for
/// u, W^1 for v) and fitted from t_start onwards.  Because v settles to a
/// nonzero limit, its order-0 series measures the distance to the
/// terminal velocity sample.  Differencing amplifies rounding noise by
/// sample_dt^{-j}; once a series dips near that noise floor the fit
/// degrades and `last_reliable_order` stops short of it.
struct DerivativeDecayReport {
  std::vector<RateFit> u_rates;  ///< index = derivative order
  std::vector<RateFit> v_rates;
  std::vector<double> u_noise_floor;
  std::vector<double> v_noise_floor;
  int last_reliable_order = 0;
  bool degraded = false;
};

DerivativeDecayReport derivative_decay_report(const Trajectory& trajectory,
                                              const Domain& domain, int max_order,
                                              double t_start, double p = 2.0);

enum class StudyStatus { Ok, Invalid, Saturated };

/// Errors across a refinement ladder plus observed orders
/// log2(e_i / e_{i+1}); assumes successive levels refine by a factor of
/// two.  Non-monotone errors mark the study Invalid, errors under the
/// floor mark it Saturated; the raw table is kept either way.
struct ConvergenceStudy {
  std::vector<double> errors;
  std::vector<double> observed_orders;
  StudyStatus status = StudyStatus::Ok;
};

ConvergenceStudy convergence_study(const std::function<double(int level)>& error_at_level,
                                   int levels, double saturation_floor = 1e-12);

/// Continuous-dependence probe: rerun with data perturbed by delta and
/// record max_t ||u_delta - u_base||_{Lp} / delta.  Bounded ratios as
/// delta shrinks are the numerical signature of well-posedness.  A run
/// that throws is recorded as failed and the study continues.
struct PerturbationStudy {
  std::vector<double> deltas;
  std::vector<double> ratios;
  std::vector<bool> succeeded;
};

PerturbationStudy perturbation_study(
    const std::function<Trajectory(double delta)>& run_perturbed,
    const Trajectory& baseline, const Domain& domain, std::span<const double> deltas,
    double p = 2.0);

}  // namespace kzn
