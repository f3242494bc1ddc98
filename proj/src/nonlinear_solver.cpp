#include "kzn/nonlinear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "kzn/diagnostics.hpp"
#include "kzn/errors.hpp"

namespace kzn {

namespace {

void check_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw UnsupportedExponent("exponent p must be finite and exceed 1", p);
  if (std::abs(p - 1.5) < 1e-12)
    throw UnsupportedExponent("the borderline exponent p = 3/2 is excluded", p);
}

// min of 1 - 2ku over the full node set; throws when at or below the guard.
void enforce_guard(const Field& u, double k, double guard, double t) {
  if (k == 0.0) return;
  int node = 0;
  double factor = (1.0 - 2.0 * k * u.array()).minCoeff(&node);
  if (factor <= guard) {
    std::ostringstream msg;
    msg << "degeneracy guard tripped at t = " << t << ": 1 - 2ku = " << factor
        << " <= " << guard << " at node " << node;
    throw DegeneracyError(msg.str(), t, node, factor);
  }
}

// Selection matrices: E scatters interior values into a full-length field,
// its transpose gathers them back.
SparseMatrix embed_matrix(const Domain& domain) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(domain.n_interior());
  for (int r = 0; r < domain.n_interior(); ++r)
    t.emplace_back(domain.interior_nodes()[r], r, 1.0);
  SparseMatrix e(domain.n_nodes(), domain.n_interior());
  e.setFromTriplets(t.begin(), t.end());
  return e;
}

struct Workspace {
  const Domain& domain;
  PhysicalParams params;
  NonlinearConfig config;
  double dt;
  DirichletOperator op;
  SparseMatrix eye;
  SparseMatrix half_dF_linear;            // 0.5 * ((dt/2) c^2 A + b A)
  std::vector<SparseMatrix> grad_interior; // interior rows of G_d * embed

  Workspace(const Domain& dom, const PhysicalParams& p, const NonlinearConfig& cfg,
            double dt_)
      : domain(dom), params(p), config(cfg), dt(dt_),
        op(build_dirichlet_laplacian(dom)) {
    eye.resize(dom.n_interior(), dom.n_interior());
    eye.setIdentity();
    double c2 = params.c * params.c;
    half_dF_linear = (0.25 * dt * c2 + 0.5 * params.b) * op.interior;
    SparseMatrix embed = embed_matrix(dom);
    SparseMatrix gather = SparseMatrix(embed.transpose());
    for (int d = 0; d < dom.dim(); ++d)
      grad_interior.push_back(gather * gradient_matrix(dom, d) * embed);
  }

  double transport_sign() const { return config.flip_transport_sign ? -1.0 : 1.0; }

  // Quadratic right-hand side at interior nodes:
  //   2 k w^2 + 2/rho0 |grad u|^2 -/+ 2 v . grad w.
  Eigen::VectorXd quadratic_terms(const Field& u, const Field& w,
                                  const VectorField& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(domain.n_interior());
    if (config.disable_nonlinearity) return out;
    VectorField gu = gradient(u, domain);
    VectorField gw = gradient(w, domain);
    const double s = transport_sign();
    for (int r = 0; r < domain.n_interior(); ++r) {
      int node = domain.interior_nodes()[r];
      double acc = 2.0 * params.k * w[node] * w[node];
      for (int d = 0; d < domain.dim(); ++d) {
        acc += 2.0 / params.rho0 * gu(node, d) * gu(node, d);
        acc -= s * 2.0 * v(node, d) * gw(node, d);
      }
      out[r] = acc;
    }
    return out;
  }

  // F(u, w, v) = c^2 Lap u + b Lap w + quadratic terms, interior part, with
  // the boundary values of u and w folded in through the Dirichlet blocks.
  Eigen::VectorXd stiffness(const Field& u, const Field& w, const VectorField& v,
                            const Eigen::VectorXd& gb, const Eigen::VectorXd& gtb) const {
    double c2 = params.c * params.c;
    Eigen::VectorXd out =
        c2 * apply_dirichlet(op, restrict_interior(u, domain), gb) +
        params.b * apply_dirichlet(op, restrict_interior(w, domain), gtb);
    out += quadratic_terms(u, w, v);
    return out;
  }

  Eigen::VectorXd forcing_mid(double t) const {
    if (!config.forcing) return Eigen::VectorXd::Zero(domain.n_interior());
    return 0.5 * (restrict_interior(config.forcing(t), domain) +
                  restrict_interior(config.forcing(t + dt), domain));
  }

  Eigen::VectorXd residual_consistent(const State& state_new, const State& state_old,
                                      const Eigen::VectorXd& gb_old,
                                      const Eigen::VectorXd& gtb_old,
                                      const Eigen::VectorXd& gb_new,
                                      const Eigen::VectorXd& gtb_new) const {
    Field u_mid = 0.5 * (state_old.u + state_new.u);
    enforce_guard(u_mid, params.k, config.degeneracy_guard, state_new.t);

    Eigen::VectorXd w_old = restrict_interior(state_old.ut, domain);
    Eigen::VectorXd w_new = restrict_interior(state_new.ut, domain);
    Eigen::VectorXd coef =
        Eigen::VectorXd::Ones(domain.n_interior()) -
        2.0 * params.k * restrict_interior(u_mid, domain);

    Eigen::VectorXd f_old =
        stiffness(state_old.u, state_old.ut, state_old.v, gb_old, gtb_old);
    Eigen::VectorXd f_new =
        stiffness(state_new.u, state_new.ut, state_new.v, gb_new, gtb_new);
    return coef.cwiseProduct((w_new - w_old) / dt) - 0.5 * (f_old + f_new) -
           forcing_mid(state_old.t);
  }

  SparseMatrix jacobian(const State& state_new, const State& state_old) const {
    Eigen::VectorXd w_old = restrict_interior(state_old.ut, domain);
    Eigen::VectorXd w_new = restrict_interior(state_new.ut, domain);
    Field u_mid = 0.5 * (state_old.u + state_new.u);
    Eigen::VectorXd diag =
        (Eigen::VectorXd::Ones(domain.n_interior()) -
         2.0 * params.k * restrict_interior(u_mid, domain)) /
        dt;
    if (params.k != 0.0) diag -= (0.5 * params.k) * (w_new - w_old);
    if (!config.disable_nonlinearity) diag -= (2.0 * params.k) * w_new;

    SparseMatrix j(domain.n_interior(), domain.n_interior());
    j = SparseMatrix(diag.asDiagonal());
    j -= half_dF_linear;
    if (config.disable_nonlinearity) return j;

    const double s = transport_sign();
    VectorField gu = gradient(state_new.u, domain);
    VectorField gw = gradient(state_new.ut, domain);
    for (int d = 0; d < domain.dim(); ++d) {
      Eigen::VectorXd du_scale(domain.n_interior());
      Eigen::VectorXd v_scale(domain.n_interior());
      Eigen::VectorXd dw_scale(domain.n_interior());
      for (int r = 0; r < domain.n_interior(); ++r) {
        int node = domain.interior_nodes()[r];
        du_scale[r] = (dt / params.rho0) * gu(node, d);
        v_scale[r] = s * state_new.v(node, d);
        dw_scale[r] = (s * dt * dt / (4.0 * params.rho0)) * gw(node, d);
      }
      // 0.5 * d/dw+ of 2/rho0 |grad u+|^2, with du+/dw+ = (dt/2) E
      j -= SparseMatrix(du_scale.asDiagonal() * grad_interior[d]);
      // 0.5 * d/dw+ of -s 2 v+ . grad w+, both factors state-dependent:
      // dv+/dw+ = -(dt^2 / (4 rho0)) G E.
      j += SparseMatrix(v_scale.asDiagonal() * grad_interior[d]);
      j -= SparseMatrix(dw_scale.asDiagonal() * grad_interior[d]);
    }
    return j;
  }
};

}  // namespace

void NonlinearConfig::validate() const {
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (newton_max_iter < 1)
    throw std::invalid_argument("newton_max_iter must be positive");
  if (!(degeneracy_guard > 0.0) || !(degeneracy_guard < 1.0))
    throw std::invalid_argument("degeneracy_guard must lie in (0, 1)");
  if (store_stride < 1) throw std::invalid_argument("store_stride must be >= 1");
}

void KuznetsovProblem::validate() const {
  params.validate();
  if (domain == nullptr) throw std::invalid_argument("problem has no domain");
  if (u0.size() != domain->n_nodes() || u1.size() != domain->n_nodes())
    throw std::invalid_argument("initial data length does not match the grid");
  if (v0.size() != 0 &&
      (v0.rows() != domain->n_nodes() || v0.cols() != domain->dim()))
    throw std::invalid_argument("v0 shape does not match the grid");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive and finite");
  if (!(t_end >= dt)) throw std::invalid_argument("t_end must cover at least one step");
  long long n = std::llround(t_end / dt);
  if (n < 1 || std::abs(n * dt - t_end) > 1e-9 * t_end)
    throw std::invalid_argument("t_end must be an integer number of steps");
  check_exponent(p);
}

Eigen::VectorXd quasilinear_residual(const State& state_new, const State& state_old,
                                     const BoundaryData& g,
                                     const PhysicalParams& params,
                                     const Domain& domain, double dt,
                                     const NonlinearConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Workspace ws(domain, params, config, dt);
  return ws.residual_consistent(state_new, state_old,
                                g.value(domain, state_old.t),
                                g.rate(domain, state_old.t),
                                g.value(domain, state_new.t),
                                g.rate(domain, state_new.t));
}

SparseMatrix quasilinear_jacobian(const State& state_new, const State& state_old,
                                  const BoundaryData& g, const PhysicalParams& params,
                                  const Domain& domain, double dt,
                                  const NonlinearConfig& config) {
  (void)g;
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Workspace ws(domain, params, config, dt);
  return ws.jacobian(state_new, state_old);
}

struct KuznetsovStepper::Impl {
  Workspace ws;
  BoundaryData g;

  Impl(const Domain& domain, const PhysicalParams& params, BoundaryData g_,
       NonlinearConfig config, double dt)
      : ws(domain, params, config, dt), g(std::move(g_)) {
    config.validate();
    params.validate();
  }

  State advance(const State& state_old, const Eigen::VectorXd& w_guess,
                int* iterations) const {
    const Domain& domain = ws.domain;
    const double dt = ws.dt;
    const double t_new = state_old.t + dt;

    Eigen::VectorXd gb_new = g.value(domain, t_new);
    Eigen::VectorXd gtb_new = g.rate(domain, t_new);
    Eigen::VectorXd gb_old = g.value(domain, state_old.t);
    Eigen::VectorXd gtb_old = g.rate(domain, state_old.t);

    Eigen::VectorXd u_old_int = restrict_interior(state_old.u, domain);
    Eigen::VectorXd w_old_int = restrict_interior(state_old.ut, domain);
    VectorField grad_u_old = gradient(state_old.u, domain);

    auto make_state = [&](const Eigen::VectorXd& w_int) {
      State s;
      s.t = t_new;
      Eigen::VectorXd u_int = u_old_int + 0.5 * dt * (w_old_int + w_int);
      s.u = extend_field(u_int, gb_new, domain);
      s.ut = extend_field(w_int, gtb_new, domain);
      s.v = state_old.v -
            (0.5 * dt / ws.params.rho0) * (grad_u_old + gradient(s.u, domain));
      return s;
    };

    if (ws.config.scheme == NonlinearScheme::SemiImplicit) {
      enforce_guard(state_old.u, ws.params.k, ws.config.degeneracy_guard,
                    state_old.t);
      Eigen::VectorXd coef = Eigen::VectorXd::Ones(domain.n_interior()) -
                             2.0 * ws.params.k * u_old_int;
      SparseMatrix m = SparseMatrix((coef / dt).asDiagonal());
      m -= ws.half_dF_linear;
      Eigen::SimplicialLDLT<SparseMatrix> solver;
      solver.compute(m);
      if (solver.info() != Eigen::Success)
        throw NumericalFailure("semi-implicit step matrix failed to factorise");

      double c2 = ws.params.c * ws.params.c;
      Eigen::VectorXd rhs =
          coef.cwiseProduct(w_old_int) / dt +
          0.5 * (c2 * apply_dirichlet(ws.op, u_old_int, gb_old) +
                 ws.params.b * apply_dirichlet(ws.op, w_old_int, gtb_old)) +
          0.5 * (c2 * apply_dirichlet(ws.op, u_old_int + 0.5 * dt * w_old_int,
                                      gb_new) +
                 ws.params.b * (ws.op.boundary * gtb_new)) +
          ws.quadratic_terms(state_old.u, state_old.ut, state_old.v) +
          ws.forcing_mid(state_old.t);
      Eigen::VectorXd w_new = solver.solve(rhs);
      if (solver.info() != Eigen::Success)
        throw NumericalFailure("semi-implicit step solve failed");
      State s = make_state(w_new);
      enforce_guard(s.u, ws.params.k, ws.config.degeneracy_guard, s.t);
      if (iterations) *iterations = 0;
      return s;
    }

    // Newton on the interior w+ unknown.
    Eigen::VectorXd w_it = w_guess;
    Eigen::SparseLU<SparseMatrix> lu;
    std::vector<double> trace;
    for (int it = 0; it <= ws.config.newton_max_iter; ++it) {
      State candidate = make_state(w_it);
      Eigen::VectorXd res = ws.residual_consistent(candidate, state_old, gb_old,
                                                   gtb_old, gb_new, gtb_new);
      double rnorm = res.cwiseAbs().maxCoeff();
      trace.push_back(rnorm);
      if (rnorm < ws.config.newton_tol) {
        enforce_guard(candidate.u, ws.params.k, ws.config.degeneracy_guard,
                      candidate.t);
        if (iterations) *iterations = it;
        return candidate;
      }
      if (it == ws.config.newton_max_iter) break;
      SparseMatrix j = ws.jacobian(candidate, state_old);
      lu.compute(j);
      if (lu.info() != Eigen::Success)
        throw NumericalFailure("Newton Jacobian failed to factorise", rnorm);
      Eigen::VectorXd delta = lu.solve(-res);
      if (lu.info() != Eigen::Success)
        throw NumericalFailure("Newton correction solve failed", rnorm);
      w_it += delta;
    }
    std::ostringstream msg;
    msg << "Newton failed to reach tol " << ws.config.newton_tol << " in "
        << ws.config.newton_max_iter << " iterations at t = " << t_new
        << "; residual trace:";
    for (double r : trace) msg << " " << r;
    throw NumericalFailure(msg.str(), trace.back());
  }
};

KuznetsovStepper::KuznetsovStepper(const Domain& domain, const PhysicalParams& params,
                                   BoundaryData g, NonlinearConfig config, double dt)
    : impl_(std::make_unique<Impl>(domain, params, std::move(g), std::move(config),
                                   dt)) {}

KuznetsovStepper::~KuznetsovStepper() = default;
KuznetsovStepper::KuznetsovStepper(KuznetsovStepper&&) noexcept = default;

int KuznetsovStepper::step(State& state) const {
  int iterations = 0;
  state = impl_->advance(state, restrict_interior(state.ut, impl_->ws.domain),
                         &iterations);
  return iterations;
}

State step_kuznetsov(const State& state, const KuznetsovProblem& problem,
                     const NonlinearConfig& config, int* newton_iterations) {
  problem.validate();
  config.validate();
  KuznetsovStepper stepper(*problem.domain, problem.params, problem.g, config,
                           problem.dt);
  State next = state;
  int iters = stepper.step(next);
  if (newton_iterations) *newton_iterations = iters;
  return next;
}

VelocityLimit v_infinity(const Trajectory& trajectory, const PhysicalParams& params,
                         const Domain& domain) {
  if (trajectory.size() < 8)
    throw std::invalid_argument("trajectory too short for a velocity limit");
  const std::size_t n = trajectory.size();

  std::vector<double> times = trajectory.times();
  std::vector<double> grad_norms(n);
  std::vector<VectorField> grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    grads[i] = gradient(trajectory.states[i].u, domain);
    grad_norms[i] = discrete_norm(grads[i], domain, {2.0, 0});
  }

  // A potential that never moves contributes nothing to the integral, so
  // the limit is the initial velocity itself with a zero tail.
  double grad_max = 0.0;
  for (double gn : grad_norms) grad_max = std::max(grad_max, gn);
  if (grad_max < 1e-250) {
    VelocityLimit out;
    out.fitted_rate = std::numeric_limits<double>::infinity();
    out.v_inf = trajectory.states.front().v;
    return out;
  }

  double t_end = times.back();
  RateFit fit = fit_decay_rate_envelope(times, grad_norms,
                                        {0.4 * t_end, t_end});
  if (!(fit.rate > 0.0))
    throw NoLimitError("grad u does not decay; v has no limit", fit.rate);

  VectorField integral = VectorField::Zero(domain.n_nodes(), domain.dim());
  for (std::size_t i = 1; i < n; ++i)
    integral += 0.5 * (times[i] - times[i - 1]) * (grads[i - 1] + grads[i]);

  VelocityLimit out;
  out.fitted_rate = fit.rate;
  out.tail_bound = grad_norms.back() / fit.rate;
  out.v_inf = trajectory.states.front().v - integral / params.rho0;
  return out;
}

Trajectory run_kuznetsov(const KuznetsovProblem& problem,
                         const NonlinearConfig& config) {
  problem.validate();
  config.validate();
  const Domain& domain = *problem.domain;
  if (problem.strict) {
    CompatReport report = check_compatibility(problem.g, problem.u0, problem.u1,
                                              problem.p, domain, problem.compat_tol);
    if (!report.ok())
      throw ValidationError("boundary and initial data are incompatible at t = 0",
                            report.max_violation);
  }

  State state;
  state.t = 0.0;
  state.u = problem.u0;
  state.ut = problem.u1;
  state.v = problem.v0.size() != 0
                ? problem.v0
                : VectorField::Zero(domain.n_nodes(), domain.dim());

  Trajectory traj;
  traj.dt = problem.dt;
  traj.sample_dt = problem.dt * config.store_stride;
  const long long n_steps = std::llround(problem.t_end / problem.dt);
  if (n_steps % config.store_stride != 0)
    throw std::invalid_argument("store_stride must divide the step count");

  auto record = [&](const State& s, int iters) {
    traj.states.push_back(s);
    traj.samples.push_back(
        compute_sample_diagnostics(s, domain, problem.p, problem.params.k, iters));
  };
  record(state, 0);

  try {
    enforce_guard(state.u, problem.params.k, config.degeneracy_guard, 0.0);
    KuznetsovStepper stepper(domain, problem.params, problem.g, config, problem.dt);
    for (long long i = 1; i <= n_steps; ++i) {
      int iters = stepper.step(state);
      state.t = i * problem.dt;
      if (i % config.store_stride == 0) record(state, iters);
    }
  } catch (const DegeneracyError& e) {
    traj.termination = RunTermination::Degeneracy;
    traj.termination_detail = e.what();
  } catch (const NumericalFailure& e) {
    traj.termination = RunTermination::NumericalFailure;
    traj.termination_detail = e.what();
  }
  return traj;
}

}  // namespace kzn
