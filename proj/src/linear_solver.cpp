#include "kzn/linear_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/SparseCholesky>

#include "kzn/diagnostics.hpp"
#include "kzn/errors.hpp"

namespace kzn {

namespace {

void check_grid_fields(const Domain& domain, const Field& u0, const Field& u1) {
  if (u0.size() != domain.n_nodes() || u1.size() != domain.n_nodes())
    throw std::invalid_argument("initial data length does not match the grid");
}

void check_time_grid(double dt, double t_end, int store_stride) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive and finite");
  if (!(t_end >= dt))
    throw std::invalid_argument("t_end must cover at least one step");
  if (store_stride < 1) throw std::invalid_argument("store_stride must be >= 1");
  long long n = std::llround(t_end / dt);
  if (n < 1 || std::abs(n * dt - t_end) > 1e-9 * t_end)
    throw std::invalid_argument("t_end must be an integer number of steps");
  if (n % store_stride != 0)
    throw std::invalid_argument("store_stride must divide the step count");
}

void check_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw UnsupportedExponent("exponent p must be finite and exceed 1", p);
  if (std::abs(p - 1.5) < 1e-12)
    throw UnsupportedExponent("the borderline exponent p = 3/2 is excluded", p);
}

VectorField initial_velocity(const VectorField& v0, const Domain& domain) {
  if (v0.size() == 0) return VectorField::Zero(domain.n_nodes(), domain.dim());
  if (v0.rows() != domain.n_nodes() || v0.cols() != domain.dim())
    throw std::invalid_argument("v0 shape does not match the grid");
  return v0;
}

}  // namespace

void LinearProblem::validate() const {
  params.validate();
  if (domain == nullptr) throw std::invalid_argument("problem has no domain");
  check_grid_fields(*domain, u0, u1);
  check_time_grid(dt, t_end, store_stride);
  check_exponent(p);
}

struct DampedWaveStepper::Impl {
  const Domain& domain;
  double c2;
  double b;
  double dt;
  BoundaryData g;
  ForcingFn forcing;
  DirichletOperator op;
  Eigen::SimplicialLDLT<SparseMatrix> solver;

  Impl(const Domain& dom, double c2_, double b_, double dt_, BoundaryData g_,
       ForcingFn f_)
      : domain(dom), c2(c2_), b(b_), dt(dt_), g(std::move(g_)),
        forcing(std::move(f_)), op(build_dirichlet_laplacian(dom)) {
    SparseMatrix eye(domain.n_interior(), domain.n_interior());
    eye.setIdentity();
    SparseMatrix m =
        eye - (0.5 * dt * b) * op.interior - (0.25 * dt * dt * c2) * op.interior;
    solver.compute(m);
    if (solver.info() != Eigen::Success)
      throw NumericalFailure("damped wave step matrix failed to factorise");
  }

  Eigen::VectorXd forcing_interior(double t) const {
    if (!forcing) return Eigen::VectorXd::Zero(domain.n_interior());
    return restrict_interior(forcing(t), domain);
  }

  void step(Field& u, Field& w, double t) const {
    Eigen::VectorXd ui = restrict_interior(u, domain);
    Eigen::VectorXd wi = restrict_interior(w, domain);

    Eigen::VectorXd g_n = g.value(domain, t);
    Eigen::VectorXd gt_n = g.rate(domain, t);
    Eigen::VectorXd g_p = g.value(domain, t + dt);
    Eigen::VectorXd gt_p = g.rate(domain, t + dt);

    Eigen::VectorXd rhs =
        wi + 0.5 * dt *
                 (c2 * apply_dirichlet(op, ui, g_n) +
                  b * apply_dirichlet(op, wi, gt_n) + forcing_interior(t) +
                  forcing_interior(t + dt) +
                  c2 * apply_dirichlet(op, ui + 0.5 * dt * wi, g_p) +
                  b * (op.boundary * gt_p));

    Eigen::VectorXd w_new = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw NumericalFailure("damped wave step solve failed");

    Eigen::VectorXd u_new = ui + 0.5 * dt * (wi + w_new);
    u = extend_field(u_new, g_p, domain);
    w = extend_field(w_new, gt_p, domain);
  }
};

DampedWaveStepper::DampedWaveStepper(const Domain& domain, double c2, double b,
                                     double dt, BoundaryData g, ForcingFn forcing)
    : impl_(std::make_unique<Impl>(domain, c2, b, dt, std::move(g),
                                   std::move(forcing))) {}

DampedWaveStepper::~DampedWaveStepper() = default;
DampedWaveStepper::DampedWaveStepper(DampedWaveStepper&&) noexcept = default;

void DampedWaveStepper::step(Field& u, Field& w, double t) const {
  impl_->step(u, w, t);
}

double DampedWaveStepper::dt() const { return impl_->dt; }

State step_damped_wave(const State& state, const LinearProblem& problem, double t) {
  problem.validate();
  DampedWaveStepper stepper(*problem.domain, problem.params.c * problem.params.c,
                            problem.params.b, problem.dt, problem.g, problem.forcing);
  State next = state;
  stepper.step(next.u, next.ut, t);
  next.t = t + problem.dt;
  if (next.v.size() > 0)
    next.v = integrate_velocity(state.v, state.u, next.u, problem.params,
                                *problem.domain, problem.dt);
  return next;
}

Trajectory solve_linear(const LinearProblem& problem) {
  problem.validate();
  const Domain& domain = *problem.domain;
  if (problem.strict) {
    CompatReport report = check_compatibility(problem.g, problem.u0, problem.u1,
                                              problem.p, domain, problem.compat_tol);
    if (!report.ok())
      throw ValidationError("boundary and initial data are incompatible at t = 0",
                            report.max_violation);
  }

  DampedWaveStepper stepper(domain, problem.params.c * problem.params.c,
                            problem.params.b, problem.dt, problem.g, problem.forcing);

  State state;
  state.t = 0.0;
  state.u = problem.u0;
  state.ut = problem.u1;
  state.v = initial_velocity(problem.v0, domain);

  Trajectory traj;
  traj.dt = problem.dt;
  traj.sample_dt = problem.dt * problem.store_stride;
  const long long n_steps = std::llround(problem.t_end / problem.dt);
  traj.states.reserve(static_cast<std::size_t>(n_steps / problem.store_stride) + 1);

  auto record = [&](const State& s) {
    traj.states.push_back(s);
    traj.samples.push_back(
        compute_sample_diagnostics(s, domain, problem.p, problem.params.k, 0));
  };
  record(state);

  VectorField grad_old = gradient(state.u, domain);
  for (long long i = 1; i <= n_steps; ++i) {
    Field u_prev = state.u;
    stepper.step(state.u, state.ut, (i - 1) * problem.dt);
    state.t = i * problem.dt;
    VectorField grad_new = gradient(state.u, domain);
    state.v -= (0.5 * problem.dt / problem.params.rho0) * (grad_old + grad_new);
    grad_old.swap(grad_new);
    if (i % problem.store_stride == 0) record(state);
  }
  return traj;
}

ModalValue modal_solution(double lambda, const PhysicalParams& params, double a,
                          double beta, double t) {
  params.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double b = params.b, c2 = params.c * params.c;
  const double disc = b * b * lambda * lambda - 4.0 * c2 * lambda;
  const double scale = b * b * lambda * lambda + 4.0 * c2 * lambda;

  ModalValue out;
  if (disc < -1e-9 * scale) {
    double sigma = 0.5 * b * lambda;
    double nu = 0.5 * std::sqrt(-disc);
    double e = std::exp(-sigma * t);
    double cs = std::cos(nu * t), sn = std::sin(nu * t);
    double q = (beta + sigma * a) / nu;
    out.amplitude = e * (a * cs + q * sn);
    out.rate = e * ((-sigma * a + q * nu) * cs + (-sigma * q - a * nu) * sn);
  } else if (disc > 1e-9 * scale) {
    double root = std::sqrt(disc);
    double mu1 = 0.5 * (-b * lambda + root);
    double mu2 = 0.5 * (-b * lambda - root);
    double c1 = (beta - mu2 * a) / (mu1 - mu2);
    double c2_ = a - c1;
    out.amplitude = c1 * std::exp(mu1 * t) + c2_ * std::exp(mu2 * t);
    out.rate = c1 * mu1 * std::exp(mu1 * t) + c2_ * mu2 * std::exp(mu2 * t);
  } else {
    double mu = -0.5 * b * lambda;
    double c1 = beta - mu * a;
    double e = std::exp(mu * t);
    out.amplitude = (a + c1 * t) * e;
    out.rate = (c1 + mu * (a + c1 * t)) * e;
  }
  return out;
}

ModalValue modal_solution_1d(int mode, const PhysicalParams& params, double length,
                             double a, double beta, double t) {
  if (mode < 1) throw std::invalid_argument("mode index must be >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("length must be positive");
  const double kPi = 3.14159265358979323846;
  double f = mode * kPi / length;
  return modal_solution(f * f, params, a, beta, t);
}

double modal_slow_rate(double lambda, const PhysicalParams& params) {
  const double b = params.b, c2 = params.c * params.c;
  const double disc = b * b * lambda * lambda - 4.0 * c2 * lambda;
  if (disc <= 0.0) return 0.5 * b * lambda;
  return 0.5 * (b * lambda - std::sqrt(disc));
}

Trajectory heat_solve(const PhysicalParams& params, const Domain& domain,
                      const BoundaryData& boundary, const ForcingFn& forcing,
                      const Field& v_init, double dt, double t_end, HeatScheme scheme,
                      int store_stride) {
  params.validate();
  check_time_grid(dt, t_end, store_stride);
  if (v_init.size() != domain.n_nodes())
    throw std::invalid_argument("initial heat data length does not match the grid");

  const double b = params.b;
  DirichletOperator op = build_dirichlet_laplacian(domain);
  SparseMatrix eye(domain.n_interior(), domain.n_interior());
  eye.setIdentity();
  double theta = scheme == HeatScheme::Trapezoidal ? 0.5 : 1.0;
  SparseMatrix m = eye - (theta * dt * b) * op.interior;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  solver.compute(m);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("heat step matrix failed to factorise");

  auto forcing_interior = [&](double t) -> Eigen::VectorXd {
    if (!forcing) return Eigen::VectorXd::Zero(domain.n_interior());
    return restrict_interior(forcing(t), domain);
  };

  Trajectory traj;
  traj.dt = dt;
  traj.sample_dt = dt * store_stride;
  const long long n_steps = std::llround(t_end / dt);

  Eigen::VectorXd vi = restrict_interior(v_init, domain);
  auto record = [&](double t, const Eigen::VectorXd& interior) {
    State s;
    s.t = t;
    s.u = extend_field(interior, boundary.value(domain, t), domain);
    Field f = forcing ? Field(forcing(t)) : Field(Field::Zero(domain.n_nodes()));
    Field lap = laplacian(s.u, domain, boundary.value(domain, t));
    s.ut = b * lap + f;
    Eigen::VectorXd brate = boundary.rate(domain, t);
    for (int r = 0; r < domain.n_boundary(); ++r)
      s.ut[domain.boundary_nodes()[r]] = brate[r];
    s.v = VectorField::Zero(domain.n_nodes(), domain.dim());
    traj.states.push_back(std::move(s));
    traj.samples.push_back(
        compute_sample_diagnostics(traj.states.back(), domain, 2.0, 0.0, 0));
  };
  record(0.0, vi);

  for (long long i = 1; i <= n_steps; ++i) {
    double t = (i - 1) * dt;
    double tp = i * dt;
    Eigen::VectorXd rhs;
    if (scheme == HeatScheme::Trapezoidal) {
      rhs = vi + 0.5 * dt *
                     (b * apply_dirichlet(op, vi, boundary.value(domain, t)) +
                      b * (op.boundary * boundary.value(domain, tp)) +
                      forcing_interior(t) + forcing_interior(tp));
    } else {
      rhs = vi + dt * (b * (op.boundary * boundary.value(domain, tp)) +
                       forcing_interior(tp));
    }
    vi = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw NumericalFailure("heat step solve failed");
    if (i % store_stride == 0) record(tp, vi);
  }
  return traj;
}

LiftResult lift_boundary(const BoundaryData& g, const PhysicalParams& params,
                         const Domain& domain, double dt, double t_max,
                         double tail_tolerance, int store_stride) {
  params.validate();
  if (g.value(domain, 0.0).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("lifting requires g(0) = 0 on the boundary");

  Field zero = Field::Zero(domain.n_nodes());
  Trajectory heat = heat_solve(params, domain, g.time_derivative(), nullptr, zero, dt,
                               t_max, HeatScheme::Trapezoidal, store_stride);

  const double lambda0 = analytic_lambda0(domain.geometry());
  const double heat_rate = params.b * lambda0;
  const std::size_t n = heat.states.size();
  const double sdt = heat.sample_dt;

  // Running integral S(t) = int_0^t v, then w(t) = S(t) - S(t_max) - tail
  // with the tail integral estimated by v(t_max)/ (b lambda0).
  std::vector<Field> cumulative(n);
  cumulative[0] = Field::Zero(domain.n_nodes());
  for (std::size_t i = 1; i < n; ++i)
    cumulative[i] =
        cumulative[i - 1] + 0.5 * sdt * (heat.states[i - 1].u + heat.states[i].u);

  const Field& v_last = heat.states[n - 1].u;
  Field tail = v_last / heat_rate;
  double tail_bound = discrete_norm(v_last, domain, {2.0, 0}) / heat_rate;
  if (tail_bound > tail_tolerance)
    throw TruncationError("lift truncation tail exceeds the tolerance: "
                          "increase t_max or relax the tolerance",
                          tail_bound);

  LiftResult out;
  out.tail_bound = tail_bound;
  out.trajectory.dt = heat.dt;
  out.trajectory.sample_dt = sdt;
  out.trajectory.states.reserve(n);
  const Field& s_last = cumulative[n - 1];
  for (std::size_t i = 0; i < n; ++i) {
    State s;
    s.t = heat.states[i].t;
    s.u = cumulative[i] - s_last - tail;
    s.ut = heat.states[i].u;
    s.v = VectorField::Zero(domain.n_nodes(), domain.dim());
    out.trajectory.samples.push_back(
        compute_sample_diagnostics(s, domain, 2.0, 0.0, 0));
    out.trajectory.states.push_back(std::move(s));
  }
  return out;
}

Trajectory solve_lifting_direct(const BoundaryData& g, double b, const Domain& domain,
                                const Field& w0, double dt, double t_end,
                                int store_stride) {
  PhysicalParams params;
  params.b = b;
  params.validate();
  check_time_grid(dt, t_end, store_stride);
  if (w0.size() != domain.n_nodes())
    throw std::invalid_argument("initial lift data length does not match the grid");

  DampedWaveStepper stepper(domain, 0.0, b, dt, g, nullptr);

  State state;
  state.t = 0.0;
  state.u = w0;
  state.ut = Field::Zero(domain.n_nodes());
  state.v = VectorField::Zero(domain.n_nodes(), domain.dim());

  Trajectory traj;
  traj.dt = dt;
  traj.sample_dt = dt * store_stride;
  const long long n_steps = std::llround(t_end / dt);
  auto record = [&](const State& s) {
    traj.states.push_back(s);
    traj.samples.push_back(compute_sample_diagnostics(s, domain, 2.0, 0.0, 0));
  };
  record(state);
  for (long long i = 1; i <= n_steps; ++i) {
    stepper.step(state.u, state.ut, (i - 1) * dt);
    state.t = i * dt;
    if (i % store_stride == 0) record(state);
  }
  return traj;
}

}  // namespace kzn
