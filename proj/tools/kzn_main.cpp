#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kzn/diagnostics.hpp"
#include "kzn/errors.hpp"
#include "kzn/linear_solver.hpp"
#include "kzn/scenario.hpp"
#include "kzn/version.hpp"

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  unsigned long seed = 0;
  bool seed_set = false;
  bool strict_flag = false;
  bool permissive_flag = false;
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "load a key = value config file");
  cmd->add_option("--preset", opts.preset_name, "start from a named preset");
  cmd->add_option("--out", opts.out_dir, "artifact directory")
      ->capture_default_str();
  cmd->add_option("--set", opts.overrides, "override one key (key=value)")
      ->type_name("KEY=VALUE");
  cmd->add_option("--seed", opts.seed, "random seed for generated data")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_flag("--strict", opts.strict_flag,
                "reject incompatible boundary/initial data");
  cmd->add_flag("--permissive", opts.permissive_flag,
                "run through compatibility violations");
}

kzn::ScenarioConfig resolve_config(const CommonOpts& opts) {
  if (!opts.preset_name.empty() && !opts.config_path.empty())
    throw std::invalid_argument("--config and --preset are mutually exclusive");
  kzn::ScenarioConfig config;
  if (!opts.preset_name.empty()) config = kzn::preset(opts.preset_name);
  if (!opts.config_path.empty()) config = kzn::parse_config_file(opts.config_path);
  for (const std::string& o : opts.overrides) kzn::apply_override(config, o);
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.strict_flag && opts.permissive_flag)
    throw std::invalid_argument("--strict and --permissive are mutually exclusive");
  if (opts.strict_flag) config.strict = true;
  if (opts.permissive_flag) config.strict = false;
  return config;
}

int cmd_run(const CommonOpts& opts) {
  kzn::ScenarioConfig config = resolve_config(opts);
  kzn::RunResult result = kzn::run_scenario(config, opts.out_dir, std::cerr);
  kzn::write_summary(result.summary, std::cout);
  return result.exit_code;
}

int cmd_decay(const CommonOpts& opts) {
  kzn::ScenarioConfig config = resolve_config(opts);
  kzn::RunResult result = kzn::run_scenario(config, opts.out_dir, std::cerr);
  if (result.exit_code != kzn::kExitOk) {
    kzn::write_summary(result.summary, std::cout);
    return result.exit_code;
  }
  for (const auto& [key, value] : result.summary.entries) {
    if (key.rfind("rate_", 0) == 0 || key.rfind("derivative_", 0) == 0 ||
        key == "omega0" || key == "pass_decay" || key == "vinf_tail_bound")
      std::cout << key << " = " << value << "\n";
  }
  return kzn::kExitOk;
}

void print_study(const std::string& label, const kzn::ConvergenceStudy& study) {
  std::cout << label << ":\n";
  for (std::size_t i = 0; i < study.errors.size(); ++i) {
    std::cout << "  level " << i << "  error " << fmt(study.errors[i]);
    if (i > 0) std::cout << "  order " << fmt(study.observed_orders[i - 1]);
    std::cout << "\n";
  }
  std::cout << "  status "
            << (study.status == kzn::StudyStatus::Ok
                    ? "ok"
                    : study.status == kzn::StudyStatus::Invalid ? "invalid"
                                                                : "saturated")
            << "\n";
}

int cmd_converge(const std::string& target, int levels) {
  if (target == "modal-dt")
    print_study(target, kzn::modal_dt_study(levels));
  else if (target == "modal-h")
    print_study(target, kzn::modal_h_study(levels));
  else if (target == "manufactured-dt")
    print_study(target, kzn::manufactured_dt_study(levels));
  else if (target == "manufactured-h")
    print_study(target, kzn::manufactured_h_study(levels));
  else if (target == "eigen-interval")
    print_study(target, kzn::eigenvalue_study("interval", levels));
  else if (target == "eigen-square")
    print_study(target, kzn::eigenvalue_study("rectangle", levels));
  else
    throw std::invalid_argument("unknown convergence target '" + target + "'");
  return kzn::kExitOk;
}

int cmd_oracle() {
  // Time-stepped linear solution against the closed modal form.
  print_study("linear-vs-modal-dt", kzn::modal_dt_study(2));
  print_study("linear-vs-manufactured-dt", kzn::manufactured_dt_study(2));

  // Lift construction against direct stepping of the same problem.
  kzn::ScenarioConfig cfg;
  cfg.data_family = "boundary-bump";
  cfg.amplitude = 1.0;
  cfg.cells = 60;
  kzn::Domain domain = kzn::make_domain(cfg);
  kzn::ScenarioData data = kzn::build_data(cfg, domain);
  kzn::PhysicalParams params;
  kzn::LiftResult lift =
      kzn::lift_boundary(data.g, params, domain, 2e-3, 10.0, 1e-3);
  kzn::Trajectory direct = kzn::solve_lifting_direct(
      data.g, params.b, domain, lift.trajectory.states.front().u, 2e-3, 10.0);
  double sup = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < lift.trajectory.size(); ++i) {
    sup = std::max(sup, (lift.trajectory.states[i].u - direct.states[i].u)
                            .cwiseAbs()
                            .maxCoeff());
    ref = std::max(ref, lift.trajectory.states[i].u.cwiseAbs().maxCoeff());
  }
  std::cout << "lift-vs-direct:\n  rel_sup_diff " << fmt(sup / ref)
            << "\n  tail_bound " << fmt(lift.tail_bound) << "\n";
  return kzn::kExitOk;
}

int cmd_compat(const CommonOpts& opts) {
  kzn::ScenarioConfig config = resolve_config(opts);
  kzn::Domain domain = kzn::make_domain(config);
  kzn::ScenarioData data = kzn::build_data(config, domain);
  kzn::PhysicalParams params;
  params.c = config.c;
  params.b = config.b;
  params.k = config.k;
  params.rho0 = config.rho0;
  params.validate();
  kzn::CompatReport report = kzn::check_compatibility(
      data.g, data.u0, data.u1, config.p, domain, config.compat_tol);
  std::cout << "p = " << fmt(report.p) << "\n";
  std::cout << "tolerance = " << fmt(report.tolerance) << "\n";
  std::cout << "order0_ok = " << (report.order0_ok ? "true" : "false") << "\n";
  std::cout << "order1_ok = "
            << (report.order1_ok ? (*report.order1_ok ? "true" : "false") : "na")
            << "\n";
  std::cout << "max_violation = " << fmt(report.max_violation) << "\n";
  std::cout << "compatible = " << (report.ok() ? "true" : "false") << "\n";
  return report.ok() || !config.strict ? kzn::kExitOk : kzn::kExitValidation;
}

int cmd_perturb(const CommonOpts& opts, const std::string& direction,
                std::vector<double> deltas) {
  kzn::ScenarioConfig config = resolve_config(opts);
  if (deltas.empty()) deltas = {1e-2, 1e-3, 1e-4};
  kzn::PerturbationStudy study = kzn::run_perturbation(config, direction, deltas);
  std::cout << "direction = " << direction << "\n";
  for (std::size_t i = 0; i < study.deltas.size(); ++i) {
    std::cout << "delta " << fmt(study.deltas[i]) << "  ratio "
              << (study.succeeded[i] ? fmt(study.ratios[i]) : "failed") << "\n";
  }
  return kzn::kExitOk;
}

int cmd_presets() {
  for (const std::string& name : kzn::preset_names()) {
    std::cout << name << "\n    " << kzn::preset_description(name) << "\n";
  }
  return kzn::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped wave and quasilinear acoustics solver"};
  app.set_version_flag("--version", kzn::kVersion);
  app.require_subcommand(1);

  CommonOpts run_opts, decay_opts, compat_opts, perturb_opts;

  CLI::App* run = app.add_subcommand("run", "run one scenario and write artifacts");
  attach_common(run, run_opts);

  CLI::App* decay =
      app.add_subcommand("decay", "run a scenario and print its fitted decay rates");
  attach_common(decay, decay_opts);

  std::string converge_target = "modal-dt";
  int converge_levels = 3;
  CLI::App* converge =
      app.add_subcommand("converge", "refinement study against a pinned oracle");
  converge
      ->add_option("target", converge_target,
                   "modal-dt | modal-h | manufactured-dt | manufactured-h | "
                   "eigen-interval | eigen-square")
      ->required();
  converge->add_option("--levels", converge_levels, "refinement levels")
      ->capture_default_str();

  CLI::App* oracle =
      app.add_subcommand("oracle", "quick pass over the oracle-backed studies");

  CLI::App* compat =
      app.add_subcommand("compat", "compatibility check for a scenario's data");
  attach_common(compat, compat_opts);

  std::string perturb_direction = "u0";
  std::vector<double> perturb_deltas;
  CLI::App* perturb =
      app.add_subcommand("perturb", "continuous-dependence probe of a scenario");
  attach_common(perturb, perturb_opts);
  perturb->add_option("--direction", perturb_direction, "u0 | u1 | v0 | g | all")
      ->capture_default_str();
  perturb->add_option("--delta", perturb_deltas, "perturbation sizes");

  CLI::App* presets_cmd =
      app.add_subcommand("presets", "list the built-in scenario presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (decay->parsed()) return cmd_decay(decay_opts);
    if (converge->parsed()) return cmd_converge(converge_target, converge_levels);
    if (oracle->parsed()) return cmd_oracle();
    if (compat->parsed()) return cmd_compat(compat_opts);
    if (perturb->parsed())
      return cmd_perturb(perturb_opts, perturb_direction, perturb_deltas);
    if (presets_cmd->parsed()) return cmd_presets();
  } catch (const kzn::UnsupportedExponent& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kzn::kExitValidation;
  } catch (const kzn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kzn::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kzn::kExitValidation;
  } catch (const kzn::DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kzn::kExitDegeneracy;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kzn::kExitNumericalFailure;
  }
  return kzn::kExitOk;
}
