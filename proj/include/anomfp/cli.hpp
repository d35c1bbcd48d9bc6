#pragma once

#include <cmath>
#include <cstdlib>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anomfp/eigen.hpp"
#include "anomfp/io.hpp"
#include "anomfp/kinetic.hpp"
#include "anomfp/rescaled.hpp"
#include "anomfp/validation.hpp"

namespace anomfp::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kSolverFailure = 2, kConfigError = 3 };

namespace detail {

inline std::shared_ptr<const Grid> make_grid(const RunConfig& c, const ModelParams& p) {
  const RunConfig r = c.resolved();
  return std::make_shared<const Grid>(build_grid(p, r.grid.n_v1, r.grid.n_r, r.grid.v1_max, r.grid.r_max));
}

inline SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.residual_tolerance = c.tolerances.solver;
  return o;
}

inline RootOptions root_options(const RunConfig& c) {
  RootOptions o;
  o.tolerance = c.tolerances.rootfind;
  return o;
}

inline RescaledOptions rescaled_options(const RunConfig& c) {
  RescaledOptions o;
  o.s_in = c.rescaled.s_in;
  o.s_out = c.rescaled.s_out;
  o.n_radial = c.rescaled.resolution;
  o.n_theta = c.rescaled.n_theta;
  return o;
}

inline json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

inline json report_json(const InequalityReport& r) {
  return json{{"name", r.name},
              {"d", r.d},
              {"beta", r.beta},
              {"eta", r.eta},
              {"trials", r.trials},
              {"constant", r.constant},
              {"constant_refined", r.constant_refined},
              {"constant_low", r.constant_low},
              {"constant_low_refined", r.constant_low_refined},
              {"worst_ratio", r.worst_ratio},
              {"tolerance", r.tolerance},
              {"pass", r.pass},
              {"detail", r.detail}};
}

inline CsvTable sweep_table(const std::vector<EigenResult>& points) {
  CsvTable t({"eta", "re_mu", "im_mu", "re_lambda", "im_lambda", "eigen_residual", "constraint_residual",
              "iterations"});
  for (const auto& p : points)
    t.add({p.eta, p.mu.real(), p.mu.imag(), p.lambda_tilde.real(), p.lambda_tilde.imag(), p.eigen_residual,
           p.constraint_residual, static_cast<double>(p.iterations)});
  return t;
}

inline json fit_json(const ScalingFit& f, const ModelParams& p) {
  return json{{"alpha_fit", f.alpha_fit},
              {"alpha_expected", p.alpha},
              {"alpha_rel_error", std::abs(f.alpha_fit / p.alpha - 1.0)},
              {"kappa_fit", f.kappa_fit},
              {"kappa_loglog", f.kappa_loglog},
              {"r_squared", f.r_squared},
              {"correction_exponent", f.correction_exponent},
              {"window_begin", f.window_begin},
              {"window_trimmed", f.window_trimmed}};
}

}  // namespace detail

inline int cmd_eigen(const RunConfig& config, double eta, std::ostream& out) {
  const ModelParams p = ModelParams::make(config.model.d, config.model.beta);
  const auto grid = detail::make_grid(config, p);
  if (eta != 0.0 && grid->v1_max < required_v1_max(eta))
    throw CoverageError("v1_max = " + sci(grid->v1_max) + " is below 8 |eta|^{-1/3} = " + sci(required_v1_max(eta)));
  PenalizedSolver solver(grid, p, detail::solver_options(config));
  OutputSet files(config, "eigen");
  EigenResult r;
  if (eta == 0.0) {
    r = trivial_eigen(solver);
  } else {
    const Drift drift = eta < 0.0 ? Drift::Reversed : Drift::Forward;
    const double a = std::abs(eta);
    r = find_lambda(solver, a, first_order_seed(solver, a, drift), drift, detail::root_options(config));
  }
  CsvTable ef({"v1", "r", "re_m", "im_m"});
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const cplx m = r.eigenfunction[static_cast<Eigen::Index>(k)];
    ef.add({grid->v1_at(k), grid->r_at(k), m.real(), m.imag()});
  }
  files.csv("eigenfunction.csv", ef);
  json j{{"d", p.d},
         {"beta", p.beta},
         {"eta", eta},
         {"alpha", p.alpha},
         {"mu", detail::complex_json(r.mu)},
         {"re_mu", r.mu.real()},
         {"lambda_tilde", detail::complex_json(r.lambda_tilde)},
         {"re_mu_scaled", eta == 0.0 ? 0.0 : r.mu.real() * std::pow(std::abs(eta), -p.alpha)},
         {"eigen_residual", r.eigen_residual},
         {"constraint_residual", r.constraint_residual},
         {"iterations", r.iterations}};
  files.json_file("eigen.json", j);
  files.manifest("ok");
  out << "mu = " << format_double(r.mu.real()) << " + " << format_double(r.mu.imag()) << "i"
      << "  (eigen residual " << sci(r.eigen_residual) << ", |B| " << sci(r.constraint_residual) << ")\n";
  return kOk;
}

inline int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const ModelParams p = ModelParams::make(config.model.d, config.model.beta);
  PenalizedSolver solver(detail::make_grid(config, p), p, detail::solver_options(config));
  const auto etas = log_spaced(config.sweep.eta_max, config.sweep.eta_min, config.sweep.n_points);
  OutputSet files(config, "sweep");
  const SweepResult s = scaling_sweep(solver, etas, detail::root_options(config));
  files.csv("sweep.csv", detail::sweep_table(s.points));
  json j{{"d", p.d}, {"beta", p.beta}, {"complete", s.complete}, {"points", s.points.size()}};
  if (!s.complete) {
    j["failure"] = s.failure;
    files.json_file("sweep.json", j);
    files.manifest("failed");
    err << "sweep stopped after " << s.points.size() << " points: " << s.failure << "\n";
    return kSolverFailure;
  }
  j["fit"] = detail::fit_json(s.fit, p);
  files.json_file("sweep.json", j);
  files.manifest("ok");
  out << "alpha_fit = " << s.fit.alpha_fit << " (expected " << p.alpha << ", rel. error "
      << std::abs(s.fit.alpha_fit / p.alpha - 1.0) << ")\n"
      << "kappa_fit = " << s.fit.kappa_fit << "\n";
  return kOk;
}

inline int cmd_kappa(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const ModelParams p = ModelParams::make(config.model.d, config.model.beta);
  OutputSet files(config, "kappa");
  const H0Solution h0 = solve_h0(p, detail::rescaled_options(config));
  const KappaResult k = compute_kappa(h0, p, config.tolerances.quadrature);
  CsvTable prof({"s", "re_h0", "im_h0", "kappa_integrand"});
  for (const auto& row : radial_profile(h0)) prof.add({row.s, row.h0.real(), row.h0.imag(), row.integrand});
  files.csv("h0_profile.csv", prof);

  PenalizedSolver solver(detail::make_grid(config, p), p, detail::solver_options(config));
  const SweepResult s = scaling_sweep(solver, log_spaced(config.sweep.eta_max, config.sweep.eta_min, config.sweep.n_points),
                                      detail::root_options(config));
  files.csv("sweep.csv", detail::sweep_table(s.points));
  json j{{"d", p.d},
         {"beta", p.beta},
         {"kappa_h0", k.kappa},
         {"kappa_h0_full_space", k.kappa_full_space},
         {"kappa_h0_tail", k.tail},
         {"kappa_dirichlet", dirichlet_kappa(h0, p)},
         {"sweep_complete", s.complete}};
  if (!s.complete) {
    j["failure"] = s.failure;
    files.json_file("kappa.json", j);
    files.manifest("failed");
    err << "kappa_h0 = " << k.kappa << "; sweep failed: " << s.failure << "\n";
    return kSolverFailure;
  }
  const double gap = std::abs(s.fit.kappa_fit - k.kappa) / k.kappa;
  j["kappa_fit"] = s.fit.kappa_fit;
  j["relative_gap"] = gap;
  j["fit"] = detail::fit_json(s.fit, p);
  files.json_file("kappa.json", j);
  files.manifest("ok");
  out << "kappa_h0  = " << format_double(k.kappa) << "\n"
      << "kappa_fit = " << format_double(s.fit.kappa_fit) << "\n"
      << "relative gap = " << gap << "\n";
  return kOk;
}

inline int cmd_simulate(const RunConfig& config, std::ostream& out) {
  const ModelParams p = ModelParams::make(config.model.d, config.model.beta);
  const auto grid = detail::make_grid(config, p);
  double kappa = config.sim.kappa;
  if (kappa <= 0.0) kappa = compute_kappa(solve_h0(p, detail::rescaled_options(config)), p, config.tolerances.quadrature).kappa;
  const CVector g0 = well_prepared(*grid, p, 1.0, config.sim.bump);
  KineticOptions ko;
  std::vector<std::future<LimitTable>> jobs;
  for (double xi : config.sim.xi_list)
    jobs.push_back(std::async(std::launch::async, [&, xi] {
      return limit_comparison(grid, p, xi, config.sim.eps_list, g0, config.sim.t_end, kappa, config.sim.n_steps, ko,
                              detail::root_options(config));
    }));
  std::vector<LimitTable> tables;
  for (auto& j : jobs) tables.push_back(j.get());

  OutputSet files(config, "simulate");
  CsvTable series({"xi", "epsilon", "t", "re_rho", "im_rho", "re_reference", "im_reference", "abs_error"});
  json rows = json::array();
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      const cplx rho0 = r.run.rho_hat.front();
      for (std::size_t i = 0; i < r.run.times.size(); ++i) {
        const cplx ref = fractional_reference(t.xi, r.run.times[i], rho0, kappa, p.alpha);
        series.add({t.xi, r.epsilon, r.run.times[i], r.run.rho_hat[i].real(), r.run.rho_hat[i].imag(), ref.real(),
                    ref.imag(), std::abs(r.run.rho_hat[i] - ref)});
      }
      rows.push_back({{"xi", t.xi},
                      {"epsilon", r.epsilon},
                      {"theta", r.theta},
                      {"error", r.error},
                      {"error_estimate", r.error_estimate},
                      {"mu", detail::complex_json(r.mu)},
                      {"rate_fitted", detail::complex_json(r.rate_fitted)},
                      {"rate_expected", detail::complex_json(r.rate_expected)},
                      {"rate_mismatch", r.rate_mismatch}});
      out << "xi " << t.xi << "  eps " << r.epsilon << "  e = " << sci(r.error) << "  rate mismatch "
          << sci(r.rate_mismatch) << "\n";
    }
  }
  files.csv("simulate.csv", series);
  json decreasing = json::array();
  for (const auto& t : tables) decreasing.push_back({{"xi", t.xi}, {"strictly_decreasing", t.strictly_decreasing()}});
  files.json_file("simulate.json", json{{"d", p.d}, {"beta", p.beta}, {"kappa", kappa}, {"alpha", p.alpha},
                                        {"rows", rows}, {"monotone", decreasing}});
  files.manifest("ok");
  return kOk;
}

inline int cmd_validate(const RunConfig& config, bool all_cases, std::ostream& out) {
  std::vector<ValidationCase> cases;
  if (all_cases)
    cases = shipped_cases();
  else
    cases.push_back({config.model.d, config.model.beta});
  std::vector<std::future<std::vector<InequalityReport>>> jobs;
  for (const auto& c : cases)
    jobs.push_back(std::async(std::launch::async, [&config, c] {
      const ModelParams p = ModelParams::make(c.d, c.beta);
      const Grid g = validation_grid(p);
      const int n = config.validation.trials;
      const std::uint64_t seed = config.validation.seed;
      return std::vector<InequalityReport>{hardy_poincare_check(g, p, n, seed),
                                           eta_poincare_sweep(g, p, {0.1, 0.01}, n, seed),
                                           norm_equivalence_check(g, p, 0.1, n, seed)};
    }));
  OutputSet files(config, "validate");
  json reports = json::array();
  bool ok = true;
  for (auto& j : jobs) {
    for (const auto& r : j.get()) {
      reports.push_back(detail::report_json(r));
      ok = ok && r.pass;
      out << (r.pass ? "pass " : "FAIL ") << "d=" << r.d << " beta=" << r.beta << " " << r.name << ": " << r.detail
          << "\n";
    }
  }
  files.json_file("validation.json", json{{"reports", reports}, {"all_pass", ok}});
  files.manifest(ok ? "ok" : "failed");
  return ok ? kOk : kCheckFailed;
}

/// Full command line front end; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Eigen-solutions and fractional diffusion limits of the kinetic Fokker-Planck equation"};
  app.set_version_flag("--version", std::string(ANOMFP_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<int> d, n_v1, n_r, n_points, resolution, n_steps, trials;
  std::optional<double> beta, v1_max, r_max, eta_min, eta_max, s_in, s_out, t_end, kappa;
  std::optional<std::vector<double>> xi_list, eps_list;
  std::optional<std::string> out_dir;
  double eta = 0.01;
  bool all_cases = false;

  app.add_option("--config", config_path, "JSON config file (default: $ANOMFP_CONFIG)");
  app.add_option("--d", d, "velocity dimension");
  app.add_option("--beta", beta, "tail exponent of the equilibrium");
  app.add_option("--n-v1", n_v1, "nodes along v1");
  app.add_option("--n-r", n_r, "radial nodes (d >= 2)");
  app.add_option("--v1-max", v1_max, "velocity box half-width");
  app.add_option("--r-max", r_max, "radial extent (d >= 2)");
  app.add_option("--out", out_dir, "output directory");

  auto* eigen = app.add_subcommand("eigen", "eigen-couple at one eta");
  eigen->add_option("--eta", eta, "frequency parameter (negative reverses the drift)");
  auto* sweep = app.add_subcommand("sweep", "eigenvalue sweep and scaling fit");
  auto* kappa_cmd = app.add_subcommand("kappa", "kappa from the limit problem and from the sweep");
  for (auto* sc : {sweep, kappa_cmd}) {
    sc->add_option("--eta-min", eta_min, "smallest eta");
    sc->add_option("--eta-max", eta_max, "largest eta");
    sc->add_option("--n", n_points, "number of log-spaced eta");
  }
  kappa_cmd->add_option("--s-in", s_in, "inner radius of the limit problem");
  kappa_cmd->add_option("--s-out", s_out, "outer radius of the limit problem");
  kappa_cmd->add_option("--resolution", resolution, "radial cells of the limit problem");
  auto* simulate = app.add_subcommand("simulate", "Fourier-mode kinetic runs against the fractional limit");
  simulate->add_option("--xi", xi_list, "frequencies")->delimiter(',');
  simulate->add_option("--eps", eps_list, "decreasing epsilon values")->delimiter(',');
  simulate->add_option("--t-end", t_end, "final time");
  simulate->add_option("--n-steps", n_steps, "time steps");
  simulate->add_option("--kappa", kappa, "diffusion coefficient (default: computed)");
  auto* validate = app.add_subcommand("validate", "functional inequality suite");
  validate->add_option("--trials", trials, "random trials per check");
  validate->add_flag("--all-cases", all_cases, "run the four shipped (d, beta) cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    RunConfig config;
    if (config_path.empty())
      if (const char* env = std::getenv("ANOMFP_CONFIG"); env && *env) config_path = env;
    if (!config_path.empty()) config = load_config(config_path);
    auto set = [](auto& target, const auto& opt) {
      if (opt) target = *opt;
    };
    set(config.model.d, d);
    set(config.model.beta, beta);
    set(config.grid.n_v1, n_v1);
    set(config.grid.n_r, n_r);
    set(config.grid.v1_max, v1_max);
    set(config.grid.r_max, r_max);
    set(config.sweep.eta_min, eta_min);
    set(config.sweep.eta_max, eta_max);
    set(config.sweep.n_points, n_points);
    set(config.rescaled.s_in, s_in);
    set(config.rescaled.s_out, s_out);
    set(config.rescaled.resolution, resolution);
    set(config.sim.xi_list, xi_list);
    set(config.sim.eps_list, eps_list);
    set(config.sim.t_end, t_end);
    set(config.sim.n_steps, n_steps);
    set(config.sim.kappa, kappa);
    set(config.validation.trials, trials);
    set(config.output.directory, out_dir);
    validate_config(config);

    if (*eigen) return cmd_eigen(config, eta, out);
    if (*sweep) return cmd_sweep(config, out, err);
    if (*kappa_cmd) return cmd_kappa(config, out, err);
    if (*simulate) return cmd_simulate(config, out);
    if (*validate) return cmd_validate(config, all_cases, out);
  } catch (const ExcludedCaseError& e) {
    err << "excluded case: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CoverageError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kConfigError;
}

}  // namespace anomfp::cli
