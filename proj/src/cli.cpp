#include "strongorbit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "strongorbit/errors.hpp"
#include "strongorbit/io.hpp"

namespace strongorbit {

using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json metadata() { return {{"timestamp", utc_timestamp()}, {"tool", "strongorbit"}}; }

void print_error(std::ostream& out, const std::string& kind, const std::string& message) {
  out << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

std::string resolve_out(const CommandOptions& o, const RunConfig& cfg) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (!cfg.directory.empty()) return cfg.directory;
  return "runs/" + utc_timestamp();
}

bool wants(const RunConfig& cfg, const char* fmt) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) throw ValidationError("--config is required");
  return parse_run_config(read_text_file(path));
}

// solve_report.json, loop.json, trajectory.csv, diagnostics.json for one report
void write_solve_artifacts(const std::string& dir, const BodySystem& sys, const RunConfig& cfg,
                           const SolveReport& report, const Trajectory* traj) {
  const std::filesystem::path d(dir);
  if (wants(cfg, "json")) {
    json rep = {{"schema_version", kSchemaVersion},
                {"metadata", metadata()},
                {"system", to_json(sys)},
                {"harmonics", cfg.harmonics},
                {"nodes", cfg.quadrature_nodes()},
                {"report", to_json(report)},
                {"loop_file", "loop.json"}};
    write_text_file((d / "solve_report.json").string(), dump(rep));
    json loop = to_json(report.path);
    loop["schema_version"] = kSchemaVersion;
    write_text_file((d / "loop.json").string(), dump(loop));
    json diag = solve_diagnostics(sys, cfg, report);
    diag["schema_version"] = kSchemaVersion;
    diag["metadata"] = metadata();
    write_text_file((d / "diagnostics.json").string(), dump(diag));
  }
  if (wants(cfg, "csv")) {
    std::ostringstream csv;
    if (traj) {
      write_trajectory_csv(*traj, csv);
    } else {
      const QuadratureGrid grid(cfg.quadrature_nodes());
      const double T = period_from_path(report.path, grid, sys);
      write_trajectory_csv(rescale(report.path, T, sys, cfg.samples), csv);
    }
    write_text_file((d / "trajectory.csv").string(), csv.str());
  }
}

template <class F>
int guarded(std::ostream& out, std::ostream& err, bool quiet, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    print_error(out, "validation", e.what());
    if (!quiet) err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    print_error(out, "validation", e.what());
    if (!quiet) err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    print_error(out, "numerical", e.what());
    if (!quiet) err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(out, "io", e.what());
    return kExitInput;
  }
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

json solve_diagnostics(const BodySystem& sys, const RunConfig& cfg, const SolveReport& report) {
  const QuadratureGrid grid(cfg.quadrature_nodes());
  const LoopFunctional fn(sys, grid, report.path);
  const ActionValue v = fn.value(report.path);
  const double T = period_from_integrals(v.kinetic, v.mean_excess);
  const Trajectory traj = rescale(report.path, T, sys, cfg.samples);
  const auto er = energy_residuals(traj);
  const auto ident = fn.directional_identity(report.path);
  const double virial = fn.virial_integral(report.path);
  json d = {{"T_R", T},
            {"kinetic", v.kinetic},
            {"mean_excess", v.mean_excess},
            {"f_value", v.f},
            {"lower_bound_margin", v.f - 0.5 * sys.energy() * v.kinetic},
            {"virial_integral", virial},
            {"virial_rel", std::abs(virial) / (2.0 * sys.energy())},
            {"directional_identity", {{"inner_product", ident.inner_product}, {"closed_form", ident.closed_form}}},
            {"eom_residual", eom_residual(traj)},
            {"energy_residual", {{"loop_form", er.loop_form}, {"physical_form", er.physical_form}}},
            {"symmetric_criticality", symmetric_criticality_check(report, sys, grid)},
            {"min_dist", report.min_dist},
            {"min_dist_upper_bound", min_dist_upper_bound(sys)},
            {"multipliers", report.multipliers}};
  if (const auto rs = matched_ring_radius(sys)) d["matched_ring_radius"] = *rs;
  if (cfg.crosscheck_steps) {
    try {
      d["crosscheck"] = to_json(symplectic_crosscheck(traj, cfg.crosscheck_steps));
    } catch (const IntegratorBlowup& e) {
      d["crosscheck"] = {{"error", e.what()}};
    }
  }
  const ContinuationSchedule sched = cfg.continuation.value_or(ContinuationSchedule{});
  if (const auto c = crossing_times(traj, report.radius, sched.d1, sched.d2))
    d["crossings"] = {{"t_minus", c->t_minus}, {"t_plus", c->t_plus}, {"count", c->count}};
  else
    d["crossings"] = nullptr;
  return d;
}

int cmd_solve(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(out, err, o.quiet, [&] {
    const RunConfig cfg = load_config(o.config_path);
    const BodySystem sys = cfg.system();
    const std::string dir = resolve_out(o, cfg);
    const QuadratureGrid grid(cfg.quadrature_nodes());
    try {
      const SolveReport report = minimize(sys, cfg.solve_config(), grid);
      write_solve_artifacts(dir, sys, cfg, report, nullptr);
      if (!o.quiet)
        out << "converged R=" << report.radius << " f=" << report.f_value << " iters=" << report.iters
            << " -> " << dir << '\n';
      return static_cast<int>(kExitOk);
    } catch (const NonConvergence& e) {
      const SolveReport& best = e.best();
      json rep = {{"schema_version", kSchemaVersion},
                  {"metadata", metadata()},
                  {"system", to_json(sys)},
                  {"report", to_json(best)}};
      write_text_file((std::filesystem::path(dir) / "solve_report.json").string(), dump(rep));
      json loop = to_json(best.path);
      loop["schema_version"] = kSchemaVersion;
      write_text_file((std::filesystem::path(dir) / "loop.json").string(), dump(loop));
      print_error(out, "nonconvergence", e.what());
      return static_cast<int>(kExitNumerical);
    }
  });
}

int cmd_sweep(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(out, err, o.quiet, [&] {
    const RunConfig cfg = load_config(o.config_path);
    if (!cfg.continuation) throw ValidationError("sweep needs a continuation block");
    const BodySystem sys = cfg.system();
    const std::string dir = resolve_out(o, cfg);
    SweepOptions so;
    so.quadrature_nodes = cfg.quadrature_nodes();
    so.samples = cfg.samples;
    so.crosscheck_steps = cfg.crosscheck_steps;
    so.cold_start = cfg.cold_start;
    so.threads = o.threads;
    so.throw_on_failure = false;
    const SweepResult res = run_sweep(sys, *cfg.continuation, cfg.solve_config(), so);

    json doc = sweep_body_json(res);
    doc["schema_version"] = kSchemaVersion;
    doc["metadata"] = metadata();
    doc["system"] = to_json(sys);
    doc["schedule"] = to_json(*cfg.continuation);
    doc["solver"] = to_json(cfg.solve_config());
    doc["harmonics"] = cfg.harmonics;
    doc["nodes"] = cfg.quadrature_nodes();
    write_text_file((std::filesystem::path(dir) / "sweep.json").string(), dump(doc));
    for (std::size_t k = 0; k < res.records.size(); ++k)
      if (res.reports[k])
        write_solve_artifacts((std::filesystem::path(dir) / res.records[k].report_id).string(), sys, cfg,
                              *res.reports[k], res.trajectories[k] ? &*res.trajectories[k] : nullptr);

    if (!o.quiet) {
      char line[256];
      std::snprintf(line, sizeof line, "%10s %12s %12s %12s %10s  %s\n", "R", "T_R", "margin+", "margin-",
                    "min_dist", "status");
      out << line;
      for (const auto& r : res.records) {
        std::snprintf(line, sizeof line, "%10.4g %12.6g %12.6g %12.6g %10.4g  %s\n", r.R, r.T_R, r.margin_plus,
                      r.margin_minus, r.min_dist,
                      !r.converged ? "failed" : (r.s_empty ? "S empty" : "ok"));
        out << line;
      }
      out << "classification: " << (res.classification ? res.classification->label : std::string("n/a")) << '\n';
    }
    if (2 * res.failures > res.records.size()) {
      print_error(out, "sweep_failed",
                  std::to_string(res.failures) + " of " + std::to_string(res.records.size()) + " radii failed");
      return static_cast<int>(kExitNumerical);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(out, err, o.quiet, [&] {
    const RunConfig cfg = load_config(o.config_path);
    const BodySystem sys = cfg.system();
    if (o.trajectory_path.empty()) throw ValidationError("--trajectory is required");
    std::ifstream in(o.trajectory_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + o.trajectory_path);
    const Trajectory traj = read_trajectory_csv(in, sys);
    const std::string dir = resolve_out(o, cfg);

    const double eom = eom_residual(traj);
    const auto er = energy_residuals(traj);
    double scale = 0.0;
    for (const auto& p : traj.positions)
      for (std::size_t i = 0; i < sys.n_bodies(); ++i) {
        double s = 0.0;
        for (double x : p.body(i)) s += x * x;
        scale = std::max(scale, std::sqrt(s));
      }
    json cc;
    double closure_rel = std::numeric_limits<double>::infinity();
    const std::size_t n = traj.size();
    const std::size_t steps = n * ((std::max<std::size_t>(o.verify_steps, 1000) + n - 1) / n);
    try {
      const auto rep = symplectic_crosscheck(traj, steps);
      cc = to_json(rep);
      closure_rel = rep.closure_gap / scale;
    } catch (const IntegratorBlowup& e) {
      cc = {{"error", e.what()}};
    }
    const bool eom_ok = eom <= o.eom_tol;
    const bool energy_ok = er.physical_form <= o.energy_tol;
    const bool closure_ok = closure_rel <= o.closure_tol;
    json doc = {{"schema_version", kSchemaVersion},
                {"metadata", metadata()},
                {"system", to_json(sys)},
                {"samples", n},
                {"period", traj.period},
                {"eom_residual", {{"value", eom}, {"threshold", o.eom_tol}, {"pass", eom_ok}, {"method", "finite-difference"}}},
                {"energy_residual", {{"value", er.physical_form}, {"threshold", o.energy_tol}, {"pass", energy_ok}}},
                {"closure_gap",
                 {{"value", std::isfinite(closure_rel) ? json(closure_rel) : json(nullptr)},
                  {"threshold", o.closure_tol},
                  {"pass", closure_ok},
                  {"relative_to", scale}}},
                {"crosscheck", cc},
                {"pass", eom_ok && energy_ok && closure_ok}};
    write_text_file((std::filesystem::path(dir) / "verification.json").string(), dump(doc));
    if (!o.quiet)
      out << "eom " << eom << (eom_ok ? " ok" : " FAIL") << ", energy " << er.physical_form
          << (energy_ok ? " ok" : " FAIL") << ", closure " << closure_rel << (closure_ok ? " ok" : " FAIL") << '\n';
    return static_cast<int>(eom_ok && energy_ok && closure_ok ? kExitOk : kExitNumerical);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic and escaping orbits of strong-force N-body systems at fixed energy"};
  app.require_subcommand(1);
  CommandOptions o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration (block grammar or JSON)")->required();
    sub->add_option("--out", o.out_dir, "output directory (default runs/<timestamp>)");
    sub->add_option("--threads", o.threads, "parallelism cap")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", o.quiet, "suppress the summary");
  };
  auto* solve = app.add_subcommand("solve", "minimize at the configured radius");
  common(solve);
  auto* sweep = app.add_subcommand("sweep", "continuation over the configured radii");
  common(sweep);
  auto* verify = app.add_subcommand("verify", "check a trajectory CSV against the system");
  common(verify);
  verify->add_option("--trajectory", o.trajectory_path, "trajectory CSV")->required();
  verify->add_option("--eom-tol", o.eom_tol, "EOM residual threshold");
  verify->add_option("--energy-tol", o.energy_tol, "relative energy residual threshold");
  verify->add_option("--closure-tol", o.closure_tol, "relative closure gap threshold");
  verify->add_option("--steps", o.verify_steps, "integrator steps per period");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(out, "usage", e.what());
    err << app.help();
    return kExitInput;
  }
  if (solve->parsed()) return cmd_solve(o, out, err);
  if (sweep->parsed()) return cmd_sweep(o, out, err);
  return cmd_verify(o, out, err);
}

}  // namespace strongorbit
