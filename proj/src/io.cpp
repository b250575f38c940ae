#include "strongorbit/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <algorithm>

#include "strongorbit/errors.hpp"

namespace strongorbit {

using nlohmann::json;

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("trajectory csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

json to_json(const BodySystem& sys) {
  return {{"masses", sys.masses()}, {"dim", sys.dim()}, {"alpha", sys.alpha()}, {"energy", sys.energy()}};
}

BodySystem system_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("system block must be an object");
  try {
    return BodySystem(require<std::vector<double>>(j, "masses"), require<std::size_t>(j, "dim"),
                      require<double>(j, "alpha"), require<double>(j, "energy"));
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
}

json to_json(const LoopPath& path) {
  json bodies = json::array();
  for (std::size_t i = 0; i < path.n_bodies(); ++i) {
    json slots = json::array();
    for (std::size_t h = 0; h < path.slots(); ++h) {
      std::vector<double> c(path.dim()), s(path.dim());
      for (std::size_t k = 0; k < path.dim(); ++k) {
        c[k] = path.cos_coeff(i, h, k);
        s[k] = path.sin_coeff(i, h, k);
      }
      slots.push_back({{"k", path.frequency(h)}, {"cos", c}, {"sin", s}});
    }
    bodies.push_back(std::move(slots));
  }
  return {{"n_bodies", path.n_bodies()},
          {"dim", path.dim()},
          {"harmonics", path.harmonics()},
          {"basis", path.basis() == Basis::odd ? "odd" : "full"},
          {"bodies", std::move(bodies)}};
}

LoopPath loop_from_json(const json& j) {
  const auto basis_name = require<std::string>(j, "basis");
  if (basis_name != "odd" && basis_name != "full") throw ValidationError("loop basis must be 'odd' or 'full'");
  LoopPath p(require<std::size_t>(j, "n_bodies"), require<std::size_t>(j, "dim"), require<std::size_t>(j, "harmonics"),
             basis_name == "odd" ? Basis::odd : Basis::full);
  const json& bodies = j.at("bodies");
  if (!bodies.is_array() || bodies.size() != p.n_bodies()) throw ValidationError("loop: wrong number of bodies");
  for (std::size_t i = 0; i < p.n_bodies(); ++i) {
    if (!bodies[i].is_array() || bodies[i].size() != p.slots()) throw ValidationError("loop: wrong number of harmonics");
    for (std::size_t h = 0; h < p.slots(); ++h) {
      const json& e = bodies[i][h];
      if (require<int>(e, "k") != p.frequency(h)) throw ValidationError("loop: unexpected frequency");
      const auto c = require<std::vector<double>>(e, "cos");
      const auto s = require<std::vector<double>>(e, "sin");
      if (c.size() != p.dim() || s.size() != p.dim()) throw ValidationError("loop: coefficient has wrong dimension");
      for (std::size_t k = 0; k < p.dim(); ++k) {
        p.cos_coeff(i, h, k) = c[k];
        p.sin_coeff(i, h, k) = s[k];
      }
    }
  }
  return p;
}

json to_json(const SolveConfig& c) {
  return {{"radius", c.radius},
          {"penalty_schedule", c.penalty_schedule},
          {"grad_tol", c.grad_tol},
          {"max_iters", c.max_iters},
          {"ls_backtrack", c.ls_backtrack},
          {"ls_max_steps", c.ls_max_steps},
          {"min_dist_guard", c.min_dist_guard},
          {"seed", c.seed},
          {"perturbation", c.perturbation},
          {"retries", c.retries}};
}

SolveConfig solve_config_from_json(const json& j, SolveConfig c) {
  static const char* known[] = {"radius",         "penalty_schedule", "grad_tol", "max_iters",    "ls_backtrack",
                                "ls_max_steps",   "min_dist_guard",   "seed",     "perturbation", "retries"};
  for (const auto& [key, _] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ValidationError("solver block: unknown key '" + key + "'");
  c.radius = get_or(j, "radius", c.radius);
  c.penalty_schedule = get_or(j, "penalty_schedule", c.penalty_schedule);
  c.grad_tol = get_or(j, "grad_tol", c.grad_tol);
  c.max_iters = get_or(j, "max_iters", c.max_iters);
  c.ls_backtrack = get_or(j, "ls_backtrack", c.ls_backtrack);
  c.ls_max_steps = get_or(j, "ls_max_steps", c.ls_max_steps);
  c.min_dist_guard = get_or(j, "min_dist_guard", c.min_dist_guard);
  c.seed = get_or(j, "seed", c.seed);
  c.perturbation = get_or(j, "perturbation", c.perturbation);
  c.retries = get_or(j, "retries", c.retries);
  return c;
}

json to_json(const SolveReport& r) {
  return {{"radius", r.radius},
          {"converged", r.converged},
          {"f_value", num(r.f_value)},
          {"f_start", num(r.f_start)},
          {"kinetic", num(r.kinetic)},
          {"mean_excess", num(r.mean_excess)},
          {"projected_grad_norm", num(r.projected_grad_norm)},
          {"grad_tol", num(r.grad_tol)},
          {"endpoint_res", num(r.endpoint_res)},
          {"virial_res", num(r.virial_res)},
          {"min_dist", num(r.min_dist)},
          {"min_dist_guard", num(r.min_dist_guard)},
          {"multipliers", r.multipliers},
          {"iters", r.iters},
          {"stages", r.stages},
          {"seed", r.seed},
          {"message", r.message}};
}

json to_json(const ContinuationSchedule& s) { return {{"radii", s.radii}, {"d1", s.d1}, {"d2", s.d2}}; }

json to_json(const ContinuationRecord& r) {
  return {{"R", r.R},
          {"report_id", r.report_id},
          {"converged", r.converged},
          {"warm_started", r.warm_started},
          {"s_empty", r.s_empty},
          {"cause", r.cause},
          {"T_R", num(r.T_R)},
          {"t_minus", num(r.t_minus)},
          {"t_plus", num(r.t_plus)},
          {"margin_minus", num(r.margin_minus)},
          {"margin_plus", num(r.margin_plus)},
          {"t_star", num(r.t_star)},
          {"escape_speed", num(r.escape_speed)},
          {"min_dist", num(r.min_dist)},
          {"f_value", num(r.f_value)},
          {"virial_res", num(r.virial_res)},
          {"eom_residual", num(r.eom_residual)},
          {"energy_residual", num(r.energy_residual)},
          {"position_gap", num(r.position_gap)},
          {"energy_drift", num(r.energy_drift)},
          {"iters", r.iters}};
}

json to_json(const ClassificationReport& c) {
  return {{"label", c.label},
          {"a_margins_trend", {{"pass", c.a_pass}, {"violations", c.a_violations}}},
          {"b_radial_speed",
           {{"pass", c.b_pass},
            {"slope", num(c.b_slope)},
            {"expected", num(c.b_expected)},
            {"rel_error", num(c.b_rel_error)},
            {"m_effective", num(c.m_effective)}}},
          {"c_core_radius", {{"pass", c.c_pass}, {"core_min", num(c.c_core_min)}, {"threshold", num(c.c_threshold)}}},
          {"passage", {{"center", num(c.passage_center)}, {"half_width", num(c.passage_half_width)}}}};
}

json to_json(const CrosscheckReport& c) {
  return {{"steps", c.steps},
          {"max_position_gap", num(c.max_position_gap)},
          {"energy_drift", num(c.energy_drift)},
          {"closure_gap", num(c.closure_gap)}};
}

json sweep_body_json(const SweepResult& res) {
  json records = json::array();
  for (const auto& r : res.records) records.push_back(to_json(r));
  json checks = {
      {"margins_trend",
       {{"from_index", res.trend.from_index},
        {"violations_plus", res.trend.violations_plus},
        {"violations_minus", res.trend.violations_minus},
        {"pass", res.trend.pass}}},
      {"min_dist_band",
       {{"min", num(res.band.min)}, {"max", num(res.band.max)}, {"ratio", num(res.band.ratio)}, {"pass", res.band.pass}}},
      {"min_dist_upper_bound",
       {{"bound", num(res.upper_bound.bound)},
        {"worst", num(res.upper_bound.worst)},
        {"violations", res.upper_bound.violations},
        {"pass", res.upper_bound.pass}}},
      {"failures", res.failures}};
  if (res.warm_cold)
    checks["warm_cold"] = {{"R", res.warm_cold->R},
                           {"f_warm", num(res.warm_cold->f_warm)},
                           {"f_cold", num(res.warm_cold->f_cold)},
                           {"rel_diff", num(res.warm_cold->rel_diff)},
                           {"pass", res.warm_cold->pass}};
  return {{"records", std::move(records)},
          {"checks", std::move(checks)},
          {"classification", res.classification ? to_json(*res.classification) : json(nullptr)}};
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const std::size_t d = traj.sys.dim();
  out << "t,body";
  for (std::size_t c = 1; c <= d; ++c) out << ",x" << c;
  for (std::size_t c = 1; c <= d; ++c) out << ",v" << c;
  out << '\n';
  for (std::size_t m = 0; m < traj.size(); ++m) {
    const std::string t = fmt(traj.time(m));
    for (std::size_t i = 0; i < traj.sys.n_bodies(); ++i) {
      out << t << ',' << i;
      for (std::size_t c = 0; c < d; ++c) out << ',' << fmt(traj.positions[m](i, c));
      for (std::size_t c = 0; c < d; ++c) out << ',' << fmt(traj.velocities[m](i, c));
      out << '\n';
    }
  }
}

Trajectory read_trajectory_csv(std::istream& in, const BodySystem& sys) {
  const std::size_t nb = sys.n_bodies();
  const std::size_t d = sys.dim();
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trajectory csv is empty");
  const auto header = split_csv(line);
  std::vector<std::string> expect = {"t", "body"};
  for (std::size_t c = 1; c <= d; ++c) expect.push_back("x" + std::to_string(c));
  for (std::size_t c = 1; c <= d; ++c) expect.push_back("v" + std::to_string(c));
  if (header != expect) throw ValidationError("trajectory csv: header does not match t,body,x1..xd,v1..vd for d=" + std::to_string(d));

  Trajectory traj{sys, 0.0, 0.0, {}, {}, {}, std::nullopt};
  std::size_t row = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 2 + 2 * d) throw ValidationError("trajectory csv line " + std::to_string(lineno) + ": wrong column count");
    const std::size_t body = row % nb;
    const double t = parse_double(cells[0], lineno);
    if (cells[1] != std::to_string(body))
      throw ValidationError("trajectory csv line " + std::to_string(lineno) + ": expected body " + std::to_string(body));
    if (body == 0) {
      if (!traj.base_times.empty() && !(t > traj.base_times.back()))
        throw ValidationError("trajectory csv line " + std::to_string(lineno) + ": times must increase");
      traj.base_times.push_back(t);
      traj.positions.emplace_back(nb, d);
      traj.velocities.emplace_back(nb, d);
    } else if (t != traj.base_times.back()) {
      throw ValidationError("trajectory csv line " + std::to_string(lineno) + ": time differs within one sample");
    }
    for (std::size_t c = 0; c < d; ++c) {
      traj.positions.back()(body, c) = parse_double(cells[2 + c], lineno);
      traj.velocities.back()(body, c) = parse_double(cells[2 + d + c], lineno);
    }
    ++row;
  }
  if (row == 0) throw ValidationError("trajectory csv has no data rows");
  if (row % nb != 0) throw ValidationError("trajectory csv: row count is not a multiple of N");
  const std::size_t n = traj.base_times.size();
  if (n < 2) throw ValidationError("trajectory csv needs at least two samples");
  traj.period = (traj.base_times.back() - traj.base_times.front()) * static_cast<double>(n) / static_cast<double>(n - 1);
  return traj;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace strongorbit
