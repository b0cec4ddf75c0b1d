#include "multibump/cli.hpp"

#include "multibump/connection.hpp"
#include "multibump/constants.hpp"
#include "multibump/oracle.hpp"
#include "multibump/solver.hpp"
#include "multibump/verify.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace multibump::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::input: return exit_input;
    case ErrorClass::certification: return exit_certification;
    case ErrorClass::convergence: return exit_convergence;
    case ErrorClass::internal: return exit_internal;
  }
  return exit_internal;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return exit_code_for(err->error_class());
  if (dynamic_cast<const json::exception*>(&e)) return exit_input;
  return exit_internal;
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

static std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_blob_sha1(const fs::path& p) { return git_blob_sha1(read_file(p)); }

std::vector<std::string> parse_word_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',' || ch == ' ' || ch == ';') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& w : parse_word_list(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size() || !std::isfinite(v)) throw InputError("'" + w + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<double> log_grid(double a, double b, int points) {
  if (!(a > 0.0 && b > a)) throw InputError("log grid needs 0 < from < to");
  if (points < 2) throw InputError("log grid needs at least two points");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double la = std::log(a), lb = std::log(b);
  for (int k = 0; k < points; ++k) out[static_cast<std::size_t>(k)] = std::exp(la + (lb - la) * k / (points - 1));
  out.front() = a;
  out.back() = b;
  return out;
}

Bracket bracket_for(const std::string& symbols, const std::vector<JobRow>& rows) {
  std::vector<const JobRow*> mine;
  for (const auto& r : rows)
    if (r.symbols == symbols) mine.push_back(&r);
  std::sort(mine.begin(), mine.end(), [](const JobRow* a, const JobRow* b) { return a->mu < b->mu; });
  Bracket b;
  b.symbols = symbols;
  for (const JobRow* r : mine) {
    if (r->certified) {
      b.mu_pass = r->mu;
      return b;
    }
    b.mu_fail = r->mu;
  }
  return b;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Manifest::set_command(const std::string& command, const nlohmann::json& config) {
  j_["command"] = command;
  j_["config"] = config;
}

void Manifest::add_input(const std::string& role, const fs::path& p) {
  j_["inputs"][role] = {{"path", p.string()}, {"sha1", file_blob_sha1(p)}};
}

void Manifest::add_input_text(const std::string& role, std::string_view content) {
  j_["inputs"][role] = {{"sha1", git_blob_sha1(content)}};
}

fs::path Manifest::write_output(const std::string& name, const std::string& content) {
  const fs::path p = dir_ / name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << content;
  out.close();
  j_["outputs"].push_back({{"path", name}, {"sha1", git_blob_sha1(content)}});
  return p;
}

void Manifest::fail(const std::string& error_name, const std::string& message, int exit_code) {
  j_["status"] = "failed";
  j_["error"] = {{"name", error_name}, {"message", message}, {"exit_code", exit_code}};
}

fs::path Manifest::finish() {
  fs::create_directories(dir_);
  const fs::path p = dir_ / "manifest.json";
  std::ofstream out(p);
  out << j_.dump(2) << '\n';
  return p;
}

namespace {

struct RunConfig {
  std::string config;
  std::string weight = "step";
  std::string outdir = ".";
  int threads = 0;

  std::string symbols = "1";
  bool periodic = false;
  int N = 0;
  double mu = 1e3;
  int cells = 1000;
  int cells_per_unit = 200;
  double mu0 = 10.0;
  double growth = 2.0;
  double newton_tol = 1e-9;
  int max_refinements = 8;
  double K = 0.0;
  bool oracle_check = false;
  std::string out;
  std::string report = "report.json";

  double mu_from = 1e2;
  double mu_to = 1e4;
  int points = 9;
  std::string mu_list;
  double delta = 0.25;
  double alpha = 0.5;

  int i = -1;
  int l = 1;
  int k = 1;
  double x = 0.0;
  double y = 0.0;
  double grading = 2.0;
  int starts = 10;
  std::uint64_t seed = 1;

  double t0 = 0.0;
  double t1 = 1.0;
  double u0 = 0.0;
  double du0 = 1.0;
  double tol = 1e-10;
  double fixed_step = 0.0;
  double slope_guess = std::numeric_limits<double>::quiet_NaN();
  int samples = 401;
};

json echo(const RunConfig& c) {
  json j = {{"weight", c.weight},   {"outdir", c.outdir},       {"threads", c.threads},
            {"symbols", c.symbols}, {"periodic", c.periodic},   {"N", c.N},
            {"mu", c.mu},           {"cells", c.cells},         {"cells_per_unit", c.cells_per_unit},
            {"mu0", c.mu0},         {"growth", c.growth},       {"newton_tol", c.newton_tol},
            {"max_refinements", c.max_refinements},             {"K", c.K},
            {"mu_from", c.mu_from}, {"mu_to", c.mu_to},         {"points", c.points},
            {"mu_list", c.mu_list}, {"delta", c.delta},         {"alpha", c.alpha},
            {"i", c.i},             {"l", c.l},                 {"k", c.k},
            {"x", c.x},             {"y", c.y},                 {"grading", c.grading},
            {"starts", c.starts},   {"seed", c.seed},           {"t0", c.t0},
            {"t1", c.t1},           {"u0", c.u0},               {"du0", c.du0},
            {"tol", c.tol},         {"fixed_step", c.fixed_step}, {"samples", c.samples}};
  if (std::isfinite(c.slope_guess)) j["slope_guess"] = c.slope_guess;
  return j;
}

std::string json_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + json_scalar(e);
    return s;
  }
  throw InputError("config value " + v.dump() + " is not a scalar or list");
}

/// Fills every option of `sub` not given on the command line from the
/// config object (top level first, then the section named after sub).
void apply_config(CLI::App* sub, const json& cfg) {
  json merged = json::object();
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (!it.value().is_object()) merged[it.key()] = it.value();
  if (cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object())
    for (auto it = cfg[sub->get_name()].begin(); it != cfg[sub->get_name()].end(); ++it) merged[it.key()] = it.value();
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0) continue;
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    std::string under = name;
    std::replace(under.begin(), under.end(), '-', '_');
    const json* v = merged.contains(name) ? &merged[name] : merged.contains(under) ? &merged[under] : nullptr;
    if (!v) continue;
    opt->add_result(json_scalar(*v));
    opt->run_callback();
  }
}

void validate(const RunConfig& c, const std::string& cmd) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
  };
  need(c.threads >= 0, "threads must be >= 0");
  need(c.cells >= 8, "cells must be >= 8");
  need(c.cells_per_unit >= 8, "cells-per-unit must be >= 8");
  need(c.mu0 > 0.0 && c.growth > 1.0, "mu0 must be positive and growth > 1");
  need(c.newton_tol > 0.0, "newton-tol must be positive");
  need(c.max_refinements >= 0, "max-refinements must be >= 0");
  need(c.K >= 0.0, "K must be >= 0 (0 selects the default)");
  if (cmd == "solve" || cmd == "connection" || cmd == "integrate" || cmd == "shoot")
    need(std::isfinite(c.mu) && c.mu >= 0.0, "mu must be >= 0");
  if (cmd == "solve") need(c.mu > 0.0, "mu must be positive");
  if (cmd == "verify" || cmd == "sweep") {
    if (c.mu_list.empty()) need(c.mu_from > 0.0 && c.mu_to > c.mu_from && c.points >= 2, "need 0 < mu-from < mu-to, points >= 2");
    need(c.delta > 0.0 && c.alpha > 0.0 && c.alpha <= 1.0, "delta must be positive, alpha in (0, 1]");
  }
  if (cmd == "connection") {
    need(c.l >= 0 && c.l <= c.k, "need 0 <= l <= k");
    need(c.grading >= 1.0, "grading must be >= 1");
    need(c.starts >= 0, "starts must be >= 0");
    need(std::isfinite(c.x) && std::isfinite(c.y), "x and y must be finite");
  }
  if (cmd == "integrate" || cmd == "shoot") {
    need(c.tol > 0.0 && c.fixed_step >= 0.0, "tol must be positive, fixed-step >= 0");
    need(c.samples >= 2, "samples must be >= 2");
    need(std::isfinite(c.t0) && std::isfinite(c.t1) && c.t1 != c.t0, "need t0 != t1");
    if (cmd == "shoot") need(c.t1 > c.t0, "shoot needs t1 > t0");
  }
}

struct LoadedWeight {
  WeightSpec spec;
  std::optional<fs::path> path;
};

LoadedWeight load_weight(const std::string& name) {
  if (fs::exists(name)) return {WeightSpec::build(load_weight_description(name)), fs::path(name)};
  if (name == "step") return {WeightSpec::build(weights::step()), std::nullopt};
  if (name == "sine") return {WeightSpec::build(weights::sine()), std::nullopt};
  throw InputError("cannot open weight file '" + name + "'");
}

ConstantOptions constant_options(const RunConfig& c) {
  ConstantOptions o;
  o.local.cells_per_unit = c.cells_per_unit;
  if (c.K > 0.0) o.K = c.K;
  o.k = c.k;
  return o;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.cells_per_interval = c.cells;
  o.mu0 = c.mu0;
  o.growth = c.growth;
  o.newton_tol = c.newton_tol;
  o.max_refinements = c.max_refinements;
  return o;
}

std::vector<double> mu_values(const RunConfig& c) {
  if (!c.mu_list.empty()) {
    auto v = parse_number_list(c.mu_list);
    if (v.empty()) throw InputError("mu-list is empty");
    for (double m : v)
      if (!(m > 0.0)) throw InputError("mu values must be positive");
    return v;
  }
  return log_grid(c.mu_from, c.mu_to, c.points);
}

std::vector<double> nodal_slopes(const GridFunction& u, double mu) {
  const Grid& g = *u.grid;
  const std::size_t n = u.size() - 1;
  std::vector<double> d(u.size());
  d[0] = one_sided_derivative(u, mu, 0, Side::right);
  d[n] = one_sided_derivative(u, mu, n, Side::left);
  for (std::size_t k = 1; k < n; ++k)
    d[k] = 0.5 * ((u[k + 1] - u[k]) / g.h(k) + (u[k] - u[k - 1]) / g.h(k - 1));
  return d;
}

std::string profile_csv(const GridFunction& u, double mu) {
  const auto d = nodal_slopes(u, mu);
  std::string s = "t,u,du\n";
  for (std::size_t k = 0; k < u.size(); ++k) s += fmt(u.grid->t(k)) + "," + fmt(u[k]) + "," + fmt(d[k]) + "\n";
  return s;
}

std::string trajectory_csv(const oracle::Trajectory& tr, int samples) {
  std::string s = "t,u,du,energy\n";
  const double a = tr.t_begin(), b = tr.t_end();
  for (int k = 0; k < samples; ++k) {
    const double t = a + (b - a) * k / (samples - 1);
    const auto st = tr.at(t);
    s += fmt(t) + "," + fmt(st[0]) + "," + fmt(st[1]) + "," + fmt(std::abs(st[2])) + "\n";
  }
  return s;
}

std::string gnuplot_lines(const std::string& csv, const std::string& title, const std::vector<int>& cols,
                          const std::vector<std::string>& names, bool loglog = false) {
  std::string s = "set datafile separator ','\nset key autotitle columnhead\nset title '" + title + "'\n";
  if (loglog) s += "set logscale xy\n";
  s += "plot ";
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (k) s += ", ";
    s += "'" + csv + "' using 1:" + std::to_string(cols[k]) + " with lines title '" + names[k] + "'";
  }
  return s + "\n";
}

std::string stem_of(const std::string& name) { return fs::path(name).replace_extension().string(); }

struct Context {
  const RunConfig& cfg;
  const LoadedWeight& weight;
  Manifest& manifest;
};

int cmd_local(Context& cx) {
  const auto& c = cx.cfg;
  const auto cd = compute_constants(cx.weight.spec, constant_options(c));
  const json rep = {{"c", cd.pack.c},
                    {"c_zeta", cd.pack.c_zeta},
                    {"zeta", cd.pack.zeta},
                    {"lambda1", cd.lambda1},
                    {"dleft", cd.bump.dleft},
                    {"dright", cd.bump.dright},
                    {"amplitude", cd.bump.amplitude},
                    {"constants", to_json(cd.pack)}};
  const std::string csv = c.out.empty() ? "bump.csv" : c.out;
  cx.manifest.write_output(csv, profile_csv(cd.bump.u, 0.0));
  cx.manifest.write_output(stem_of(csv) + ".gp", gnuplot_lines(csv, "ground bump", {2, 3}, {"u", "du"}));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_solve(Context& cx) {
  const auto& c = cx.cfg;
  const auto& w = cx.weight.spec;
  const SymbolWindow L = SymbolWindow::parse(c.symbols, c.periodic, c.N);
  const auto cd = compute_constants(w, constant_options(c));
  const BumpProfile bump = window_bump(w, c.cells, constant_options(c).local);
  json rep = {{"symbols", L.str()}, {"periodic", L.periodic()}, {"N", L.N()}, {"mu", c.mu},
              {"constants", to_json(cd.pack)}};
  Solution sol;
  try {
    sol = solve_multibump(w, L, c.mu, cd.pack, bump, solve_options(c));
  } catch (const CertificationFailure& e) {
    rep["certified"] = false;
    rep["report"] = to_json(e.report());
    cx.manifest.write_output(c.report, rep.dump(2) + "\n");
    throw;
  }
  rep["certified"] = sol.report.certified;
  rep["report"] = to_json(sol.report);
  rep["identities"] = to_json(nehari_identities(sol));
  if (L.periodic()) rep["minimal_period"] = minimal_period(sol.u, L.period());
  if (c.oracle_check) rep["oracle_max_rel"] = oracle_residual(sol.u, c.mu).max_rel;
  const std::string csv = c.out.empty() ? "sol.csv" : c.out;
  cx.manifest.write_output(csv, profile_csv(sol.u, c.mu));
  cx.manifest.write_output(stem_of(csv) + ".gp", gnuplot_lines(csv, "code " + L.str(), {2}, {"u"}));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_connection(Context& cx) {
  const auto& c = cx.cfg;
  const auto& w = cx.weight.spec;
  const auto cd = compute_constants(w, constant_options(c));
  ConnectionProblem p{c.i, c.l, c.k, c.x, c.y, c.mu, cd.pack.K, cd.pack.r};
  ConnectionOptions o;
  o.cells_per_interval = c.cells;
  o.end_grading = c.grading;
  const ConnectionSolution s = solve_connection(w, p, o);
  const SensitivitySigns sg = sensitivity_signs(p, s);
  const EnergyDerivatives ed = energy_derivatives(w, p, s, o);
  const SensitivityCheck fc = sensitivity_fd_check(w, p, s, o);
  json rep = {{"problem", {{"i", p.i}, {"l", p.l}, {"k", p.k_bound}, {"x", p.x}, {"y", p.y}, {"mu", p.mu},
                           {"K", p.K}, {"r", p.r}}},
              {"solution", to_json(s)},
              {"slopes", {{"left", s.slope_left}, {"right", s.slope_right}}},
              {"zeros", s.zeros},
              {"sensitivity_signs",
               {{"v_positive", sg.v_positive},
                {"v_decreasing", sg.v_decreasing},
                {"z_positive", sg.z_positive},
                {"z_increasing", sg.z_increasing},
                {"dv", {sg.dv_left, sg.dv_right}},
                {"dz", {sg.dz_left, sg.dz_right}},
                {"far_slope_bound", sg.far_slope_bound},
                {"near_bound_margin", sg.near_bound_margin},
                {"combined_left_negative", sg.combined_left_negative},
                {"combined_right_positive", sg.combined_right_positive}}},
              {"fd_checks",
               {{"dJdx", ed.dJdx},
                {"dJdy", ed.dJdy},
                {"fd_dJdx", ed.fd_dJdx},
                {"fd_dJdy", ed.fd_dJdy},
                {"rel_err_x", ed.rel_err_x},
                {"rel_err_y", ed.rel_err_y},
                {"sensitivity_rel_err_v", fc.rel_err_v},
                {"sensitivity_rel_err_z", fc.rel_err_z}}}};
  if (c.starts > 0) {
    double spread = 0.0;
    const bool unique = uniqueness_probe(w, p, c.starts, c.seed, o, &spread);
    rep["uniqueness"] = {{"holds", unique}, {"starts", c.starts}, {"spread", spread}};
  }
  if (c.oracle_check)
    rep["oracle_max_rel"] = block_oracle_residual(s.u, c.mu, std::max<std::size_t>(1, c.cells / 16)).max_rel;
  std::string csv = "t,u,v,z\n";
  for (std::size_t k = 0; k < s.u.size(); ++k)
    csv += fmt(s.u.grid->t(k)) + "," + fmt(s.u[k]) + "," + fmt(s.v[k]) + "," + fmt(s.z[k]) + "\n";
  const std::string name = c.out.empty() ? "connection.csv" : c.out;
  cx.manifest.write_output(name, csv);
  cx.manifest.write_output(stem_of(name) + ".gp", gnuplot_lines(name, "block", {2, 3, 4}, {"u", "v", "z"}));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_verify(Context& cx) {
  const auto& c = cx.cfg;
  const auto& w = cx.weight.spec;
  const SymbolWindow L = SymbolWindow::parse(c.symbols, c.periodic, c.N);
  const auto cd = compute_constants(w, constant_options(c));
  const BumpProfile bump = window_bump(w, c.cells, constant_options(c).local);
  SweepOptions so;
  so.solve = solve_options(c);
  so.delta = c.delta;
  so.alpha = c.alpha;
  const AsymptoticReport ar = asymptotic_sweep(w, L, mu_values(c), cd.pack, bump, so);

  bool all_certified = true, sup_down = true, holder_down = true;
  double lip_min = std::numeric_limits<double>::infinity();
  std::string csv = "mu,certified,interior_max,bound,sup,holder,lipschitz,local_abs,global_abs,cutoff_rel\n";
  for (std::size_t k = 0; k < ar.points.size(); ++k) {
    const auto& p = ar.points[k];
    all_certified = all_certified && p.certified;
    if (k > 0) {
      sup_down = sup_down && p.distance.sup < ar.points[k - 1].distance.sup;
      holder_down = holder_down && p.distance.holder < ar.points[k - 1].distance.holder;
    }
    lip_min = std::min(lip_min, p.distance.lipschitz);
    csv += fmt(p.mu) + "," + (p.certified ? "1" : "0") + "," + fmt(p.decay.interior_max) + "," + fmt(p.decay.bound) +
           "," + fmt(p.distance.sup) + "," + fmt(p.distance.holder) + "," + fmt(p.distance.lipschitz) + "," +
           fmt(p.identities.local_abs) + "," + fmt(p.identities.global_abs) + "," + fmt(p.identities.cutoff_rel) + "\n";
  }
  json rep = to_json(ar);
  rep["symbols"] = L.str();
  rep["decay_rate"] = decay_rate(ar);
  rep["flags"] = {{"all_certified", all_certified},
                  {"decay_rate_near_minus_third", std::abs(ar.decay_fit.slope + 1.0 / 3.0) <= 0.05},
                  {"bounds_hold", ar.bounds_hold},
                  {"sup_decreasing", sup_down},
                  {"holder_decreasing", holder_down},
                  {"lipschitz_min", lip_min}};
  const std::string name = c.out.empty() ? "sweep.csv" : c.out;
  cx.manifest.write_output(name, csv);
  cx.manifest.write_output(stem_of(name) + ".gp",
                           gnuplot_lines(name, "decay and distances", {3, 4, 5}, {"interior max", "bound", "sup"}, true));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  if (!all_certified) throw ScheduleExhausted("some sweep points are not certified");
  return exit_ok;
}

int cmd_oracle_ground(Context& cx) {
  const auto g = oracle::brute_ground_level(cx.weight.spec, std::min(cx.cfg.tol, 1e-12));
  const json rep = {{"level", g.level}, {"slope_left", g.slope_left}, {"slope_right", g.slope_right},
                    {"amplitude", g.amplitude}};
  cx.manifest.write_output(cx.cfg.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_oracle_integrate(Context& cx) {
  const auto& c = cx.cfg;
  oracle::IntegrateOptions o;
  o.tol = c.tol;
  o.fixed_step = c.fixed_step;
  const auto r = oracle::integrate(cx.weight.spec, c.mu, {c.t0, c.u0, c.du0}, c.t1, o);
  const json rep = {{"final", {{"t", r.final.t}, {"u", r.final.u}, {"du", r.final.du}}},
                    {"energy", r.energy},
                    {"dfinal_u", r.dfinal_u},
                    {"dfinal_du", r.dfinal_du},
                    {"accepted", r.accepted},
                    {"rejected", r.rejected}};
  const std::string name = c.out.empty() ? "trajectory.csv" : c.out;
  cx.manifest.write_output(name, trajectory_csv(r.trajectory, c.samples));
  cx.manifest.write_output(stem_of(name) + ".gp", gnuplot_lines(name, "trajectory", {2, 3}, {"u", "du"}));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_oracle_shoot(Context& cx) {
  const auto& c = cx.cfg;
  std::optional<double> guess;
  if (std::isfinite(c.slope_guess)) guess = c.slope_guess;
  const auto r = oracle::shoot_dirichlet(cx.weight.spec, c.mu, c.t0, c.t1, c.x, c.y, std::min(c.tol, 1e-10), guess);
  const json rep = {{"slope", r.slope}, {"end_slope", r.end_slope}, {"iterations", r.iterations},
                    {"energy", r.run.energy}, {"final", {{"t", r.run.final.t}, {"u", r.run.final.u}}}};
  const std::string name = c.out.empty() ? "shoot.csv" : c.out;
  cx.manifest.write_output(name, trajectory_csv(r.run.trajectory, c.samples));
  cx.manifest.write_output(stem_of(name) + ".gp", gnuplot_lines(name, "shooting", {2, 3}, {"u", "du"}));
  cx.manifest.write_output(c.report, rep.dump(2) + "\n");
  return exit_ok;
}

int cmd_sweep(Context& cx) {
  const auto& c = cx.cfg;
  const auto& w = cx.weight.spec;
  const auto words = parse_word_list(c.symbols);
  if (words.empty()) throw InputError("sweep needs at least one symbol string");
  std::vector<SymbolWindow> windows;
  for (const auto& s : words) windows.push_back(SymbolWindow::parse(s, c.periodic, 0));
  const auto mus = mu_values(c);
  const auto cd = compute_constants(w, constant_options(c));
  const BumpProfile bump = window_bump(w, c.cells, constant_options(c).local);
  SolveOptions so = solve_options(c);
  so.require_certificate = false;

  const std::size_t nm = mus.size();
  std::vector<JobRow> rows(windows.size() * nm);
  const int saved_levels = omp_get_max_active_levels();
  omp_set_max_active_levels(1);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t job = 0; job < rows.size(); ++job) {
    const SymbolWindow& L = windows[job / nm];
    JobRow& row = rows[job];
    row.symbols = L.str();
    row.mu = mus[job % nm];
    try {
      const Solution s = solve_multibump(w, L, row.mu, cd.pack, bump, so);
      row.certified = s.report.certified;
      row.status = row.certified ? "certified" : "uncertified";
      row.residual = s.report.residual_inf;
      row.interior_max = decay_sample(s.u, row.mu, c.delta).interior_max;
      if (L.periodic()) row.minimal_period = minimal_period(s.u, L.period());
      for (const auto& f : s.report.failures) row.message += (row.message.empty() ? "" : " ") + f;
    } catch (const Error& e) {
      row.status = e.name();
      row.message = e.what();
    } catch (const std::exception& e) {
      row.status = "internal";
      row.message = e.what();
    }
  }
  omp_set_max_active_levels(saved_levels);

  std::string jobs = "symbols,mu,status,certified,residual,interior_max,minimal_period\n";
  for (const auto& r : rows)
    jobs += r.symbols + "," + fmt(r.mu) + "," + r.status + "," + (r.certified ? "1" : "0") + "," + fmt(r.residual) +
            "," + fmt(r.interior_max) + "," + std::to_string(r.minimal_period) + "\n";
  std::string brackets = "symbols,mu_fail,mu_pass\n";
  std::string rates = "symbols,points,slope,half_width\n";
  json agg = {{"jobs", json::array()}, {"brackets", json::array()}, {"rates", json::array()}};
  for (const auto& r : rows)
    agg["jobs"].push_back({{"symbols", r.symbols}, {"mu", r.mu}, {"status", r.status}, {"certified", r.certified},
                           {"residual", r.residual}, {"interior_max", r.interior_max},
                           {"minimal_period", r.minimal_period}, {"message", r.message}});
  for (const auto& L : windows) {
    const Bracket b = bracket_for(L.str(), rows);
    brackets += L.str() + "," + fmt(b.mu_fail) + "," + (std::isinf(b.mu_pass) ? "inf" : fmt(b.mu_pass)) + "\n";
    agg["brackets"].push_back({{"symbols", L.str()}, {"mu_fail", b.mu_fail},
                               {"mu_pass", std::isinf(b.mu_pass) ? json("inf") : json(b.mu_pass)}});
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (r.symbols == L.str() && r.certified && r.interior_max > 0.0) {
        xs.push_back(r.mu);
        ys.push_back(r.interior_max);
      }
    if (xs.size() >= 2) {
      const LinearFit f = fit_loglog(xs, ys);
      rates += L.str() + "," + std::to_string(xs.size()) + "," + fmt(f.slope) + "," + fmt(f.half_width) + "\n";
      agg["rates"].push_back({{"symbols", L.str()}, {"points", xs.size()}, {"slope", f.slope},
                              {"half_width", std::isfinite(f.half_width) ? json(f.half_width) : json("inf")}});
    } else {
      rates += L.str() + "," + std::to_string(xs.size()) + ",nan,nan\n";
    }
  }
  cx.manifest.write_output("jobs.csv", jobs);
  cx.manifest.write_output("brackets.csv", brackets);
  cx.manifest.write_output("rates.csv", rates);
  cx.manifest.write_output("sweep.gp",
                           "set datafile separator ','\nset logscale xy\nset title 'interior decay'\n"
                           "plot 'jobs.csv' every ::1 using 2:6 with points title 'interior max'\n");
  cx.manifest.write_output(c.report, agg.dump(2) + "\n");
  return exit_ok;
}

void add_common(CLI::App* s, RunConfig& c) {
  s->add_option("--config", c.config, "JSON config file; command-line flags win");
  s->add_option("--weight", c.weight, "weight JSON file, or the built-in 'step' / 'sine'");
  s->add_option("--outdir", c.outdir, "output directory (manifest.json goes here)");
  s->add_option("--report", c.report, "report JSON name inside outdir");
  s->add_option("--out", c.out, "CSV name inside outdir");
  s->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)");
}

void add_mesh(CLI::App* s, RunConfig& c) {
  s->add_option("--cells", c.cells, "cells per nodal interval");
  s->add_option("--cells-per-unit", c.cells_per_unit, "cells per unit length for local problems");
  s->add_option("--K", c.K, "amplitude cap K (0: twice the bump amplitude)");
}

void add_solve(CLI::App* s, RunConfig& c) {
  s->add_option("--mu0", c.mu0, "first continuation value");
  s->add_option("--growth", c.growth, "continuation ratio");
  s->add_option("--newton-tol", c.newton_tol, "Newton tolerance on the weak residual");
  s->add_option("--max-refinements", c.max_refinements, "continuation step refinements");
}

void add_sweep_range(CLI::App* s, RunConfig& c) {
  s->add_option("--mu-from", c.mu_from, "first mu");
  s->add_option("--mu-to", c.mu_to, "last mu");
  s->add_option("--points", c.points, "number of log-spaced mu values");
  s->add_option("--mu-list", c.mu_list, "explicit comma separated mu values (overrides the range)");
  s->add_option("--delta", c.delta, "decay margin delta");
}

}  // namespace

int run(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Multibump solutions of u'' + (a+ - mu a-) u^3 = 0: construction and checks"};
  app.footer(
      "Exit codes:\n"
      "  0  success\n"
      "  2  input error (bad flags, config or weight file; no artifacts)\n"
      "  3  certification failure (report and manifest marked failed)\n"
      "  4  convergence failure\n"
      "  5  internal error");
  app.require_subcommand(1);

  auto* local = app.add_subcommand("local", "ground level c, pinned level c_zeta, zeta, lambda1 and the bump");
  add_common(local, cfg);
  local->add_option("--cells-per-unit", cfg.cells_per_unit, "cells per unit length of [0, tau]");
  local->add_option("--K", cfg.K, "amplitude cap K (0: twice the bump amplitude)");

  auto* solve = app.add_subcommand("solve", "solve and certify a multibump solution");
  add_common(solve, cfg);
  add_mesh(solve, cfg);
  add_solve(solve, cfg);
  solve->add_option("--symbols", cfg.symbols, "code, left to right over i = -N..N or one period");
  solve->add_flag("--periodic", cfg.periodic, "the code repeats");
  solve->add_option("--N", cfg.N, "window half width (non-periodic)");
  solve->add_option("--mu", cfg.mu, "target mu");
  solve->add_flag("--oracle-check", cfg.oracle_check, "re-integrate every nodal interval by shooting");

  auto* conn = app.add_subcommand("connection", "Dirichlet block problem and its diagnostics");
  add_common(conn, cfg);
  conn->add_option("--cells", cfg.cells, "cells per nodal interval");
  conn->add_option("--cells-per-unit", cfg.cells_per_unit, "cells per unit length for the constants");
  conn->add_option("--K", cfg.K, "amplitude cap K (0: twice the bump amplitude)");
  conn->add_option("--mu", cfg.mu, "mu");
  conn->add_option("--x", cfg.x, "u at the left end");
  conn->add_option("--y", cfg.y, "u at the right end");
  conn->add_option("--i", cfg.i, "block starts at tau_i");
  conn->add_option("--l", cfg.l, "positivity intervals enclosed");
  conn->add_option("--k", cfg.k, "zero-string bound k (l <= k)");
  conn->add_option("--grading", cfg.grading, "mesh grading toward the block ends");
  conn->add_option("--starts", cfg.starts, "random starts for the uniqueness probe (0 skips it)");
  conn->add_option("--seed", cfg.seed, "seed of the uniqueness probe");
  conn->add_flag("--oracle-check", cfg.oracle_check, "compare with multiple shooting");

  auto* verify = app.add_subcommand("verify", "mu sweep with decay, distances and identities");
  add_common(verify, cfg);
  add_mesh(verify, cfg);
  add_solve(verify, cfg);
  add_sweep_range(verify, cfg);
  verify->add_option("--symbols", cfg.symbols, "code");
  verify->add_flag("--periodic", cfg.periodic, "the code repeats");
  verify->add_option("--N", cfg.N, "window half width (non-periodic)");
  verify->add_option("--alpha", cfg.alpha, "Holder exponent");

  auto* orc = app.add_subcommand("oracle", "independent shooting integrator");
  orc->require_subcommand(1);
  auto* ground = orc->add_subcommand("ground", "ground level by shooting (piecewise constant a+)");
  add_common(ground, cfg);
  ground->add_option("--tol", cfg.tol, "integrator tolerance");
  auto* integ = orc->add_subcommand("integrate", "initial value problem with dense output");
  add_common(integ, cfg);
  auto* shoot = orc->add_subcommand("shoot", "Dirichlet problem by shooting on the slope");
  add_common(shoot, cfg);
  for (auto* s : {integ, shoot}) {
    s->add_option("--mu", cfg.mu, "mu");
    s->add_option("--t0", cfg.t0, "start time");
    s->add_option("--t1", cfg.t1, "end time");
    s->add_option("--tol", cfg.tol, "integrator tolerance");
    s->add_option("--samples", cfg.samples, "dense output samples");
  }
  integ->add_option("--u0", cfg.u0, "u(t0)");
  integ->add_option("--du0", cfg.du0, "u'(t0)");
  integ->add_option("--fixed-step", cfg.fixed_step, "fixed step (0: adaptive)");
  shoot->add_option("--x", cfg.x, "u(t0)");
  shoot->add_option("--y", cfg.y, "u(t1)");
  shoot->add_option("--slope-guess", cfg.slope_guess, "starting slope for Newton");

  auto* sweep = app.add_subcommand("sweep", "concurrent solve jobs over symbols x mu; mu* brackets and rate fits");
  add_common(sweep, cfg);
  add_mesh(sweep, cfg);
  add_solve(sweep, cfg);
  add_sweep_range(sweep, cfg);
  sweep->add_option("--symbols", cfg.symbols, "comma separated codes");
  sweep->add_flag("--periodic", cfg.periodic, "the codes repeat");
  cfg.report = "report.json";

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  CLI::App* leaf = nullptr;
  std::string cmd;
  for (CLI::App* s : {local, solve, conn, verify, ground, integ, shoot, sweep})
    if (s->parsed()) {
      leaf = s;
      cmd = s->get_name();
    }
  if (cmd == "sweep") cfg.report = cfg.report == "report.json" ? "aggregate.json" : cfg.report;

  std::optional<LoadedWeight> weight;
  std::string config_text;
  try {
    if (!cfg.config.empty()) {
      config_text = read_file(cfg.config);
      json j;
      try {
        j = json::parse(config_text);
      } catch (const json::exception& e) {
        throw InputError("config file is not valid JSON: " + std::string(e.what()));
      }
      if (!j.is_object()) throw InputError("config file must hold a JSON object");
      apply_config(leaf, j);
    }
    validate(cfg, cmd);
    weight = load_weight(cfg.weight);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  Manifest manifest(cfg.outdir);
  std::string command = "multibump";
  for (int k = 1; k < argc; ++k) command += std::string(" ") + argv[k];
  manifest.set_command(command, echo(cfg));
  if (weight->path) manifest.add_input("weight", *weight->path);
  else manifest.add_input_text("weight", to_json(weight->spec.description()).dump());
  if (!cfg.config.empty()) manifest.add_input("config", cfg.config);

  Context cx{cfg, *weight, manifest};
  int code = exit_ok;
  try {
    if (cmd == "local") code = cmd_local(cx);
    else if (cmd == "solve") code = cmd_solve(cx);
    else if (cmd == "connection") code = cmd_connection(cx);
    else if (cmd == "verify") code = cmd_verify(cx);
    else if (cmd == "ground") code = cmd_oracle_ground(cx);
    else if (cmd == "integrate") code = cmd_oracle_integrate(cx);
    else if (cmd == "shoot") code = cmd_oracle_shoot(cx);
    else if (cmd == "sweep") code = cmd_sweep(cx);
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    const auto* err = dynamic_cast<const Error*>(&e);
    manifest.fail(err ? err->name() : "internal", e.what(), code);
    std::cerr << "error: " << e.what() << '\n';
  }
  manifest.finish();
  return code;
}

}  // namespace multibump::cli
