// wplab: model Weil-Petersson boundary geometry laboratory.
//
// Subcommands run solves, parameter sweeps, and the acceptance suite,
// printing tables to stdout and writing CSV/JSON artifacts under --out.
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wp/acceptance.hpp"
#include "wp/collar.hpp"
#include "wp/experiments.hpp"
#include "wp/fit.hpp"
#include "wp/geodesic.hpp"
#include "wp/io.hpp"
#include "wp/metric.hpp"
#include "wp/npc.hpp"
#include "wp/sampling.hpp"

using nlohmann::json;

namespace {

struct RunConfig {
  wp::ModelSpec spec{1, 1};
  double tol_ivp = 1e-10;
  double tol_bvp = 1e-8;
  double tol_quad = 1e-10;
  std::uint64_t seed = 0;
  std::string out;              // output directory; empty = stdout only
  std::string format = "csv";   // csv | json | dat

  void validate() const {
    for (double t : {tol_ivp, tol_bvp, tol_quad})
      if (!(t > 0.0 && t <= 1e-2))
        throw std::invalid_argument("config: tolerances must lie in (0, 1e-2]");
    if (format != "csv" && format != "json" && format != "dat")
      throw std::invalid_argument("config: format must be csv, json or dat");
  }
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j = json::parse(in);
  RunConfig cfg;
  if (j.contains("spec")) cfg.spec = j.at("spec").get<wp::ModelSpec>();
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    cfg.tol_ivp = t.value("ivp", cfg.tol_ivp);
    cfg.tol_bvp = t.value("bvp", cfg.tol_bvp);
    cfg.tol_quad = t.value("quadrature", cfg.tol_quad);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out = j.value("out", cfg.out);
  cfg.format = j.value("format", cfg.format);
  return cfg;
}

// --- point / tangent syntax --------------------------------------------------
//
// "u=1"  or  "u=0.5 0.2, theta=0 1, t=0.1+0.2i -0.3"
// Tangents accept the same keys or du=/dtheta=/dt=.

wp::complex parse_complex(std::string s) {
  auto trim = [](std::string& x) {
    while (!x.empty() && std::isspace(static_cast<unsigned char>(x.front()))) x.erase(x.begin());
    while (!x.empty() && std::isspace(static_cast<unsigned char>(x.back()))) x.pop_back();
  };
  trim(s);
  if (s.empty()) throw std::invalid_argument("empty complex literal");
  if (s.back() != 'i') return wp::complex(std::stod(s), 0.0);
  s.pop_back();  // drop the i
  // find the split sign of the imaginary part (not leading, not an exponent sign)
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) return wp::complex(0.0, s.empty() || s == "+" ? 1.0
                                                          : s == "-" ? -1.0
                                                                     : std::stod(s));
  const std::string re = s.substr(0, split);
  std::string im = s.substr(split);
  if (im == "+") im = "1";
  if (im == "-") im = "-1";
  return wp::complex(std::stod(re), std::stod(im));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

struct ParsedTuple {
  std::vector<double> u, theta;
  std::vector<wp::complex> t;
};

ParsedTuple parse_tuple(const std::string& text) {
  ParsedTuple out;
  for (const std::string& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected key=value in point syntax: " + part);
    std::string key = part.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              key.end());
    const std::vector<std::string> vals = split_ws(part.substr(eq + 1));
    if (key == "u" || key == "du")
      for (const auto& v : vals) out.u.push_back(std::stod(v));
    else if (key == "theta" || key == "dtheta")
      for (const auto& v : vals) out.theta.push_back(std::stod(v));
    else if (key == "t" || key == "dt")
      for (const auto& v : vals) out.t.push_back(parse_complex(v));
    else
      throw std::invalid_argument("unknown coordinate key: " + key);
  }
  return out;
}

wp::ChartPoint parse_point(const std::string& text, const wp::ModelSpec& spec) {
  ParsedTuple tp = parse_tuple(text);
  if (tp.theta.empty()) tp.theta.assign(tp.u.size(), 0.0);
  if (tp.u.size() > spec.p || tp.theta.size() > spec.p || tp.t.size() > spec.m)
    throw std::invalid_argument("point literal has more coordinates than the model spec");
  wp::ChartPoint x{tp.u, tp.theta, tp.t};
  x.u.resize(spec.p, 0.0);
  x.theta.resize(spec.p, 0.0);
  x.t.resize(spec.m, wp::complex(0, 0));
  x.validate(spec);
  return x;
}

wp::TangentVector parse_tangent(const std::string& text, const wp::ModelSpec& spec) {
  ParsedTuple tp = parse_tuple(text);
  if (tp.theta.empty()) tp.theta.assign(tp.u.size(), 0.0);
  wp::TangentVector v{tp.u, tp.theta, tp.t};
  v.du.resize(spec.p, 0.0);
  v.dtheta.resize(spec.p, 0.0);
  v.dt.resize(spec.m, wp::complex(0, 0));
  return v;
}

// spec inferred from a point literal when the config does not pin one
wp::ModelSpec infer_spec(const std::string& from, const std::string& to) {
  const ParsedTuple a = parse_tuple(from);
  const ParsedTuple b = parse_tuple(to);
  const std::size_t p = std::max(a.u.size(), b.u.size());
  const std::size_t m = std::max(a.t.size(), b.t.size());
  return wp::ModelSpec(p, m);
}

// --- output helpers -----------------------------------------------------------

void emit(const RunConfig& cfg, const std::string& run_id, const wp::CsvTable& table,
          const json& summary) {
  if (cfg.format == "json") {
    std::cout << summary.dump(2) << "\n";
  } else if (cfg.format == "dat") {
    std::cout << table.dat();
  } else {
    std::cout << table.csv();
  }
  if (!cfg.out.empty()) {
    const std::filesystem::path dir(cfg.out);
    wp::atomic_write(dir / (run_id + ".csv"), table.csv());
    wp::write_json(dir / (run_id + ".json"), summary);
    if (cfg.format == "dat") wp::atomic_write(dir / (run_id + ".dat"), table.dat());
  }
}

wp::CsvTable trajectory_table(const wp::ModelSpec& spec, const wp::Trajectory& traj) {
  std::vector<std::string> header{"s"};
  for (std::size_t i = 0; i < spec.p; ++i) header.push_back("u" + std::to_string(i + 1));
  for (std::size_t i = 0; i < spec.p; ++i) header.push_back("theta" + std::to_string(i + 1));
  for (std::size_t j = 0; j < spec.m; ++j) {
    header.push_back("ret" + std::to_string(j + 1));
    header.push_back("imt" + std::to_string(j + 1));
  }
  wp::CsvTable tab(header);
  for (const auto& s : traj.samples) {
    std::vector<double> row{s.s};
    for (double ui : s.x.u) row.push_back(ui);
    for (double th : s.x.theta) row.push_back(th);
    for (const wp::complex& t : s.x.t) {
      row.push_back(t.real());
      row.push_back(t.imag());
    }
    tab.add_row(row);
  }
  return tab;
}

std::string run_id_for(const std::string& name, const RunConfig& cfg) {
  return name + "-seed" + std::to_string(cfg.seed);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"model Weil-Petersson boundary geometry laboratory"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  RunConfig cfg;
  std::string config_path;
  std::optional<double> tol_flag;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--out", cfg.out, "output directory for CSV/JSON artifacts");
  app.add_option("--format", cfg.format, "stdout format: csv, json or dat");
  app.add_option("--seed", cfg.seed, "seed for the randomized suites");
  auto* tol_opt = app.add_option("--tol", tol_flag, "override the solver tolerance");

  // metric eval
  auto* metric_cmd = app.add_subcommand("metric", "metric tensor operations");
  metric_cmd->fallthrough();
  auto* metric_eval = metric_cmd->add_subcommand("eval", "evaluate the metric at a point");
  metric_eval->fallthrough();
  std::string at_text = "u=1";
  metric_eval->add_option("--at", at_text, "chart point, e.g. \"u=1,theta=0,t=0.1+0.2i\"");

  // geodesic shoot / connect
  auto* geo_cmd = app.add_subcommand("geodesic", "geodesic solvers");
  geo_cmd->fallthrough();
  auto* shoot_cmd = geo_cmd->add_subcommand("shoot", "initial value problem");
  shoot_cmd->fallthrough();
  std::string x0_text = "u=1", v0_text = "du=-1", from_text = "u=1", to_text = "u=0";
  double shoot_length = 1.0, sample_ds = 0.0;
  shoot_cmd->add_option("--x0", x0_text, "start point");
  shoot_cmd->add_option("--v0", v0_text, "initial direction (normalized internally)");
  shoot_cmd->add_option("--length", shoot_length, "arclength to integrate");
  shoot_cmd->add_option("--sample-ds", sample_ds, "uniform sample spacing (0: adaptive steps)");
  auto* connect_cmd = geo_cmd->add_subcommand("connect", "boundary value problem");
  connect_cmd->fallthrough();
  connect_cmd->add_option("--from", from_text, "start point");
  connect_cmd->add_option("--to", to_text, "end point");

  // distance
  auto* dist_cmd = app.add_subcommand("distance", "geodesic distance between two points");
  dist_cmd->fallthrough();
  dist_cmd->add_option("--from", from_text, "start point");
  dist_cmd->add_option("--to", to_text, "end point");

  // experiments
  auto* exp_cmd = app.add_subcommand("experiment", "quantitative experiments");
  exp_cmd->fallthrough();
  auto* corner_cmd = exp_cmd->add_subcommand("corner", "corner-path comparison");
  corner_cmd->fallthrough();
  double c_eps = 1.0, c_cc = 1.0, c_ct = 1.0;
  std::string c_t1, c_t2;
  bool c_grid = false;
  corner_cmd->add_option("--eps", c_eps, "value of l1 + l2 on the interior path");
  corner_cmd->add_option("--Cc", c_cc, "first block constant");
  corner_cmd->add_option("--Ct", c_ct, "second block constant");
  corner_cmd->add_option("--T1", c_t1, "flat offset of the first endpoiont, complex list");
  corner_cmd->add_option("--T2", c_t2, "flat offset of the second endpoint, complex list");
  corner_cmd->add_flag("--sweep", c_grid, "also run the positivity sweep over the parameter grid");

  auto* pairing_cmd = exp_cmd->add_subcommand("pairing", "pairing blow-up sweep and rate fit");
  pairing_cmd->fallthrough();
  int p_kmin = 4, p_kmax = 12;
  double p_delta = 0.1;
  pairing_cmd->add_option("--kmin", p_kmin, "smallest decade, tmod = 10^-kmin");
  pairing_cmd->add_option("--kmax", p_kmax, "largest decade, tmod = 10^-kmax");
  pairing_cmd->add_option("--delta", p_delta, "outer cutoff of the annulus");

  auto* dehn_cmd = exp_cmd->add_subcommand("dehn-twist", "localized twist norm sweep");
  dehn_cmd->fallthrough();
  int d_kmin = 2, d_kmax = 12;
  std::string d_profile = "smoothstep";
  dehn_cmd->add_option("--kmin", d_kmin, "first decade");
  dehn_cmd->add_option("--kmax", d_kmax, "last decade");
  dehn_cmd->add_option("--profile", d_profile, "bump profile: smoothstep or flat-top");

  auto* nonref_cmd = exp_cmd->add_subcommand("nonrefraction", "interior-to-boundary probes");
  nonref_cmd->fallthrough();
  int n_probes = 20;
  nonref_cmd->add_option("--probes", n_probes, "number of probes");

  auto* cat0_cmd = exp_cmd->add_subcommand("cat0", "comparison-triangle suite");
  cat0_cmd->fallthrough();
  int c_cases = 100;
  cat0_cmd->add_option("--cases", c_cases, "number of random triangles");

  auto* harnack_cmd = exp_cmd->add_subcommand("harnack", "Harnack-type verifier on synthetic data");
  harnack_cmd->fallthrough();

  auto* pert_cmd = exp_cmd->add_subcommand("perturbation", "distance approximation rate fit");
  pert_cmd->fallthrough();
  double pe_coeff = 1.0;
  pert_cmd->add_option("--pert", pe_coeff, "quartic correction coefficient");

  // acceptance suite
  auto* suite_cmd = app.add_subcommand("suite", "verification suites");
  suite_cmd->fallthrough();
  auto* accept_cmd = suite_cmd->add_subcommand("acceptance", "run every acceptance criterion");
  accept_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) {
      RunConfig file_cfg = load_config(config_path);
      // command line overrides file values
      if (cfg.out.empty()) cfg.out = file_cfg.out;
      if (app.count("--format") == 0) cfg.format = file_cfg.format;
      if (app.count("--seed") == 0) cfg.seed = file_cfg.seed;
      cfg.spec = file_cfg.spec;
      cfg.tol_ivp = file_cfg.tol_ivp;
      cfg.tol_bvp = file_cfg.tol_bvp;
      cfg.tol_quad = file_cfg.tol_quad;
    }
    if (*tol_opt) {
      cfg.tol_ivp = cfg.tol_bvp = cfg.tol_quad = *tol_flag;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    // ---- metric eval ----
    if (metric_eval->parsed()) {
      wp::ModelSpec spec = config_path.empty() ? infer_spec(at_text, at_text) : cfg.spec;
      const wp::ChartPoint x = parse_point(at_text, spec);
      const wp::Matrix g = wp::metric_tensor(spec, x);
      wp::CsvTable tab({"i", "j", "g_ij"});
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          tab.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(j), g(i, j)});
      json blocks = json::array();
      for (std::size_t i = 0; i < spec.p; ++i) {
        const wp::BlockCoeffs c = wp::block_coeffs(spec, i, x.u[i]);
        json b{{"u", x.u[i]}, {"g_uu", c.g_uu}, {"g_thth", c.g_thth}};
        if (x.u[i] > 0.0) b["gauss_curvature"] = wp::gauss_curvature_block(x.u[i], spec.A[i]);
        blocks.push_back(b);
      }
      emit(cfg, run_id_for("metric-eval", cfg), tab,
           json{{"experiment", "metric-eval"}, {"params", json{{"at", at_text}}},
                {"pass", true}, {"metrics", json{{"dim", spec.dim()}, {"blocks", blocks}}}});
      return 0;
    }

    // ---- geodesic shoot ----
    if (shoot_cmd->parsed()) {
      wp::ModelSpec spec = config_path.empty() ? infer_spec(x0_text, x0_text) : cfg.spec;
      const wp::ChartPoint x0 = parse_point(x0_text, spec);
      const wp::TangentVector v0 = parse_tangent(v0_text, spec);
      wp::ShootOptions so;
      so.tol = cfg.tol_ivp;
      so.sample_ds = sample_ds;
      const wp::Trajectory traj = wp::shoot(spec, x0, v0, shoot_length, so);
      const char* term = traj.termination == wp::Termination::length_reached ? "length-reached"
                         : traj.termination == wp::Termination::boundary_hit ? "boundary-hit"
                                                                             : "step-failure";
      const bool ok = traj.termination != wp::Termination::step_failure;
      emit(cfg, run_id_for("shoot", cfg), trajectory_table(spec, traj),
           json{{"experiment", "shoot"},
                {"params", json{{"x0", x0_text}, {"v0", v0_text}, {"length", shoot_length}}},
                {"pass", ok},
                {"metrics", json{{"termination", term}, {"length", traj.length()},
                                 {"boundary_block", traj.boundary_block}}}});
      return ok ? 0 : 1;
    }

    // ---- geodesic connect ----
    if (connect_cmd->parsed()) {
      wp::ModelSpec spec = config_path.empty() ? infer_spec(from_text, to_text) : cfg.spec;
      const wp::ChartPoint p = parse_point(from_text, spec);
      const wp::ChartPoint q = parse_point(to_text, spec);
      wp::ConnectOptions co;
      co.tol = cfg.tol_bvp;
      co.seed = cfg.seed;
      const wp::GeodesicPath path = wp::connect(spec, p, q, co);
      emit(cfg, run_id_for("connect", cfg), trajectory_table(spec, path.traj),
           json{{"experiment", "connect"},
                {"params", json{{"from", from_text}, {"to", to_text}, {"tol", cfg.tol_bvp}}},
                {"pass", path.converged},
                {"metrics", json{{"length", path.length}, {"method", path.method},
                                 {"mismatch", path.mismatch}}}});
      return path.converged ? 0 : 1;
    }

    // ---- distance ----
    if (dist_cmd->parsed()) {
      wp::ModelSpec spec = config_path.empty() ? infer_spec(from_text, to_text) : cfg.spec;
      const wp::ChartPoint p = parse_point(from_text, spec);
      const wp::ChartPoint q = parse_point(to_text, spec);
      const double d = wp::distance(spec, p, q, cfg.tol_bvp);
      std::cout << wp::format_double(d) << "\n";
      if (!cfg.out.empty()) {
        wp::write_json(std::filesystem::path(cfg.out) / (run_id_for("distance", cfg) + ".json"),
                       json{{"experiment", "distance"},
                            {"params", json{{"from", from_text}, {"to", to_text}}},
                            {"pass", true}, {"metrics", json{{"distance", d}}}});
      }
      return 0;
    }

    // ---- experiment corner ----
    if (corner_cmd->parsed()) {
      wp::CornerParams par;
      par.eps = c_eps;
      par.Cc = c_cc;
      par.Ct = c_ct;
      for (const auto& v : split_ws(c_t1)) par.T1.push_back(parse_complex(v));
      for (const auto& v : split_ws(c_t2)) par.T2.push_back(parse_complex(v));
      if (par.T1.size() < par.T2.size()) par.T1.resize(par.T2.size());
      if (par.T2.size() < par.T1.size()) par.T2.resize(par.T1.size());

      wp::CsvTable tab({"eps", "Cc", "Ct", "offset", "L1", "L2", "gap", "result"});
      const wp::CornerReport rep = wp::corner_comparison(par, cfg.tol_quad);
      bool all_ok = rep.gap > 0.0;
      double off = 0.0;
      for (std::size_t j = 0; j < par.T1.size(); ++j) off += std::abs(par.T2[j] - par.T1[j]);
      tab.add_row({wp::format_double(par.eps), wp::format_double(par.Cc),
                   wp::format_double(par.Ct), wp::format_double(off),
                   wp::format_double(rep.L1), wp::format_double(rep.L2),
                   wp::format_double(rep.gap), rep.gap > 0.0 ? "pass" : "fail"});
      if (c_grid) {
        for (double cc : {0.25, 0.5, 1.0, 2.0, 4.0})
          for (double ct : {0.25, 0.5, 1.0, 2.0, 4.0})
            for (double o : {0.0, 1.0, 2.0, 3.0, 4.0})
              for (double eps : {1e-2, 1e-4}) {
                wp::CornerParams g;
                g.Cc = cc;
                g.Ct = ct;
                g.eps = eps;
                g.T1 = {wp::complex(0, 0)};
                g.T2 = {wp::complex(o, 0)};
                const wp::CornerReport r = wp::corner_comparison(g, cfg.tol_quad);
                all_ok = all_ok && r.gap > 0.0;
                tab.add_row({wp::format_double(eps), wp::format_double(cc), wp::format_double(ct),
                             wp::format_double(o), wp::format_double(r.L1),
                             wp::format_double(r.L2), wp::format_double(r.gap),
                             r.gap > 0.0 ? "pass" : "fail"});
              }
      }
      emit(cfg, run_id_for("corner", cfg), tab,
           json{{"experiment", "corner"},
                {"params", json{{"eps", par.eps}, {"Cc", par.Cc}, {"Ct", par.Ct}}},
                {"pass", all_ok},
                {"metrics", json{{"L1", rep.L1}, {"L2", rep.L2}, {"gap", rep.gap}}}});
      return all_ok ? 0 : 1;
    }

    // ---- experiment pairing ----
    if (pairing_cmd->parsed()) {
      wp::CsvTable tab({"tmod", "delta", "value"});
      std::vector<std::pair<double, double>> samples;
      for (int k = p_kmin; k <= p_kmax; ++k) {
        const double t = std::pow(10.0, -k);
        const double v = wp::wp_pairing(wp::CollarParams(t, p_delta), cfg.tol_quad);
        samples.emplace_back(t, v);
        tab.add_row(std::vector<double>{t, p_delta, v});
      }
      const wp::FitReport fit = wp::asymptotic_fit(samples);
      const bool pass = std::abs(fit.alpha - 2.0) <= 0.05 && std::abs(fit.beta - 3.0) <= 0.05;
      emit(cfg, run_id_for("pairing", cfg), tab,
           json{{"experiment", "pairing"},
                {"params", json{{"kmin", p_kmin}, {"kmax", p_kmax}, {"delta", p_delta}}},
                {"pass", pass}, {"metrics", json(fit)}});
      return pass ? 0 : 1;
    }

    // ---- experiment dehn-twist ----
    if (dehn_cmd->parsed()) {
      const auto shape = d_profile == "flat-top" ? wp::TwistProfile::Shape::flat_top
                                                 : wp::TwistProfile::Shape::smoothstep;
      wp::CsvTable tab({"k", "tmod", "value"});
      std::vector<double> vals;
      bool decreasing = true;
      for (int k = d_kmin; k <= d_kmax; ++k) {
        const double t = std::pow(10.0, -k);
        const double v = wp::dehn_twist_norm(wp::TwistProfile(t, shape), cfg.tol_quad);
        if (!vals.empty()) decreasing = decreasing && v < vals.back();
        vals.push_back(v);
        tab.add_row(std::vector<double>{static_cast<double>(k), t, v});
      }
      const double ratio = vals.back() / vals.front();
      // empirical slope of log(value) against log(-log tmod)
      std::vector<std::pair<double, double>> loglog;
      for (int k = d_kmin; k <= d_kmax; ++k)
        loglog.emplace_back(-std::log(std::pow(10.0, -k)), vals[static_cast<std::size_t>(k - d_kmin)]);
      const wp::FitReport slope = wp::powerlaw_fit(loglog);
      emit(cfg, run_id_for("dehn-twist", cfg), tab,
           json{{"experiment", "dehn-twist"},
                {"params", json{{"kmin", d_kmin}, {"kmax", d_kmax}, {"profile", d_profile}}},
                {"pass", decreasing},
                {"metrics", json{{"final_over_initial", ratio}, {"decreasing", decreasing},
                                 {"loglog_slope", slope.alpha}}}});
      return decreasing ? 0 : 1;
    }

    // ---- experiment nonrefraction ----
    if (nonref_cmd->parsed()) {
      wp::ModelSpec spec(2, 1, {1.0, 1.5});
      wp::Sampler smp(cfg.seed ^ 0xc8);
      wp::CsvTable tab({"case", "min_interior_u", "length", "result"});
      bool all_ok = true;
      for (int k = 0; k < n_probes; ++k) {
        wp::ChartPoint p = smp.point(spec, 0.4, 1.2, 0.8, 0.4);
        wp::ChartPoint q = smp.point(spec, 0.4, 1.2, 0.8, 0.4);
        q.u[0] = 0.0;
        q.u[1] = p.u[1];
        q.theta[1] = p.theta[1];
        const wp::NonrefractionReport rep = wp::nonrefraction_probe(spec, p, q, cfg.tol_bvp, 101);
        const bool ok = rep.min_interior_u > 1e-3;
        all_ok = all_ok && ok;
        tab.add_row({std::to_string(k), wp::format_double(rep.min_interior_u),
                     wp::format_double(rep.path.length), ok ? "pass" : "fail"});
      }
      emit(cfg, run_id_for("nonrefraction", cfg), tab,
           json{{"experiment", "nonrefraction"}, {"params", json{{"probes", n_probes}}},
                {"pass", all_ok}, {"metrics", json::object()}});
      return all_ok ? 0 : 1;
    }

    // ---- experiment cat0 ----
    if (cat0_cmd->parsed()) {
      wp::ModelSpec spec(1, 1);
      wp::Sampler smp(cfg.seed ^ 0xca);
      wp::CsvTable tab({"case_id", "lhs", "rhs", "slack", "pass"});
      bool all_ok = true;
      const double tol = cfg.tol_bvp;
      for (int k = 0; k < c_cases; ++k) {
        const wp::ChartPoint p = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
        const wp::ChartPoint q = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
        const wp::ChartPoint r = smp.point(spec, 0.3, 2.0, 1.2, 0.8);
        const wp::Cat0Report rep = wp::cat0_check(spec, p, q, r, tol);
        const bool ok = rep.slack >= -3.0 * tol;
        all_ok = all_ok && ok;
        tab.add_row({std::to_string(k), wp::format_double(rep.lhs), wp::format_double(rep.rhs),
                     wp::format_double(rep.slack), ok ? "pass" : "fail"});
      }
      emit(cfg, run_id_for("cat0", cfg), tab,
           json{{"experiment", "cat0"}, {"params", json{{"cases", c_cases}}},
                {"pass", all_ok}, {"metrics", json::object()}});
      return all_ok ? 0 : 1;
    }

    // ---- experiment harnack ----
    if (harnack_cmd->parsed()) {
      wp::CsvTable tab({"c1", "mix", "hypothesis_ok", "ratio", "bound", "result"});
      bool all_ok = true;
      for (double c1 : {0.5, 1.0, 2.0}) {
        for (double mix : {0.0, 0.25, 0.5}) {
          wp::SampledFunction f;
          const double sc = std::sqrt(c1);
          for (int k = 0; k < 513; ++k) {
            const double x = -2.0 + 4.0 * k / 512.0;
            f.grid.push_back(x);
            f.values.push_back(std::cosh(sc * x) + mix * 0.5 * std::sinh(sc * x));
          }
          const wp::HarnackReport rep = wp::harnack_verify(f, c1, 1.0);
          const double bound = std::cosh(2.0 * sc);
          const bool ok = rep.hypothesis_ok && rep.ratio <= bound;
          all_ok = all_ok && ok;
          tab.add_row({wp::format_double(c1), wp::format_double(mix),
                       rep.hypothesis_ok ? "1" : "0", wp::format_double(rep.ratio),
                       wp::format_double(bound), ok ? "pass" : "fail"});
        }
      }
      emit(cfg, run_id_for("harnack", cfg), tab,
           json{{"experiment", "harnack"}, {"params", json::object()},
                {"pass", all_ok}, {"metrics", json::object()}});
      return all_ok ? 0 : 1;
    }

    // ---- experiment perturbation ----
    if (pert_cmd->parsed()) {
      wp::ModelSpec pert(1, 1, {1.0}, {pe_coeff});
      std::vector<wp::ScaledPair> pairs;
      wp::CsvTable tab({"scale", "pair", "gap"});
      for (double U : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        wp::ScaledPair a;
        a.scale = U;
        a.p = wp::ChartPoint{{U}, {0.0}, {wp::complex(0.0, 0.0)}};
        a.q = wp::ChartPoint{{0.5 * U}, {0.0}, {wp::complex(0.75 * U, 0.0)}};
        pairs.push_back(a);
      }
      wp::ModelSpec base = pert;
      std::fill(base.pert.begin(), base.pert.end(), 0.0);
      int idx = 0;
      for (const auto& sp : pairs) {
        const double gap = std::abs(wp::distance(pert, sp.p, sp.q, 1e-11) -
                                    wp::distance(base, sp.p, sp.q, 1e-11));
        tab.add_row(std::vector<double>{sp.scale, static_cast<double>(idx++), gap});
      }
      const wp::FitReport fit = wp::perturbation_gap_fit(pert, pairs, 1e-11);
      const bool pass = fit.alpha >= 2.8;
      emit(cfg, run_id_for("perturbation", cfg), tab,
           json{{"experiment", "perturbation"}, {"params", json{{"pert", pe_coeff}}},
                {"pass", pass}, {"metrics", json(fit)}});
      return pass ? 0 : 1;
    }

    // ---- suite acceptance ----
    if (accept_cmd->parsed()) {
      const auto results = wp::run_acceptance(cfg.seed);
      wp::CsvTable tab({"id", "name", "pass", "seconds", "details"});
      json jr = json::array();
      int failed = 0;
      for (const auto& r : results) {
        std::cout << wp::criterion_line(r) << "\n";
        failed += r.pass ? 0 : 1;
        tab.add_row({std::to_string(r.id), r.name, r.pass ? "pass" : "fail",
                     wp::format_double(r.seconds), r.details});
        jr.push_back(json{{"id", r.id}, {"name", r.name}, {"pass", r.pass},
                          {"known_defect", r.known_defect}, {"seconds", r.seconds},
                          {"details", r.details}});
      }
      if (!cfg.out.empty()) {
        const std::filesystem::path dir(cfg.out);
        wp::atomic_write(dir / (run_id_for("acceptance", cfg) + ".csv"), tab.csv());
        wp::write_json(dir / (run_id_for("acceptance", cfg) + ".json"),
                       json{{"experiment", "acceptance"}, {"seed", cfg.seed},
                            {"pass", failed == 0}, {"criteria", jr}});
      }
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::cerr << "no subcommand selected\n";
  return 2;
}
