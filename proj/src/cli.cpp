#include "hypwr/cli.hpp"

#include "hypwr/estimator.hpp"
#include "hypwr/io.hpp"
#include "hypwr/lopatinskii.hpp"
#include "hypwr/parallel.hpp"
#include "hypwr/spectral.hpp"
#include "hypwr/symmetrizer.hpp"
#include "hypwr/system_model.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace hypwr {

using nlohmann::json;
namespace fs = std::filesystem;

LogLevel log_level() {
  const char* env = std::getenv("HYPWR_LOG");
  if (!env) return LogLevel::Error;
  std::string s(env);
  if (s == "debug") return LogLevel::Debug;
  if (s == "info") return LogLevel::Info;
  return LogLevel::Error;
}

void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level()))
    std::cerr << "[hypwr] " << msg << "\n";
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cli", "config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("cli", "config",
                     "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  RunConfig cfg;
  if (doc.contains("system_path")) cfg.system_path = doc["system_path"].get<std::string>();
  if (doc.contains("command")) cfg.command = doc["command"].get<std::string>();
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (g.contains("sphere_resolution"))
      cfg.sphere_resolution = g["sphere_resolution"].get<int>();
    if (g.contains("gamma_ladder"))
      cfg.gamma_ladder = g["gamma_ladder"].get<std::vector<Real>>();
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
  if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();
  if (doc.contains("theta")) cfg.theta = doc["theta"].get<Real>();
  if (doc.contains("tolerances"))
    for (auto& [k, v] : doc["tolerances"].items())
      cfg.tolerance_overrides[k] = v.get<Real>();
  if (doc.contains("chart")) {
    const json& c = doc["chart"];
    Chart chart;
    if (c.contains("box")) {
      auto box = c["box"].get<std::vector<Real>>();
      int half = static_cast<int>(box.size()) / 2;
      chart.box_lo = Eigen::Map<Vec>(box.data(), half);
      chart.box_hi = Eigen::Map<Vec>(box.data() + half, half);
    }
    if (c.contains("cap_center")) {
      auto cc = c["cap_center"].get<std::vector<Real>>();
      chart.cap_center = Eigen::Map<Vec>(cc.data(), cc.size());
      chart.cap_radius = c.value("cap_radius", 0.5);
    }
    cfg.chart = chart;
  }
  return cfg;
}

void RunConfig::validate() const {
  if (sphere_resolution < 8)
    throw ParseError("cli", "config", "sphere_resolution must be >= 8");
  for (std::size_t i = 0; i + 1 < gamma_ladder.size(); ++i)
    if (gamma_ladder[i + 1] <= gamma_ladder[i])
      throw ParseError("cli", "config", "gamma_ladder must be strictly increasing");
}

Tols RunConfig::tolerances() const {
  Tols t;
  for (const auto& [key, v] : tolerance_overrides) {
    if (key == "system.rcond_min") t.rcond_min = v;
    else if (key == "system.fd_step_rel") t.fd_step_rel = v;
    else if (key == "spectral.cluster_tol") t.cluster_rel = v;
    else if (key == "spectral.realness") t.realness_rel = v;
    else if (key == "spectral.gap_min") t.gap_min_rel = v;
    else if (key == "spectral.eigvec_cond_max") t.eigvec_cond_max = v;
    else if (key == "spectral.kappa_min") t.kappa_min = v;
    else if (key == "lopatinskii.root_residual") t.root_residual = v;
    else if (key == "lopatinskii.weak_lc_min") t.weak_lc_min = v;
    else if (key == "lopatinskii.dtau_min") t.dtau_min = v;
    else if (key == "lopatinskii.omega_bracket_mult") t.omega_bracket_mult = v;
    else if (key == "lopatinskii.omega_bracket_cells")
      t.omega_bracket_cells = static_cast<int>(v);
    else if (key == "symmetrizer.krylov_trunc") t.krylov_trunc = v;
    else if (key == "symmetrizer.krylov_residual") t.krylov_residual = v;
    else if (key == "transport.flow_tol") t.flow_tol = v;
    else if (key == "transport.branch_gap") t.branch_gap_rel = v;
    else if (key == "estimator.gamma0") t.gamma0 = v;
    else if (key == "estimator.grid_n") t.grid_n_default = static_cast<int>(v);
    else if (key == "estimator.xmax_efolds") t.xmax_efolds = v;
    else
      throw ParseError("cli", "config", "unknown tolerance key '" + key + "'");
  }
  return t;
}

namespace {

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "run", "cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

HyperbolicSystem load_system(const RunConfig& cfg) {
  std::map<std::string, Real> overrides;
  if (cfg.theta) overrides["theta"] = *cfg.theta;
  return HyperbolicSystem::from_json_file(cfg.system_path, overrides);
}

// System files may carry a default chart next to the coefficients.
std::optional<Chart> chart_from_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("chart")) return std::nullopt;
  const json& c = doc["chart"];
  Chart chart;
  if (c.contains("box")) {
    auto box = c["box"].get<std::vector<Real>>();
    int half = static_cast<int>(box.size()) / 2;
    chart.box_lo = Eigen::Map<Vec>(box.data(), half);
    chart.box_hi = Eigen::Map<Vec>(box.data() + half, half);
  }
  if (c.contains("cap_center")) {
    auto cc = c["cap_center"].get<std::vector<Real>>();
    chart.cap_center = Eigen::Map<Vec>(cc.data(), cc.size());
    chart.cap_radius = c.value("cap_radius", 0.5);
  }
  return chart;
}

std::vector<BasePoint> default_sample_points(const HyperbolicSystem& sys) {
  std::vector<BasePoint> pts;
  const int d = sys.d();
  for (Real t : {0.0, 0.5}) {
    for (Real xd : {0.0, 0.5}) {
      BasePoint X(t, Vec::Zero(d - 1), xd, Frequency(1.0, Vec::Zero(d - 1), 0.0));
      pts.push_back(X);
    }
  }
  return pts;
}

int cmd_check(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  AssumptionReport rep = check_assumptions(sys, default_sample_points(sys), 100, tol);
  json j;
  j["command"] = "check";
  j["all_passed"] = rep.all_passed();
  json points = json::array();
  for (const auto& pc : rep.points) {
    json p;
    p["ad_invertible"] = pc.ad_invertible;
    p["ad_rcond"] = pc.ad_rcond;
    p["boundary_full_rank"] = pc.boundary_full_rank;
    p["p_matches_positive_eigenvalues"] = pc.p_matches_positive_eigenvalues;
    p["spectrum_real"] = pc.spectrum_real;
    p["semisimple"] = pc.semisimple;
    p["multiplicities_constant"] = pc.multiplicities_constant;
    p["multiplicity_pattern"] = pc.multiplicity_pattern;
    points.push_back(p);
  }
  j["points"] = points;
  write_json(fs::path(cfg.output_dir) / "assumption_report.json", j);
  return rep.all_passed() ? 0 : 1;
}

int cmd_classify(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  auto grid = circle_grid(cfg.sphere_resolution, 0.0);
  std::vector<std::string> cols = {"tau", "eta1", "gamma", "re_delta", "im_delta",
                                   "abs_delta", "class"};
  CsvWriter csv(cols);
  struct Row { BasePoint X; PointClass cls; Complex delta; bool has_delta; };
  std::vector<Row> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Row r;
    r.X = grid[i];
    r.cls = classify_point(sys, grid[i], tol);
    r.has_delta = r.cls != PointClass::Glancing;
    if (r.has_delta) {
      StableBundle sb = stable_subspace(sys, grid[i], tol);
      r.delta = lopatinskii_determinant(sys, grid[i], sb.basis);
    }
    rows[i] = r;
  }
  for (const auto& r : rows) {
    std::vector<std::string> vals = {
        format_real(r.X.freq.tau), format_real(r.X.freq.eta[0]),
        format_real(r.X.freq.gamma),
        r.has_delta ? format_real(r.delta.real()) : "nan",
        r.has_delta ? format_real(r.delta.imag()) : "nan",
        r.has_delta ? format_real(std::abs(r.delta)) : "nan",
        to_string(r.cls)};
    csv.add_row_mixed(vals);
  }
  csv.write(fs::path(cfg.output_dir) / "classification.csv");
  return 0;
}

int cmd_wr(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  WRReport rep = check_wr_membership(sys, cfg.sphere_resolution, {}, tol);
  json j;
  j["command"] = "wr";
  j["weak_lopatinskii"] = rep.weak_lopatinskii;
  j["critical_set_hyperbolic"] = rep.critical_set_hyperbolic;
  j["first_order_vanishing"] = rep.first_order_vanishing;
  j["wr"] = rep.wr;
  j["uniform_lopatinskii"] = rep.uniform_lopatinskii;
  j["min_abs_delta_gamma_pos"] = rep.min_abs_delta_gamma_pos;
  json roots = json::array();
  for (const auto& r : rep.roots) {
    json rootj;
    rootj["tau"] = r.zeta.tau;
    rootj["eta"] = std::vector<Real>(r.zeta.eta.data(),
                                     r.zeta.eta.data() + r.zeta.eta.size());
    rootj["dtau_delta"] = std::abs(r.dtau_delta);
    rootj["class"] = to_string(r.cls);
    roots.push_back(rootj);
  }
  j["roots"] = roots;
  write_json(fs::path(cfg.output_dir) / "wr_report.json", j);
  // Standalone fixture file for the discovered roots.
  if (!rep.roots.empty())
    write_json(fs::path(cfg.output_dir) / "gamma_roots.json", roots);
  return 0;
}

int cmd_symmetrize(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  WRReport wr = check_wr_membership(sys, cfg.sphere_resolution, {}, tol);
  std::vector<Frequency> sample;
  std::optional<Real> nu_hint;
  if (!wr.roots.empty()) {
    const auto& root = wr.roots.front();
    nu_hint = root.zeta.tau;
    for (Real dt : {-0.2, -0.05, 0.05, 0.2})
      for (Real g : {1e-2, 1e-1, 1.0})
        sample.emplace_back(root.zeta.tau + dt, root.zeta.eta, g);
  } else {
    for (Real g : {1e-2, 1e-1, 1.0})
      for (int k = 0; k < 8; ++k) {
        Real phi = 2.0 * M_PI * k / 8;
        Vec eta(sys.d() - 1);
        eta.setZero();
        eta[0] = std::sin(phi);
        sample.emplace_back(std::cos(phi), eta, g);
      }
  }
  Real rho = choose_rho(sys, sample, nu_hint, tol);
  std::vector<SymmetrizerSymbols> syms;
  for (const auto& z : sample) syms.push_back(build_symmetrizer(sys, z, rho, nu_hint, tol));
  ConditionReport rep = verify_symmetrizer_conditions(syms, 2000, cfg.seed, tol);

  json j;
  j["command"] = "symmetrize";
  j["rho"] = rho;
  j["hermitian"] = {{"ok", rep.hermitian}, {"residual", rep.hermitian_residual}};
  j["boundedness"] = {{"constant", rep.bound_constant},
                      {"max_violation", rep.bound_max_violation}};
  json diss;
  diss["min_slack"] = rep.min_dissipativity_ratio;
  diss["n_trials"] = rep.n_trials;
  diss["gamma_range"] = rep.gamma_range;
  if (rep.argmin_dissipativity.size() > 0) {
    std::vector<Real> re, im;
    for (int i = 0; i < rep.argmin_dissipativity.size(); ++i) {
      re.push_back(rep.argmin_dissipativity[i].real());
      im.push_back(rep.argmin_dissipativity[i].imag());
    }
    diss["argmin_vector_re"] = re;
    diss["argmin_vector_im"] = im;
  }
  j["dissipativity"] = diss;
  json bnd;
  bnd["min_slack"] = rep.min_boundary_slack;
  bnd["n_trials"] = rep.n_trials;
  bnd["gamma_range"] = rep.gamma_range;
  if (rep.argmin_boundary.size() > 0) {
    std::vector<Real> re, im;
    for (int i = 0; i < rep.argmin_boundary.size(); ++i) {
      re.push_back(rep.argmin_boundary[i].real());
      im.push_back(rep.argmin_boundary[i].imag());
    }
    bnd["argmin_vector_re"] = re;
    bnd["argmin_vector_im"] = im;
  }
  j["boundary"] = bnd;
  write_json(fs::path(cfg.output_dir) / "condition_report.json", j);
  bool ok = rep.hermitian && rep.min_dissipativity_ratio > 0 &&
            rep.min_boundary_slack > -1e-10;
  return ok ? 0 : 1;
}

int cmd_transport(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  WRReport wr = check_wr_membership(sys, cfg.sphere_resolution, {}, tol);
  if (wr.roots.empty()) {
    log_line(LogLevel::Info, "no critical set; transport command has nothing to trace");
    json j;
    j["command"] = "transport";
    j["roots"] = json::array();
    write_json(fs::path(cfg.output_dir) / "transport_report.json", j);
    return 0;
  }
  const int d = sys.d();
  // Branch owning the critical direction: the decaying eigenvalue at the root.
  auto stable_branch = [&](const BasePoint& X) {
    CMat a = reduced_symbol(sys, X, tol);
    SpectralData sd = eigendecompose(a, X.freq.lambda(), tol);
    StableBundle sb = stable_subspace(sys, X, tol);
    for (int i = 0; i < sys.n(); ++i) {
      CVec v = sd.eigenvectors.col(i);
      if ((sb.projector * v - v).norm() < 0.5) return i;
    }
    return 0;
  };
  std::vector<std::string> cols = {"x_d", "t"};
  for (int k = 1; k < d; ++k) cols.push_back("y" + std::to_string(k));
  cols.push_back("tau");
  for (int k = 1; k < d; ++k) cols.push_back("eta" + std::to_string(k));
  cols.push_back("gamma");
  cols.push_back("re_delta");
  cols.push_back("im_delta");
  CsvWriter traj_csv(cols);

  const auto& root = wr.roots.front();
  const int branch = stable_branch(root.point);
  FlowState start = FlowState::from_point(root.point);
  Trajectory traj = hamiltonian_flow(sys, branch, start, 0.5, 1.0 / 128, cfg.chart, tol);
  for (const auto& s : traj.states) {
    Complex dval = transport_delta(sys, branch, s.to_point(), cfg.chart, tol);
    std::vector<Real> row = {s.x_d, s.t};
    for (int k = 0; k + 1 < d; ++k) row.push_back(s.y[k]);
    row.push_back(s.tau);
    for (int k = 0; k + 1 < d; ++k) row.push_back(s.eta[k]);
    row.push_back(s.gamma);
    row.push_back(dval.real());
    row.push_back(dval.imag());
    traj_csv.add_row(row);
  }
  traj_csv.write(fs::path(cfg.output_dir) / "trajectory.csv");

  // Transport-equation residual under step refinement.
  CsvWriter res_csv({"fd_step", "residual"});
  BasePoint Xmid = traj.states[traj.states.size() / 2].to_point();
  for (Real h : {0.08, 0.04, 0.02}) {
    auto dval = [&](const BasePoint& X) { return transport_delta(sys, branch, X, cfg.chart, tol); };
    auto shifted = [&](int coord, Real hh) {
      BasePoint Xs = Xmid;
      if (coord == 0) Xs.t += hh;
      else if (coord == 1) Xs.y[0] += hh;
      else if (coord == 2) Xs.x_d += hh;
      else if (coord == 3) Xs.freq.tau += hh;
      else Xs.freq.eta[0] += hh;
      return Xs;
    };
    auto branch_mu = [&](const BasePoint& X) {
      CMat a = reduced_symbol(sys, X, tol);
      SpectralData sd = eigendecompose(a, X.freq.lambda(), tol);
      return sd.eigenvalues[branch];
    };
    Complex d_xd = (dval(shifted(2, h)) - dval(shifted(2, -h))) / (2 * h);
    Complex d_tau = (dval(shifted(3, h)) - dval(shifted(3, -h))) / (2 * h);
    Complex d_eta = (dval(shifted(4, h)) - dval(shifted(4, -h))) / (2 * h);
    Complex d_t = (dval(shifted(0, h)) - dval(shifted(0, -h))) / (2 * h);
    Complex d_y = (dval(shifted(1, h)) - dval(shifted(1, -h))) / (2 * h);
    Complex a_tau = (branch_mu(shifted(3, h)) - branch_mu(shifted(3, -h))) / (2 * h);
    Complex a_eta = (branch_mu(shifted(4, h)) - branch_mu(shifted(4, -h))) / (2 * h);
    Complex a_t = (branch_mu(shifted(0, h)) - branch_mu(shifted(0, -h))) / (2 * h);
    Complex a_y = (branch_mu(shifted(1, h)) - branch_mu(shifted(1, -h))) / (2 * h);
    Complex bracket = d_t * a_tau - d_tau * a_t + d_y * a_eta - d_eta * a_y;
    res_csv.add_row({h, std::abs(d_xd + bracket)});
  }
  res_csv.write(fs::path(cfg.output_dir) / "transport_residual.csv");
  return 0;
}

int cmd_estimate(const HyperbolicSystem& sys, const RunConfig& cfg, const Tols& tol) {
  WRReport wr = check_wr_membership(sys, cfg.sphere_resolution, {}, tol);
  std::vector<Frequency> seq;
  std::optional<Real> nu_hint;
  if (!wr.roots.empty()) {
    const auto& root = wr.roots.front();
    nu_hint = root.zeta.tau;
    for (Real target : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3})
      seq.push_back(frequency_at_delta_tilde(root.zeta.tau, root.zeta.eta, target));
  } else {
    Vec eta(sys.d() - 1);
    eta.setZero();
    eta[0] = 1.0;
    for (Real g : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) seq.emplace_back(1.0, eta, g);
  }
  for (Real g : cfg.gamma_ladder) {
    Frequency z = seq.front();
    z.gamma = g;
    seq.push_back(z);
  }

  std::vector<EstimateReport> reports(seq.size());
  parallel_for(seq.size(), cfg.jobs, [&](std::size_t i) {
    reports[i] = sharp_constants(sys, seq[i], 16, cfg.seed, nu_hint, tol);
  });

  std::vector<std::string> cols = {"tau"};
  for (int k = 1; k < sys.d(); ++k) cols.push_back("eta" + std::to_string(k));
  cols.insert(cols.end(), {"gamma", "abs_delta_tilde", "sharp_filtered",
                           "sharp_unfiltered", "lhs", "rhs"});
  CsvWriter csv(cols);
  for (const auto& r : reports) {
    std::vector<Real> row = {r.zeta.tau};
    for (int k = 0; k + 1 < sys.d(); ++k) row.push_back(r.zeta.eta[k]);
    row.insert(row.end(), {r.zeta.gamma, r.abs_delta_tilde, r.sharp_filtered,
                           r.sharp_unfiltered, r.lhs, r.rhs_filtered});
    csv.add_row(row);
  }
  csv.write(fs::path(cfg.output_dir) / "estimate_sweep.csv");

  SvgSeries filt, unfilt;
  filt.label = "filtered";
  filt.color = "#1f77b4";
  unfilt.label = "unfiltered";
  unfilt.color = "#d62728";
  for (const auto& r : reports) {
    if (r.abs_delta_tilde <= 0) continue;
    filt.x.push_back(r.abs_delta_tilde);
    filt.y.push_back(r.sharp_filtered);
    unfilt.x.push_back(r.abs_delta_tilde);
    unfilt.y.push_back(r.sharp_unfiltered);
  }
  write_svg_loglog(fs::path(cfg.output_dir) / "estimate_constants.svg",
                   "sharp constants vs |delta-tilde|", "|delta-tilde|", "constant",
                   {filt, unfilt});
  return 0;
}

}  // namespace

int run(const RunConfig& config_in) {
  RunConfig config = config_in;
  try {
    config.validate();
    Tols tol = config.tolerances();
    fs::create_directories(config.output_dir);
    HyperbolicSystem sys = load_system(config);
    if (!config.chart) config.chart = chart_from_system_file(config.system_path);

    if (config.command != "check") {
      AssumptionReport rep = check_assumptions(sys, default_sample_points(sys), 100, tol);
      if (!rep.all_passed()) {
        json j;
        j["error"] = {{"module", "system_model"},
                      {"op", "check_assumptions"},
                      {"message", "structural assumptions failed; run 'check' for details"}};
        std::cerr << j.dump() << "\n";
        return 1;
      }
    }

    if (config.command == "check") return cmd_check(sys, config, tol);
    if (config.command == "classify") return cmd_classify(sys, config, tol);
    if (config.command == "wr") return cmd_wr(sys, config, tol);
    if (config.command == "symmetrize") return cmd_symmetrize(sys, config, tol);
    if (config.command == "transport") return cmd_transport(sys, config, tol);
    if (config.command == "estimate") return cmd_estimate(sys, config, tol);
    throw ParseError("cli", "run", "unknown command '" + config.command + "'");
  } catch (const ParseError& e) {
    json j;
    j["error"] = {{"module", e.module_name()}, {"op", e.op_name()}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    json j;
    j["error"] = {{"module", e.module_name()}, {"op", e.op_name()}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json j;
    j["error"] = {{"module", "cli"}, {"op", "run"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 2;
  }
}

}  // namespace hypwr
