// curvislice command-line driver: builds projections of the ODE
// xddot = F(x, xdot), slices discretized fields along them, analyzes jumps
// and measures, reconstructs the symmetric gradient, and runs the
// verification suite. Configuration is a single JSON file; --set overrides
// individual keys with dotted paths. All randomness flows from one seed.
#include <filesystem>

#include <CLI11.hpp>

#include "acceptance_suite.hpp"
#include "curvislice/io.hpp"

namespace fs = std::filesystem;
using namespace curvislice;

namespace {

struct ExperimentConfig {
  Json raw;

  QuadraticField field() const {
    if (raw.contains("field_file"))
      return load_field(raw.at("field_file").get<std::string>());
    if (raw.contains("field")) return field_from_json(raw.at("field"));
    throw ConfigError("config: missing field or field_file");
  }

  ODESettings ode() const {
    ODESettings s;
    if (!raw.contains("ode")) return s;
    const Json& j = raw.at("ode");
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.abs_tol = j.value("abs_tol", s.abs_tol);
    s.max_step = j.value("max_step", s.max_step);
    s.fixed_step = j.value("fixed_step", s.fixed_step);
    if (j.value("method", "adaptive") == std::string("rk4")) s.method = OdeMethod::FixedRK4;
    s.validate();
    return s;
  }

  Box domain() const {
    if (!raw.contains("domain")) throw ConfigError("config: missing domain");
    return box_from_json(raw.at("domain"));
  }

  double grid_h() const { return raw.value("grid_h", 1.0 / 64); }

  // The analyzed field u. Kinds: affine {matrix, offset}, jump {level plane/
  // sphere, plus, minus}, grid {file}.
  GridField u_field() const {
    if (!raw.contains("u")) throw ConfigError("config: missing u");
    const Json& j = raw.at("u");
    std::string kind = j.at("kind").get<std::string>();
    Box dom = domain();
    if (kind == "grid") return load_gridfield(j.at("file").get<std::string>());
    if (kind == "affine") {
      int n = dom.dim();
      Mat A = Mat::Zero(n, n);
      if (j.contains("matrix")) {
        auto rows = j.at("matrix");
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) A(a, b) = rows[a][b].get<double>();
      }
      Vec off = j.contains("offset") ? vec_from_json(j.at("offset")) : Vec(Vec::Zero(n));
      return GridField::sample(dom, grid_h(), n,
                               [A, off](const Vec& x) { return Vec(A * x + off); });
    }
    if (kind == "jump") return jump_field().u;
    throw ConfigError("config: unknown u.kind '" + kind + "'");
  }

  SyntheticJumpField jump_field() const {
    const Json& j = raw.at("u");
    if (j.at("kind").get<std::string>() != "jump")
      throw ConfigError("config: u.kind must be 'jump' for this subcommand");
    const Json& lv = j.at("level");
    std::function<double(const Vec&)> level;
    if (lv.contains("plane")) {
      Vec nrm = vec_from_json(lv.at("plane").at("normal"));
      double off = lv.at("plane").at("offset").get<double>();
      level = [nrm, off](const Vec& x) { return nrm.dot(x) - off; };
    } else if (lv.contains("sphere")) {
      Vec ctr = vec_from_json(lv.at("sphere").at("center"));
      double rad = lv.at("sphere").at("radius").get<double>();
      level = [ctr, rad](const Vec& x) { return (x - ctr).norm() - rad; };
    } else {
      throw ConfigError("config: u.level needs plane or sphere");
    }
    Vec plus = vec_from_json(j.at("plus"));
    Vec minus = vec_from_json(j.at("minus"));
    return make_jump_field(domain(), grid_h(), level,
                           [plus](const Vec&) { return plus; },
                           [minus](const Vec&) { return minus; });
  }

  ProjectionFamily family(const QuadraticField& F) const {
    if (!raw.contains("family")) throw ConfigError("config: missing family");
    const Json& j = raw.at("family");
    return build_family(F, vec_from_json(j.at("x0")), j.value("R0", 0.3), j.value("n_dirs", 12),
                        ode(), j.value("h_y", -1.0), seed());
  }

  SliceQuadrature quadrature() const {
    SliceQuadrature q;
    if (raw.contains("quadrature")) {
      const Json& j = raw.at("quadrature");
      q.n_y = j.value("n_y", q.n_y);
    }
    if (raw.contains("slice")) {
      const Json& j = raw.at("slice");
      q.h_t = j.value("h_t", q.h_t);
      q.jump_threshold = j.value("jump_threshold", q.jump_threshold);
      q.window = j.value("window", q.window);
    }
    return q;
  }

  uint64_t seed() const { return raw.value("seed", 0ull); }
  std::string output_dir() const { return raw.value("output_dir", "out"); }
  int threads() const { return raw.value("threads", 0); }
};

Json parse_override_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) return Json(text);  // plain strings pass through
  return v;
}

void apply_overrides(Json& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key.path=value");
    std::string path = kv.substr(0, eq);
    Json* node = &cfg;
    size_t pos = 0;
    for (;;) {
      auto dot = path.find('.', pos);
      std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
      if (dot == std::string::npos) {
        (*node)[key] = parse_override_value(kv.substr(eq + 1));
        break;
      }
      node = &(*node)[key];
      pos = dot + 1;
    }
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    in >> cfg.raw;
  } else {
    cfg.raw = Json::object();
  }
  apply_overrides(cfg.raw, sets);
  return cfg;
}

std::string schema_dir() {
  const char* src = CURVISLICE_SOURCE_DIR;
  return std::string(src) + "/schemas/";
}

void write_json_report(const Json& doc, const fs::path& path, const std::string& schema_name) {
  validate_against_schema_file(doc, schema_dir() + schema_name);
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

// long-format (quantity, index, value) rows for external plotting
void write_plot_rows(const std::vector<std::tuple<std::string, double, double>>& rows,
                     const fs::path& path) {
  std::ofstream out(path);
  out << "quantity,key,value\n";
  for (auto& [q, k, v] : rows) out << q << "," << fmt(k) << "," << fmt(v) << "\n";
}

int run_shoot(const ExperimentConfig& cfg, const fs::path& outdir, bool /*plot*/) {
  auto F = cfg.field();
  const Json& j = cfg.raw.at("shoot");
  Vec x0 = vec_from_json(j.at("x0"));
  Vec v0 = vec_from_json(j.at("v0"));
  double t0 = j.contains("t_span") ? j.at("t_span")[0].get<double>() : 0.0;
  double t1 = j.contains("t_span") ? j.at("t_span")[1].get<double>() : 1.0;
  std::vector<double> mandatory;
  double ht = j.value("h_t", 0.0);
  if (ht > 0)
    for (double t = t0; t <= t1 + 1e-12; t += ht) mandatory.push_back(t);
  Trajectory tr = integrate(F, x0, v0, {t0, t1}, cfg.ode(), mandatory);
  std::ofstream out(outdir / "trajectory.csv");
  write_trajectory_csv(tr, out);
  std::printf("wrote %s (%d nodes%s)\n", (outdir / "trajectory.csv").c_str(), tr.size(),
              tr.truncated_hi || tr.truncated_lo ? ", truncated at domain exit" : "");
  return 0;
}

int run_family(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  auto F = cfg.field();
  auto fam = cfg.family(F);
  Json rep;
  rep["x0"] = to_json(fam.x0());
  rep["R0"] = fam.R0();
  rep["n_dirs"] = fam.size();
  rep["max_roundtrip_residual"] = fam.diagnostics().max_roundtrip_residual;
  rep["shrink_steps"] = fam.diagnostics().shrink_steps;
  Json dirs = Json::array();
  for (int k = 0; k < fam.size(); ++k) dirs.push_back(to_json(fam.direction(k)));
  rep["directions"] = dirs;
  write_json_report(rep, outdir / "family_report.json", "family_report.schema.json");
  std::ofstream table(outdir / "projection_table.csv");
  write_projection_table_csv(fam, table);
  if (plot) {
    std::vector<std::tuple<std::string, double, double>> rows;
    for (int k = 0; k < fam.size(); ++k)
      rows.emplace_back("direction_angle", k, std::atan2(fam.direction(k)[1], fam.direction(k)[0]));
    write_plot_rows(rows, outdir / "family_plot.csv");
  }
  std::printf("family: %d directions, R0 = %g, roundtrip %.3g\n", fam.size(), fam.R0(),
              fam.diagnostics().max_roundtrip_residual);
  return 0;
}

int run_slice(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  auto F = cfg.field();
  auto u = cfg.u_field();
  const Json& j = cfg.raw.at("slice_request");
  Vec xi = vec_from_json(j.at("xi")).normalized();
  Vec x0 = vec_from_json(cfg.raw.at("family").at("x0"));
  double R0 = cfg.raw.at("family").value("R0", 0.3);
  auto par = build_parametrization(F, x0, xi, 2 * R0, 2 * R0, R0 / 4, cfg.ode());
  Vec y = vec_from_json(j.at("y"));
  SliceQuadrature q = cfg.quadrature();
  Slice1D s = extract_slice(u, par, y, q.h_t);
  std::ofstream out(outdir / "slice.csv");
  write_slice_csv(s, out);
  auto an = analyze_slice(s, q.jump_threshold, q.window);
  Json rep;
  rep["variation"] = an.variation;
  rep["ac_excluding_jumps"] = an.ac_excluding_jumps;
  Json jumps = Json::array();
  for (auto& jr : an.jumps)
    jumps.push_back({{"t", jr.t_jump},
                     {"left", jr.left_value},
                     {"right", jr.right_value},
                     {"amplitude", jr.amplitude}});
  rep["jumps"] = jumps;
  rep["mu_total"] = an.measure.total();
  write_json_report(rep, outdir / "slice_report.json", "slice_report.schema.json");
  if (plot) {
    std::vector<std::tuple<std::string, double, double>> rows;
    for (int k = 0; k < s.size(); ++k)
      if (s.mask[k]) rows.emplace_back("uhat", s.t[k], s.values[k]);
    write_plot_rows(rows, outdir / "slice_plot.csv");
  }
  std::printf("slice: %d samples, %zu jumps, variation %g\n", s.size(), an.jumps.size(),
              an.variation);
  return 0;
}

int run_jumps(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  auto F = cfg.field();
  auto f = cfg.jump_field();
  auto fam = cfg.family(F);
  SlicingCheckOptions opt;
  const Json& j = cfg.raw.value("jumps", Json::object());
  opt.n_slices = j.value("n_slices", 200);
  SliceQuadrature q = cfg.quadrature();
  opt.h_t = q.h_t;
  opt.jump_threshold = q.jump_threshold;
  opt.window = q.window;
  opt.grid_h = cfg.grid_h();
  opt.tol_pos = j.value("tol_pos", cfg.grid_h());
  opt.angle_min_deg = j.value("angle_min_deg", 5.0);
  opt.seed = cfg.seed();
  auto rep = jump_slicing_check(f, fam, opt);
  Json doc;
  doc["slices"] = rep.slices;
  doc["true_transversal"] = rep.true_transversal;
  doc["detected"] = rep.detected;
  doc["precision"] = rep.precision;
  doc["recall"] = rep.recall;
  doc["max_position_error"] = rep.max_position_error;
  doc["max_t_error"] = rep.max_t_error;
  doc["max_trace_error"] = rep.max_trace_error;
  doc["max_trace_rel"] = rep.max_trace_rel;
  write_json_report(doc, outdir / "slicing_report.json", "slicing_report.schema.json");
  if (plot) {
    write_plot_rows({{"precision", 0, rep.precision},
                     {"recall", 0, rep.recall},
                     {"max_position_error", 0, rep.max_position_error}},
                    outdir / "jumps_plot.csv");
  }
  std::printf("jumps: precision %.4f recall %.4f position %.3g\n", rep.precision, rep.recall,
              rep.max_position_error);
  return 0;
}

int run_symgrad(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  auto F = cfg.field();
  auto u = cfg.u_field();
  auto fam = cfg.family(F);
  ReconstructOptions opt;
  SliceQuadrature q = cfg.quadrature();
  opt.h_t = q.h_t;
  opt.jump_threshold = q.jump_threshold;
  opt.window = q.window;
  const Json& j = cfg.raw.value("symgrad", Json::object());
  Json doc;
  Json points = Json::array();
  std::vector<std::tuple<std::string, double, double>> rows;
  if (j.contains("points")) {
    for (const auto& pj : j.at("points")) {
      Vec x = vec_from_json(pj);
      auto rep = reconstruct_e(u, x, fam, opt);
      Json pt;
      pt["x"] = to_json(x);
      pt["e_upper_triangle"] = rep.e_of_u.triangle();
      pt["residual"] = rep.residual;
      pt["cond"] = rep.cond;
      pt["directions_used"] = rep.directions_used;
      points.push_back(pt);
      for (size_t c = 0; c < rep.e_of_u.triangle().size(); ++c)
        rows.emplace_back("e_tri_" + std::to_string(c), points.size() - 1,
                          rep.e_of_u.triangle()[c]);
    }
  }
  // grid mode: reconstruct over a lattice and dump header + binary blob of
  // upper-triangle components per node
  if (j.contains("grid_n")) {
    int gn = j.at("grid_n").get<int>();
    Box B = j.contains("box") ? box_from_json(j.at("box")) : cfg.domain();
    const int n = u.dim();
    int tri = SymMatrix::tri_size(n);
    std::vector<int> shape(n, gn);
    std::vector<double> blob;
    std::vector<int> idx(n, 0);
    for (;;) {
      Vec x(n);
      for (int k = 0; k < n; ++k)
        x[k] = B.origin[k] + (gn == 1 ? 0.5 : double(idx[k]) / (gn - 1)) * B.extents[k];
      try {
        auto rep = reconstruct_e(u, x, fam, opt);
        for (double t : rep.e_of_u.triangle()) blob.push_back(t);
      } catch (const Error&) {
        for (int t = 0; t < tri; ++t) blob.push_back(std::nan(""));
      }
      int k = n - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < gn) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
    Json header = {{"dim", n}, {"grid_n", gn}, {"box", box_to_json(B)}, {"components", tri}};
    doc["gradient_grid"] = {
        {"header", header},
        {"data_base64", base64_encode(reinterpret_cast<const unsigned char*>(blob.data()),
                                      blob.size() * sizeof(double))}};
  }
  doc["points"] = points;
  write_json_report(doc, outdir / "symgrad_report.json", "symgrad_report.schema.json");
  if (plot) write_plot_rows(rows, outdir / "symgrad_plot.csv");
  std::printf("symgrad: %zu point reconstructions\n", points.size());
  return 0;
}

int run_measure(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  auto F = cfg.field();
  auto u = cfg.u_field();
  auto fam = cfg.family(F);
  SliceQuadrature q = cfg.quadrature();
  Box dom = cfg.domain();
  Region all = [dom](const Vec& x) { return dom.contains(x); };
  Json per = Json::array();
  std::vector<std::tuple<std::string, double, double>> rows;
  double eta_sum = 0.0;
  for (int k = 0; k < fam.size(); ++k) {
    double mu = mu_xi_u(u, fam.projection(k), all, q);
    double eta = eta_xi(u, fam.projection(k), all, q);
    eta_sum += eta;
    per.push_back({{"xi", to_json(fam.direction(k))}, {"mu", mu}, {"eta", eta}});
    rows.emplace_back("mu", k, mu);
    rows.emplace_back("eta", k, eta);
  }
  const int n = u.dim();
  double sphere_area = n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  double mu_sum = 0.0;
  for (const auto& p : per) mu_sum += p.at("mu").get<double>();
  Json doc;
  doc["per_direction"] = per;
  doc["totals"] = {{"mu", mu_sum}, {"eta", eta_sum}};
  doc["integral_geometric"] = eta_sum * sphere_area / fam.size();
  write_json_report(doc, outdir / "measure_report.json", "measure_report.schema.json");
  if (plot) write_plot_rows(rows, outdir / "measure_plot.csv");
  std::printf("measure: %d directions, integral-geometric %g\n", fam.size(),
              doc["integral_geometric"].get<double>());
  return 0;
}

int run_shell(const ExperimentConfig& cfg, const fs::path& outdir, bool plot) {
  const Json& j = cfg.raw.value("shell", Json::object());
  Mat h = Mat::Identity(2, 2);
  if (j.contains("theta_hessian")) {
    auto rows = j.at("theta_hessian");
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) h(a, b) = rows[a][b].get<double>();
  }
  auto tgrad = [h](const Vec& xp) { return Vec(h * xp); };  // quadratic theta
  auto thess = [h](const Vec&) { return h; };
  auto u = cfg.u_field();
  Vec xq = j.contains("point") ? vec_from_json(j.at("point")) : Vec(Vec::Zero(3));
  std::vector<double> rhos = j.contains("rhos")
                                 ? j.at("rhos").get<std::vector<double>>()
                                 : std::vector<double>{1.0, 0.1, 0.01};
  Json sweep = Json::array();
  std::vector<std::tuple<std::string, double, double>> rows;
  for (double rho : rhos) {
    auto eg = shell_egradient(u, rho, tgrad, thess);
    SymMatrix e = eg.at(xq);
    sweep.push_back({{"rho", rho}, {"e_upper_triangle", e.triangle()}});
    rows.emplace_back("e_11", rho, e(0, 0));
    rows.emplace_back("e_33", rho, e(2, 2));
  }
  Json doc;
  doc["point"] = to_json(xq);
  doc["sweep"] = sweep;
  write_json_report(doc, outdir / "shell_report.json", "shell_report.schema.json");
  if (plot) write_plot_rows(rows, outdir / "shell_plot.csv");
  std::printf("shell: %zu rho values\n", rhos.size());
  return 0;
}

int run_verify(const fs::path& outdir) {
  auto results = curvislice::acceptance::run_all(true);
  int status = curvislice::acceptance::report(results);
  Json doc;
  Json arr = Json::array();
  for (const auto& r : results)
    arr.push_back({{"id", r.id},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"seconds", r.seconds},
                   {"detail", r.detail}});
  doc["criteria"] = arr;
  doc["all_pass"] = status == 0;
  write_json_report(doc, outdir / "verify_report.json", "verify_report.schema.json");
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvislice: curvilinear slicing of vector fields along ODE geodesics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  int threads = 0;
  bool plot = false;
  app.add_option("-c,--config", config_path, "experiment config JSON");
  app.add_option("--set", sets, "override config keys: a.b.c=value");
  app.add_option("--threads", threads, "worker threads (0 = auto, env CURVISLICE_THREADS)");
  app.add_flag("--plot-data", plot, "emit long-format CSV for external plotting");

  auto* c_shoot = app.add_subcommand("shoot", "integrate and dump a trajectory");
  auto* c_family = app.add_subcommand("family", "build a projection family + diagnostics");
  auto* c_slice = app.add_subcommand("slice", "extract and analyze one slice");
  auto* c_jumps = app.add_subcommand("jumps", "jump-slicing verification report");
  auto* c_symgrad = app.add_subcommand("symgrad", "reconstruct the symmetric gradient");
  auto* c_measure = app.add_subcommand("measure", "mu/eta per direction + integral-geometric");
  auto* c_shell = app.add_subcommand("shell", "shallow-shell rescaled gradient sweep");
  auto* c_verify = app.add_subcommand("verify", "run the full acceptance suite");
  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path, sets);
    if (threads > 0) set_thread_count(threads);
    else if (cfg.raw.contains("threads") && cfg.threads() > 0) set_thread_count(cfg.threads());
    fs::path outdir = cfg.output_dir();
    fs::create_directories(outdir);

    if (c_shoot->parsed()) return run_shoot(cfg, outdir, plot);
    if (c_family->parsed()) return run_family(cfg, outdir, plot);
    if (c_slice->parsed()) return run_slice(cfg, outdir, plot);
    if (c_jumps->parsed()) return run_jumps(cfg, outdir, plot);
    if (c_symgrad->parsed()) return run_symgrad(cfg, outdir, plot);
    if (c_measure->parsed()) return run_measure(cfg, outdir, plot);
    if (c_shell->parsed()) return run_shell(cfg, outdir, plot);
    if (c_verify->parsed()) return run_verify(outdir);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "config parse error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    Json err = {{"error", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
}
