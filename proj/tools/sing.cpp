// Command-line front end for the SING library: seeded toy-data simulation,
// single-dataset LNGCA, component matching, joint-rank permutation testing,
// and the full two-dataset decomposition. All outputs are deterministic for
// a fixed seed; every run writes a manifest.json that reproduces it.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sing/sing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct OutputWriter {
  fs::path dir;
  sing::MatrixFormat format = sing::MatrixFormat::csv;
  std::vector<std::string> files;

  std::string write(const std::string& stem, const sing::Matrix& m) {
    const std::string name =
        stem + (format == sing::MatrixFormat::binary ? ".bin" : ".csv");
    sing::write_matrix((dir / name).string(), m, format);
    files.push_back(name);
    return name;
  }

  std::string write(const std::string& stem, const sing::Vector& v) {
    return write(stem, sing::Matrix(v));
  }

  void manifest(json j) {
    j["version"] = sing::version;
    j["files"] = files;
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out)
      throw sing::io_error("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
  }
};

OutputWriter make_writer(const std::string& out_dir, const std::string& fmt) {
  OutputWriter w;
  w.dir = out_dir;
  fs::create_directories(w.dir);
  if (fmt == "bin" || fmt == "binary")
    w.format = sing::MatrixFormat::binary;
  else if (fmt == "csv")
    w.format = sing::MatrixFormat::csv;
  else
    throw sing::invalid_input_error("unknown format: " + fmt +
                                    " (expected csv or bin)");
  return w;
}

sing::DataMatrix load_data(const std::string& path) {
  sing::Matrix m = sing::read_matrix(path);
  if (m.rows() < 3 || m.cols() < 2)
    throw sing::invalid_input_error(path + ": expected an n x p matrix with " +
                                    "n >= 3 subjects (rows), p >= 2 features");
  return sing::DataMatrix(std::move(m));
}

std::variant<sing::RhoExtent, double> parse_rho(const std::string& s) {
  if (s == "small") return sing::RhoExtent::small;
  if (s == "medium") return sing::RhoExtent::medium;
  if (s == "large") return sing::RhoExtent::large;
  try {
    const double v = std::stod(s);
    if (!(v > 0.0))
      throw sing::invalid_input_error("--rho numeric value must be positive");
    return v;
  } catch (const std::invalid_argument&) {
    throw sing::invalid_input_error(
        "--rho must be small, medium, large or a positive number, got '" + s +
        "'");
  }
}

json rho_json(const std::variant<sing::RhoExtent, double>& rho) {
  json j;
  if (std::holds_alternative<double>(rho)) {
    j["extent"] = "numeric";
    j["rho_numeric"] = std::get<double>(rho);
  } else {
    j["extent"] = sing::to_string(std::get<sing::RhoExtent>(rho));
    j["rho_numeric"] = nullptr;
  }
  return j;
}

json rank_test_json(const sing::JointRankTest& t) {
  return json{{"r_j", t.r_j},
              {"pvalues_fwer", t.pvalues_fwer},
              {"correlations", t.correlations},
              {"n_perm", t.n_perm},
              {"alpha_level", t.alpha_level},
              {"seed", t.seed}};
}

json diagnostics_json(const sing::SingDiagnostics& d) {
  return json{{"rho", d.rho},
              {"rho_label", d.rho_label},
              {"joint_distance", d.joint_distance},
              {"lngca_x_converged", d.lngca_x_converged},
              {"lngca_y_converged", d.lngca_y_converged},
              {"joint_converged", d.joint_converged},
              {"joint_iterations", d.joint_iterations},
              {"max_feasibility_error", d.max_feasibility_error},
              {"pmse_joint", d.pmse_joint},
              {"rank_test", rank_test_json(d.rank_test)},
              {"warning", d.warning},
              {"step_size_mode", d.step_size_mode},
              {"seed_x", d.seed_x},
              {"seed_y", d.seed_y},
              {"seed_perm", d.seed_perm}};
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  sing::ToySpec spec;
  std::string out, format = "csv";
};

int run_simulate(const SimulateArgs& a) {
  OutputWriter w = make_writer(a.out, a.format);
  const sing::ToyData toy = sing::generate_toy(a.spec);
  w.write("X", toy.X.values);
  w.write("Y", toy.Y.values);
  fs::create_directories(w.dir / "truth");
  w.write("truth/M_j", toy.truth.M_j);
  w.write("truth/S_jx", toy.truth.S_jx);
  w.write("truth/S_jy", toy.truth.S_jy);
  w.write("truth/S_ix", toy.truth.S_ix);
  w.write("truth/S_iy", toy.truth.S_iy);
  w.write("truth/D_x", toy.truth.D_x);
  w.write("truth/D_y", toy.truth.D_y);
  w.manifest(json{{"command", "simulate"},
                  {"config", json{{"n", a.spec.n},
                                  {"grid", a.spec.grid},
                                  {"nodes", a.spec.nodes},
                                  {"r_j", a.spec.r_j},
                                  {"r_ind", a.spec.r_ind},
                                  {"noise_sd", a.spec.noise_sd},
                                  {"seed", a.spec.seed},
                                  {"format", a.format}}}});
  std::cout << "simulate: wrote X (" << toy.X.n() << "x" << toy.X.p()
            << "), Y (" << toy.Y.n() << "x" << toy.Y.p() << ") to " << a.out
            << "\n";
  return 0;
}

// ---- lngca ---------------------------------------------------------------

struct LngcaArgs {
  std::string x, out, format = "csv";
  sing::Index rank = 0;
  double alpha = 0.8, tol = 1e-10;
  int restarts = 20, max_iter = 1500;
  std::uint64_t seed = 0;
  bool standardize = false;
};

int run_lngca(const LngcaArgs& a) {
  OutputWriter w = make_writer(a.out, a.format);
  const sing::DataMatrix raw = load_data(a.x);
  const sing::DataMatrix pre = a.standardize
                                   ? sing::standardize_iterative(raw).data
                                   : sing::double_center(raw);
  const sing::Decomposition dec = sing::lngca(pre, a.rank, a.alpha, a.restarts,
                                              a.seed, a.max_iter, a.tol);
  // M written here is the OLS estimate used for matching downstream.
  const sing::MixingEstimate mix = sing::estimate_mixing_ols(dec.S, pre);
  w.write("U", dec.U.U);
  w.write("S", dec.S);
  w.write("M", mix.M);
  w.write("jb_values", dec.jb_values);
  w.manifest(json{
      {"command", "lngca"},
      {"config", json{{"x", a.x},
                      {"rank", a.rank},
                      {"alpha", a.alpha},
                      {"restarts", a.restarts},
                      {"seed", a.seed},
                      {"max_iter", a.max_iter},
                      {"tol", a.tol},
                      {"standardize", a.standardize},
                      {"format", a.format}}},
      {"diagnostics", json{{"converged", dec.converged},
                           {"iterations", dec.iterations},
                           {"best_restart", dec.best_restart},
                           {"objective", dec.objective_trace.back()},
                           {"max_feasibility_error",
                            dec.max_feasibility_error},
                           {"mixing_method", mix.method}}}});
  std::cout << "lngca: " << a.rank << " components, JB "
            << dec.jb_values.transpose() << "\n";
  return 0;
}

// ---- match ---------------------------------------------------------------

struct MatchArgs {
  std::string mx, my, ux, uy, out, format = "csv";
};

int run_match(const MatchArgs& a) {
  OutputWriter w = make_writer(a.out, a.format);
  // Scores are column-centered before matching, as greedy_match expects.
  auto center = [](sing::Matrix m) {
    m.rowwise() -= m.colwise().mean().eval();
    return m;
  };
  const sing::Matrix Mx = center(sing::read_matrix(a.mx));
  const sing::Matrix My = center(sing::read_matrix(a.my));
  const sing::Unmixing Ux(sing::read_matrix(a.ux));
  const sing::Unmixing Uy(sing::read_matrix(a.uy));
  const sing::MatchResult res = sing::greedy_match(Mx, My, Ux, Uy);

  w.write("Ux", res.Ux_reordered.U);
  w.write("Uy", res.Uy_reordered.U);
  w.write("Mx", res.Mx_reordered);
  w.write("My", res.My_reordered);
  sing::Vector dist(static_cast<sing::Index>(res.matched_distances.size()));
  for (sing::Index i = 0; i < dist.size(); ++i)
    dist(i) = res.matched_distances[static_cast<std::size_t>(i)];
  w.write("distances", dist);
  auto order_vec = [](const std::vector<sing::Index>& o) {
    sing::Vector v(static_cast<sing::Index>(o.size()));
    for (sing::Index i = 0; i < v.size(); ++i)
      v(i) = static_cast<double>(o[static_cast<std::size_t>(i)]);
    return v;
  };
  w.write("order_x", order_vec(res.order_x));
  w.write("order_y", order_vec(res.order_y));
  w.manifest(json{{"command", "match"},
                  {"config", json{{"mx", a.mx},
                                  {"my", a.my},
                                  {"ux", a.ux},
                                  {"uy", a.uy},
                                  {"format", a.format}}},
                  {"diagnostics",
                   json{{"matched_distances", res.matched_distances},
                        {"order_x", res.order_x},
                        {"order_y", res.order_y}}}});
  std::cout << "match: " << res.matched_distances.size()
            << " pairs, closest distance "
            << (res.matched_distances.empty() ? 0.0
                                              : res.matched_distances.front())
            << "\n";
  return 0;
}

// ---- permtest --------------------------------------------------------------

struct PermtestArgs {
  std::string mx, my, out, format = "csv";
  int n_perm = 1000;
  double alpha_level = 0.01;
  std::uint64_t seed = 0;
};

int run_permtest(const PermtestArgs& a) {
  OutputWriter w = make_writer(a.out, a.format);
  const sing::Matrix Mx = sing::read_matrix(a.mx);
  const sing::Matrix My = sing::read_matrix(a.my);
  const sing::JointRankTest t =
      sing::perm_test_joint_rank(Mx, My, a.n_perm, a.alpha_level, a.seed);
  sing::Vector pv(static_cast<sing::Index>(t.pvalues_fwer.size()));
  sing::Vector cr(static_cast<sing::Index>(t.correlations.size()));
  for (sing::Index i = 0; i < pv.size(); ++i) {
    pv(i) = t.pvalues_fwer[static_cast<std::size_t>(i)];
    cr(i) = t.correlations[static_cast<std::size_t>(i)];
  }
  w.write("pvalues", pv);
  w.write("correlations", cr);
  w.manifest(json{{"command", "permtest"},
                  {"config", json{{"mx", a.mx},
                                  {"my", a.my},
                                  {"n_perm", a.n_perm},
                                  {"alpha_level", a.alpha_level},
                                  {"seed", a.seed},
                                  {"format", a.format}}},
                  {"diagnostics", rank_test_json(t)}});
  std::cout << "permtest: r_j = " << t.r_j << "\n";
  return 0;
}

// ---- export ----------------------------------------------------------------

struct ExportArgs {
  std::string in, kind = "net", out, diag = "nan";
  sing::Index row = 0;
  sing::Index grid = 0;
};

// Reshape one loading row into its plot-ready form: a symmetric network
// matrix (lower-triangle vector) or a grid x grid image.
int run_export(const ExportArgs& a) {
  const sing::Matrix m = sing::read_matrix(a.in);
  if (a.row < 0 || a.row >= m.rows())
    throw sing::invalid_input_error("--row out of range for " + a.in);
  const sing::Vector v = m.row(a.row).transpose();

  sing::Matrix shaped;
  if (a.kind == "net") {
    double diag = std::numeric_limits<double>::quiet_NaN();
    if (a.diag != "nan" && a.diag != "NA") diag = std::stod(a.diag);
    shaped = sing::vec_to_net(v, diag);
  } else if (a.kind == "grid") {
    sing::Index side = a.grid;
    if (side == 0)
      side = static_cast<sing::Index>(std::llround(std::sqrt(
          static_cast<double>(v.size()))));
    if (side * side != v.size())
      throw sing::invalid_input_error(
          "--grid does not match the loading length " +
          std::to_string(v.size()));
    shaped.resize(side, side);
    for (sing::Index j = 0; j < side; ++j)
      for (sing::Index i = 0; i < side; ++i) shaped(i, j) = v(j * side + i);
  } else {
    throw sing::invalid_input_error("--kind must be net or grid, got '" +
                                    a.kind + "'");
  }
  sing::write_matrix_csv(a.out, shaped);
  std::cout << "export: wrote " << shaped.rows() << "x" << shaped.cols()
            << " " << a.kind << " to " << a.out << "\n";
  return 0;
}

// ---- decompose -------------------------------------------------------------

struct DecomposeArgs {
  std::string x, y, out, format = "csv";
  std::optional<sing::Index> rank_x, rank_y;
  std::string init_ux, init_uy;
  sing::Index joint_rank = -1;
  std::string rho = "small";
  double alpha = 0.8, tol = 1e-10, alpha_level = 0.01;
  int restarts = 20, max_iter = 1500, n_perm = 1000;
  std::uint64_t seed = 0;
  bool individual = false, standardize = false, reestimate_ols = false;
  bool estimate_ranks = false;
};

int run_decompose(const DecomposeArgs& a) {
  OutputWriter w = make_writer(a.out, a.format);
  const sing::DataMatrix X = load_data(a.x);
  const sing::DataMatrix Y = load_data(a.y);
  if (X.n() != Y.n())
    throw sing::invalid_input_error(
        "subject count mismatch: X is " + std::to_string(X.n()) + "x" +
        std::to_string(X.p()) + " but Y is " + std::to_string(Y.n()) + "x" +
        std::to_string(Y.p()));

  sing::SingConfig cfg;
  cfg.standardize = a.standardize;
  cfg.individual = a.individual;
  cfg.rho_extent = parse_rho(a.rho);
  cfg.alpha = a.alpha;
  cfg.n_perm = a.n_perm;
  cfg.alpha_level = a.alpha_level;
  cfg.restarts = a.restarts;
  cfg.max_iter = a.max_iter;
  cfg.tol = a.tol;
  cfg.seed = a.seed;
  cfg.reestimate_mixing_ols = a.reestimate_ols;

  const bool staged = !a.init_ux.empty() || !a.init_uy.empty();
  sing::SingResult res;
  if (staged) {
    if (a.init_ux.empty() || a.init_uy.empty() || a.joint_rank < 0)
      throw sing::invalid_input_error(
          "staged mode needs --init-ux, --init-uy and --joint-rank together");
    const sing::Matrix Ux0 = sing::read_matrix(a.init_ux);
    const sing::Matrix Uy0 = sing::read_matrix(a.init_uy);
    res = sing::sing_decompose_from_init(X, Y, Ux0, Uy0, a.joint_rank, cfg);
  } else {
    cfg.rank_x = a.rank_x;
    cfg.rank_y = a.rank_y;
    if (a.estimate_ranks) {
      if (!cfg.rank_x)
        cfg.rank_x = sing::estimate_rank_jb_null(X, a.seed + 101).rank;
      if (!cfg.rank_y)
        cfg.rank_y = sing::estimate_rank_jb_null(Y, a.seed + 102).rank;
    }
    if (!cfg.rank_x || !cfg.rank_y)
      throw sing::invalid_input_error(
          "missing --rank-x/--rank-y: component ranks are required (estimate "
          "them externally, or pass --estimate-ranks for the built-in "
          "JB-null heuristic)");
    res = sing::sing_decompose(X, Y, cfg);
  }

  w.write("S_jx", res.S_jx);
  w.write("S_jy", res.S_jy);
  w.write("M_j", res.M_j);
  w.write("M_jx", res.M_jx);
  w.write("M_jy", res.M_jy);
  w.write("scale_x", res.scale_x);
  w.write("scale_y", res.scale_y);
  if (a.individual) {
    w.write("S_ix", res.S_ix);
    w.write("S_iy", res.S_iy);
    w.write("M_ix", res.M_ix);
    w.write("M_iy", res.M_iy);
  }
  json cfg_json{{"x", a.x},
                {"y", a.y},
                {"standardize", cfg.standardize},
                {"individual", cfg.individual},
                {"covariance_divisor", "p"},
                {"rho", rho_json(cfg.rho_extent)},
                {"alpha", cfg.alpha},
                {"n_perm", cfg.n_perm},
                {"alpha_level", cfg.alpha_level},
                {"restarts", cfg.restarts},
                {"max_iter", cfg.max_iter},
                {"tol", cfg.tol},
                {"seed", cfg.seed},
                {"reestimate_mixing_ols", cfg.reestimate_mixing_ols},
                {"format", a.format}};
  if (staged) {
    cfg_json["init_ux"] = a.init_ux;
    cfg_json["init_uy"] = a.init_uy;
    cfg_json["joint_rank"] = a.joint_rank;
  } else {
    cfg_json["rank_x"] = *cfg.rank_x;
    cfg_json["rank_y"] = *cfg.rank_y;
  }
  w.manifest(json{{"command", "decompose"},
                  {"config", cfg_json},
                  {"diagnostics", diagnostics_json(res.diagnostics)}});
  if (!res.diagnostics.warning.empty())
    std::cerr << "warning: " << res.diagnostics.warning << "\n";
  std::cout << "decompose: r_j = " << res.diagnostics.rank_test.r_j
            << ", rho = " << res.diagnostics.rho
            << ", joint distance = " << res.diagnostics.joint_distance << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sing: simultaneous non-Gaussian component analysis for one or two "
      "datasets"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Generate the seeded toy model (images for X, networks for Y)");
  c_sim->add_option("--n", sim.spec.n, "Subjects");
  c_sim->add_option("--grid", sim.spec.grid, "Image grid side for X");
  c_sim->add_option("--nodes", sim.spec.nodes, "Network nodes for Y");
  c_sim->add_option("--rj", sim.spec.r_j, "Joint components");
  c_sim->add_option("--rind", sim.spec.r_ind, "Individual components per dataset");
  c_sim->add_option("--noise-sd", sim.spec.noise_sd, "Gaussian part scale");
  c_sim->add_option("--seed", sim.spec.seed, "Random seed");
  c_sim->add_option("--format", sim.format, "csv or bin");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  LngcaArgs ln;
  CLI::App* c_ln = app.add_subcommand(
      "lngca", "Extract non-Gaussian components from one dataset");
  c_ln->add_option("--x", ln.x, "Data matrix file (subjects x features)")
      ->required();
  c_ln->add_option("--rank", ln.rank, "Number of components")->required();
  c_ln->add_option("--alpha", ln.alpha, "JB skewness weight");
  c_ln->add_option("--restarts", ln.restarts, "Random restarts");
  c_ln->add_option("--seed", ln.seed, "Random seed");
  c_ln->add_option("--max-iter", ln.max_iter, "Iteration cap");
  c_ln->add_option("--tol", ln.tol, "Relative objective tolerance");
  c_ln->add_flag("--standardize", ln.standardize,
                 "Iterative column standardization instead of double centering");
  c_ln->add_option("--format", ln.format, "csv or bin");
  c_ln->add_option("--out", ln.out, "Output directory")->required();

  MatchArgs ma;
  CLI::App* c_ma = app.add_subcommand(
      "match", "Greedily align components of two decompositions");
  c_ma->add_option("--mx", ma.mx, "Subject scores of X")->required();
  c_ma->add_option("--my", ma.my, "Subject scores of Y")->required();
  c_ma->add_option("--ux", ma.ux, "Unmixing matrix of X")->required();
  c_ma->add_option("--uy", ma.uy, "Unmixing matrix of Y")->required();
  c_ma->add_option("--format", ma.format, "csv or bin");
  c_ma->add_option("--out", ma.out, "Output directory")->required();

  PermtestArgs pt;
  CLI::App* c_pt = app.add_subcommand(
      "permtest", "Permutation test of the joint rank with FWER correction");
  c_pt->add_option("--mx", pt.mx, "Matched subject scores of X")->required();
  c_pt->add_option("--my", pt.my, "Matched subject scores of Y")->required();
  c_pt->add_option("--n-perm", pt.n_perm, "Permutation replicates (>= 100)");
  c_pt->add_option("--alpha-level", pt.alpha_level, "FWER level");
  c_pt->add_option("--seed", pt.seed, "Random seed");
  c_pt->add_option("--format", pt.format, "csv or bin");
  c_pt->add_option("--out", pt.out, "Output directory")->required();

  ExportArgs ex;
  CLI::App* c_ex = app.add_subcommand(
      "export", "Reshape a loading row into a plot-ready matrix");
  c_ex->add_option("--in", ex.in, "Loadings file (rows are components)")
      ->required();
  c_ex->add_option("--row", ex.row, "Component row index");
  c_ex->add_option("--kind", ex.kind, "net (symmetric matrix) or grid (image)");
  c_ex->add_option("--grid", ex.grid, "Image side (default: sqrt of length)");
  c_ex->add_option("--diag", ex.diag, "Diagonal value for net (default nan)");
  c_ex->add_option("--out", ex.out, "Output CSV file")->required();

  DecomposeArgs de;
  CLI::App* c_de = app.add_subcommand(
      "decompose", "Full joint decomposition of two datasets");
  c_de->add_option("--x", de.x, "Dataset X file")->required();
  c_de->add_option("--y", de.y, "Dataset Y file")->required();
  c_de->add_option("--rank-x", de.rank_x, "Non-Gaussian rank of X");
  c_de->add_option("--rank-y", de.rank_y, "Non-Gaussian rank of Y");
  c_de->add_option("--init-ux", de.init_ux,
                   "Staged mode: matched initial unmixing for X");
  c_de->add_option("--init-uy", de.init_uy,
                   "Staged mode: matched initial unmixing for Y");
  c_de->add_option("--joint-rank", de.joint_rank,
                   "Staged mode: joint rank from permtest");
  c_de->add_option("--rho", de.rho, "small, medium, large or a number");
  c_de->add_option("--alpha", de.alpha, "JB skewness weight");
  c_de->add_option("--seed", de.seed, "Random seed");
  c_de->add_option("--restarts", de.restarts, "LNGCA restarts");
  c_de->add_option("--max-iter", de.max_iter, "Iteration cap");
  c_de->add_option("--tol", de.tol, "Relative objective tolerance");
  c_de->add_option("--n-perm", de.n_perm, "Permutation replicates");
  c_de->add_option("--alpha-level", de.alpha_level, "FWER level");
  c_de->add_flag("--individual", de.individual, "Also write individual parts");
  c_de->add_flag("--standardize", de.standardize,
                 "Iterative column standardization before whitening");
  c_de->add_flag("--reestimate-m-ols", de.reestimate_ols,
                 "Refit subject scores by OLS after the joint solve");
  c_de->add_flag("--estimate-ranks", de.estimate_ranks,
                 "Use the JB-null heuristic for missing ranks");
  c_de->add_option("--format", de.format, "csv or bin");
  c_de->add_option("--out", de.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
    if (*c_sim) return run_simulate(sim);
    if (*c_ln) return run_lngca(ln);
    if (*c_ma) return run_match(ma);
    if (*c_pt) return run_permtest(pt);
    if (*c_ex) return run_export(ex);
    if (*c_de) return run_decompose(de);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  } catch (const sing::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
