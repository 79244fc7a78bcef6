#include "cli/commands.hpp"

#include "fracmono/reconstruct.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <random>

namespace fracmono::cli {

using nlohmann::json;

namespace {

std::string tag(double s) { return "s" + format_number(s); }

double mesh_height(const RunConfig& cfg) { return cfg.mesh.height.value_or(4.0 * cfg.half_width); }

YMesh make_mesh(const RunConfig& cfg, double s, Index intervals) {
  return build_ymesh(FracOrder(s), intervals, mesh_height(cfg), cfg.mesh.grading);
}

YMesh make_mesh(const RunConfig& cfg, double s) { return make_mesh(cfg, s, cfg.mesh.intervals); }

/// Window data selected by options.data: "ones" (default), "random" or "linear".
Vec<double> window_data(const RunConfig& cfg, const DomainPartition& p, std::uint64_t stream = 0) {
  const auto kind = cfg.option<std::string>("data", "ones");
  const auto n = static_cast<Index>(p.window.size());
  if (kind == "ones") return Vec<double>::Ones(n);
  if (kind == "linear") {
    Vec<double> v(n);
    for (Index i = 0; i < n; ++i) v(i) = p.grid.center(p.window[static_cast<std::size_t>(i)])[0];
    return v;
  }
  if (kind == "random") {
    std::mt19937_64 rng(cfg.seed * 1000003ULL + stream);
    std::normal_distribution<double> nd;
    Vec<double> v(n);
    for (Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
  }
  throw ValidationError("config: field 'options.data' must be ones, random or linear");
}

void cell_columns(Table& t, const GridSpec& g) {
  t.header = {"cell", "x"};
  if (g.dims() == 2) t.header.push_back("y");
}

void cell_row(std::vector<json>& row, const GridSpec& g, Index c) {
  const auto x = g.center(c);
  row.push_back(c);
  row.push_back(x[0]);
  if (g.dims() == 2) row.push_back(x[1]);
}

ResultBundle cmd_forward(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  for (double s : cfg.orders) {
    const auto model = ForwardModel<double>::build(p, sigma, FracOrder(s));
    const Vec<double> f = scatter_window(p, window_data(cfg, p));
    const Vec<double> u = solve_exterior(model.frac, p, f);
    const Vec<double> au = model.frac.values * u;
    Table t;
    cell_columns(t, p.grid);
    t.header.push_back("u");
    t.header.push_back("frac_u");
    for (Index c = 0; c < p.grid.cell_count(); ++c) {
      std::vector<json> row;
      cell_row(row, p.grid, c);
      row.push_back(u(c));
      row.push_back(au(c));
      t.add(std::move(row));
    }
    b.tables["forward_" + tag(s)] = std::move(t);
    b.metric("u_norm_" + tag(s), u.norm(), "solve_exterior");
    b.metric("interior_residual_" + tag(s), gather(au, p.omega).cwiseAbs().maxCoeff(), "solve_exterior");
    b.metric("lambda_min_" + tag(s), model.spectrum.eigenvalues()(0), "spectral_decompose");
  }
  return b;
}

ResultBundle cmd_dnmap(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  for (double s : cfg.orders) {
    const auto model = ForwardModel<double>::build(p, sigma, FracOrder(s));
    const auto cols = assemble_dn_columns(model.frac, p);
    const Mat<double>& l = model.dn.values;
    const double scale = l.cwiseAbs().maxCoeff();
    b.metric("symmetry_" + tag(s), (l - l.transpose()).cwiseAbs().maxCoeff() / scale, "assemble_dn");
    b.metric("schur_vs_columns_" + tag(s), (l - cols.values).cwiseAbs().maxCoeff() / scale, "assemble_dn");
    b.metric("max_abs_" + tag(s), scale, "assemble_dn");
    b.matrices["dn_" + tag(s)] = l;
    b.sidecar["dn_" + tag(s)] = {{"rows", l.rows()},        {"window", p.window},
                                 {"s", s},                  {"sigma_hash", model.dn.sigma_hash},
                                 {"grid_hash", model.dn.grid_hash}, {"cell_volume", p.grid.cell_volume()}};
  }
  return b;
}

ResultBundle cmd_extension_check(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  const int levels = cfg.option<int>("levels", 3);
  if (levels < 1) throw ValidationError("config: field 'options.levels' must be >= 1");
  for (double s : cfg.orders) {
    const auto model = ForwardModel<double>::build(p, sigma, FracOrder(s));
    const Vec<double> fw = window_data(cfg, p);
    const Vec<double> f = scatter_window(p, fw);
    const Vec<double> ref = gather(Vec<double>(model.frac.values * solve_exterior(model.frac, p, f)), p.window);
    Table t;
    t.header = {"intervals", "trace_error", "identity_gap", "residual"};
    std::vector<double> errors, gaps;
    for (int lv = levels - 1; lv >= 0; --lv) {
      const Index m = cfg.mesh.intervals >> lv;
      if (m < 16) throw ValidationError("config: mesh.intervals too small for the requested refinement levels");
      const auto mesh = make_mesh(cfg, s, m);
      const ExtensionSolver<double> ext(p, sigma, model.spectrum, model.op, mesh);
      const auto field = ext.solve(f);
      const Vec<double> tr = gather(Vec<double>(neumann_trace(field, mesh)), p.window) / d_s_constant(FracOrder(s));
      const double err = (tr - ref).norm() / ref.norm();
      const auto id = energy_identity_check(model, ext, fw);
      errors.push_back(err);
      gaps.push_back(id.gap);
      t.add({m, err, id.gap, ext.residual(field)});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < errors.size(); ++i) decreasing = decreasing && errors[i] < errors[i - 1];
    b.tables["refinement_" + tag(s)] = std::move(t);
    b.metric("trace_relative_error_" + tag(s), errors.back(), "neumann_trace");
    b.metric("trace_error_decreasing_" + tag(s), decreasing, "neumann_trace");
    b.metric("identity_gap_" + tag(s), gaps.back(), "energy_identity_check");
    b.metric("d_s_" + tag(s), d_s_constant(FracOrder(s)), "d_s_constant");
  }
  return b;
}

ResultBundle cmd_mono_test(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto s1 = build_sigma(cfg, p, cfg.sigma);
  const auto s2 = build_sigma(cfg, p, cfg.sigma2.value_or(cfg.sigma));
  const int samples = cfg.option<int>("samples", 5);
  const int pairs = cfg.option<int>("random_pairs", 0);
  const double rel = cfg.option<double>("relative_tolerance", 0.05);
  const double abs_tol = cfg.option<double>("absolute_tolerance", 1e-8);
  Table t;
  t.header = {"s", "pair", "sample", "form", "lower", "middle", "upper", "violation"};
  Table lt;
  lt.header = {"s", "pair", "classification", "min_eig", "max_eig"};
  double worst_gap = 0.0, worst_violation_rel = 0.0;
  bool all_hold = true, all_psd = true;
  std::mt19937_64 rng(cfg.seed);
  for (double s : cfg.orders) {
    const auto mesh = make_mesh(cfg, s);
    for (int k = 0; k <= pairs; ++k) {
      auto pair = k == 0 ? std::make_pair(s1, s2) : random_ordered_pair<double>(p, rng, cfg.lambda);
      const SandwichPair<double> sp(p, pair.first, pair.second, mesh);
      const auto v = loewner_test(sp.first().dn, sp.second().dn, 1e-8);
      lt.add({s, k, to_string(v.classification), v.min_eig, v.max_eig});
      if (k > 0) all_psd = all_psd && (v.classification == Ordering::psd || v.classification == Ordering::zero);
      for (int i = 0; i < samples; ++i) {
        std::mt19937_64 drng(cfg.seed * 7919ULL + static_cast<std::uint64_t>(i));
        std::normal_distribution<double> nd;
        Vec<double> fw(static_cast<Index>(p.window.size()));
        for (Index j = 0; j < fw.size(); ++j) fw(j) = nd(drng);
        for (auto form : {SandwichForm::first, SandwichForm::second}) {
          const auto r = sp.evaluate(fw, form);
          t.add({s, k, i, to_string(form), r.lower, r.middle, r.upper, r.worst_violation()});
          worst_gap = std::max({worst_gap, std::abs(r.lower), std::abs(r.middle), std::abs(r.upper)});
          all_hold = all_hold && r.holds(abs_tol, rel);
          if (r.middle != 0.0) worst_violation_rel = std::max(worst_violation_rel, r.worst_violation() / std::abs(r.middle));
        }
      }
    }
  }
  b.tables["sandwich"] = std::move(t);
  b.tables["loewner"] = std::move(lt);
  b.metric("max_gap", worst_gap, "verify_sandwich");
  b.metric("max_relative_violation", worst_violation_rel, "verify_sandwich");
  b.metric("sandwich_holds", all_hold, "verify_sandwich");
  if (pairs > 0) b.metric("random_pairs_psd", all_psd, "loewner_test");
  return b;
}

ResultBundle cmd_localize(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  if (!p.b_set || !p.d_set) throw ValidationError("config: localize needs 'geometry.b' and 'geometry.d'");
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  const int steps = cfg.option<int>("steps", 6);
  Table t;
  t.header = {"s", "step", "epsilon", "energy_b", "energy_d", "ratio"};
  for (double s : cfg.orders) {
    const auto mesh = make_mesh(cfg, s);
    const auto l = assemble_operator(p, sigma);
    const auto spec = spectral_decompose(l);
    const ExtensionSolver<double> ext(p, sigma, spec, l, mesh);
    const auto gb = energy_gram(ext, spec, sigma, *p.b_set, "B");
    const auto gd = energy_gram(ext, spec, sigma, *p.d_set, "D");
    const double eps0 = cfg.option<double>("eps0", gd.matrix.norm());
    const auto seq = localized_sequence(gb, gd, steps, eps0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const double ratio = seq.energy_d[i] > 0.0 ? seq.energy_b[i] / seq.energy_d[i] : 0.0;
      t.add({s, static_cast<int>(i + 1), seq.epsilon[i], seq.energy_b[i], seq.energy_d[i], ratio});
    }
    if (seq.size() > 0) {
      b.metric("final_ratio_" + tag(s), seq.energy_b.back() / seq.energy_d.back(), "localized_sequence");
      b.metric("energy_b_growth_" + tag(s), seq.energy_b.back() / seq.energy_b.front(), "localized_sequence");
    }
    b.metric("steps_completed_" + tag(s), seq.size(), "localized_sequence");
    b.metric("stopped_early_" + tag(s), seq.stopped_early, "localized_sequence");
  }
  b.tables["localize"] = std::move(t);
  return b;
}

ResultBundle cmd_runge(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  const auto ks = cfg.option<std::vector<int>>("k", {1, 2, 4, 8});
  Table bt;
  bt.header = {"k", "s", "b", "plateau_right", "integral", "bound0", "bound1", "bound2"};
  for (double s : cfg.orders) {
    for (int k : ks) {
      const auto beta = beta_profile(k, FracOrder(s));
      bt.add({k, s, beta.b, beta.plateau_right, beta.integral, beta.derivative_bound(0), beta.derivative_bound(1),
              beta.derivative_bound(2)});
    }
  }
  b.tables["beta"] = std::move(bt);
  if (p.b_set && p.d_set) {
    const auto target = harmonic_target(p, sigma);
    Table rt;
    rt.header = {"s", "m", "residual_x", "residual_full", "relative_x", "relative_full"};
    for (double s : cfg.orders) {
      const auto mesh = make_mesh(cfg, s);
      const auto beta = beta_profile(1, FracOrder(s));
      if (beta.plateau_right + 1.0 > mesh.height) {
        throw ValidationError("config: mesh.height must exceed the support of beta_1 (" +
                              format_number(beta.plateau_right + 1.0) + ")");
      }
      const auto l = assemble_operator(p, sigma);
      const auto spec = spectral_decompose(l);
      const ExtensionSolver<double> ext(p, sigma, spec, l, mesh);
      const auto m = cfg.option<Index>("basis", static_cast<Index>(p.window.size()));
      const auto curve = runge_curve(target, beta, ext, m);
      bool monotone = true;
      for (std::size_t i = 0; i < curve.residual_x.size(); ++i) {
        rt.add({s, static_cast<Index>(i), curve.residual_x[i], curve.residual_full[i],
                curve.residual_x[i] / curve.target_norm_x, curve.residual_full[i] / curve.target_norm_full});
        if (i > 0) monotone = monotone && curve.residual_x[i] <= curve.residual_x[i - 1] &&
                              curve.residual_full[i] <= curve.residual_full[i - 1];
      }
      b.metric("relative_residual_x_" + tag(s), curve.residual_x.back() / curve.target_norm_x, "runge_residual");
      b.metric("relative_residual_full_" + tag(s), curve.residual_full.back() / curve.target_norm_full,
               "runge_residual");
      b.metric("monotone_" + tag(s), monotone, "runge_residual");
      b.metric("region_touches_boundary", curve.region_touches_boundary, "runge_residual");
    }
    b.tables["runge"] = std::move(rt);
  }
  return b;
}

ResultBundle cmd_reconstruct(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  const auto truth = build_sigma(cfg, p, cfg.sigma);
  SigmaSpec bg;
  bg.background = cfg.sigma.background;
  const auto sigma0 = build_sigma(cfg, p, cfg.sigma0.value_or(bg));
  const auto betas = cfg.option<std::vector<double>>("beta", {0.5});
  const double noise = cfg.option<double>("noise", 0.0);
  const auto side = cfg.option<std::string>("side", "raise");
  if (side != "raise" && side != "lower") throw ValidationError("config: field 'options.side' must be raise or lower");
  const TestSide ts = side == "raise" ? TestSide::raise : TestSide::lower;
  const IndexSet region = p.o_set.value_or(p.omega);
  IndexSet support;
  for (Index c : p.omega)
    if (truth.values(c) != sigma0.values(c)) support.push_back(c);

  Table t;
  cell_columns(t, p.grid);
  t.header.insert(t.header.begin(), "beta");
  for (const char* h : {"decision", "classification", "min_eig", "max_eig"}) t.header.push_back(h);
  for (double s : cfg.orders) {
    const PixelTester<double> tester(p, sigma0, FracOrder(s));
    auto measured = tester.dn_map(truth);
    TestTolerance tol;
    if (noise > 0.0) {
      measured = inject_noise(std::move(measured), noise, cfg.seed);
      tol = TestTolerance{0.0, 2.0 * noise};
    }
    IndexSet previous;
    bool nested = true;
    for (std::size_t k = 0; k < betas.size(); ++k) {
      const auto res = reconstruct_inclusion(measured, tester, region, betas[k], tol, ts);
      const IndexSet inside = inside_set(res);
      if (k > 0 && betas[k] >= betas[k - 1]) nested = nested && std::includes(previous.begin(), previous.end(), inside.begin(), inside.end());
      previous = inside;
      for (const auto& [c, r] : res) {
        std::vector<json> row{betas[k]};
        cell_row(row, p.grid, c);
        row.push_back(to_string(r.decision));
        row.push_back(to_string(r.verdict.classification));
        row.push_back(r.verdict.min_eig);
        row.push_back(r.verdict.max_eig);
        t.add(std::move(row));
      }
      const std::string key = tag(s) + "_beta" + format_number(betas[k]);
      b.metric("inside_count_" + key, inside.size(), "reconstruct_inclusion");
      b.metric("hausdorff_" + key, hausdorff_cells(p.grid, inside, support), "reconstruct_inclusion");
    }
    b.metric("nested_" + tag(s), nested, "reconstruct_inclusion");
  }
  b.metric("true_support_size", support.size(), "reconstruct_inclusion");
  b.tables["pixels"] = std::move(t);
  return b;
}

ResultBundle cmd_uniqueness(const RunConfig& cfg) {
  ResultBundle b;
  const auto p = build_partition(cfg);
  if (!cfg.sigma2) throw ValidationError("config: uniqueness needs field 'sigma2'");
  if (!p.o_set) throw ValidationError("config: uniqueness needs field 'geometry.o'");
  const auto s1 = build_sigma(cfg, p, cfg.sigma);
  const auto s2 = build_sigma(cfg, p, *cfg.sigma2);
  const double delta_min = cfg.option<double>("delta_min", 0.1);
  const double noise_floor = cfg.option<double>("noise_floor", 1e-10);
  for (double s : cfg.orders) {
    UniquenessOptions opt;
    if (cfg.option<bool>("localize", true)) opt.mesh = make_mesh(cfg, s);
    opt.steps = cfg.option<int>("steps", 6);
    const auto r = uniqueness_probe(s1, s2, p, *p.o_set, delta_min, noise_floor, FracOrder(s), opt);
    b.metric("direction_" + tag(s), r.direction, "uniqueness_probe");
    b.metric("dn_gap_" + tag(s), r.dn_gap, "uniqueness_probe");
    b.metric("coefficient_gap_" + tag(s), r.coefficient_gap, "uniqueness_probe");
    b.metric("conclusion_" + tag(s), to_string(r.conclusion), "uniqueness_probe");
    b.metric("detectable_" + tag(s), r.detectable, "uniqueness_probe");
    if (r.localized) {
      b.metric("localized_lower_bound_" + tag(s), r.localized_lower_bound, "uniqueness_probe");
      b.metric("localized_pairing_" + tag(s), r.localized_pairing, "uniqueness_probe");
    }
  }
  return b;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"forward",  "dnmap", "extension-check", "mono-test",
                                              "localize", "runge", "reconstruct",     "uniqueness"};
  return names;
}

ResultBundle run(const std::string& command, const RunConfig& cfg) {
  ResultBundle b;
  if (command == "forward") b = cmd_forward(cfg);
  else if (command == "dnmap") b = cmd_dnmap(cfg);
  else if (command == "extension-check") b = cmd_extension_check(cfg);
  else if (command == "mono-test") b = cmd_mono_test(cfg);
  else if (command == "localize") b = cmd_localize(cfg);
  else if (command == "runge") b = cmd_runge(cfg);
  else if (command == "reconstruct") b = cmd_reconstruct(cfg);
  else if (command == "uniqueness") b = cmd_uniqueness(cfg);
  else throw ValidationError("unknown command '" + command + "'");
  b.command = command;
  return b;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"fracmono: fractional conductivity operators, DN maps and monotonicity tests"};
  std::string command, config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string usage_cmds;
  for (const auto& n : command_names()) usage_cmds += (usage_cmds.empty() ? "" : ", ") + n;
  app.add_option("command", command, "one of: " + usage_cmds)->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads (overrides FRACMONO_THREADS)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    std::cerr << "unknown command '" << command << "'\n" << app.help();
    return 1;
  }
  unsigned nthreads = 1;
  if (const char* env = std::getenv("FRACMONO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) nthreads = static_cast<unsigned>(v);
  }
  if (threads) nthreads = *threads;
  set_thread_count(nthreads);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    const ResultBundle bundle = run(command, cfg);
    Fnv1a h;
    h.text(cfg.raw);
    const json prov{{"command", command},
                    {"scenario", cfg.scenario},
                    {"config_hash", h.digest()},
                    {"seed", cfg.seed},
                    {"versions", {{"fracmono", "0.1.0"},
                                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                std::to_string(EIGEN_MINOR_VERSION)}}}};
    const auto digest = write_bundle(out_dir, bundle, prov);
    std::cout << command << ": " << bundle.metrics.size() << " metrics written to " << out_dir << " (result hash "
              << digest << ")\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: config: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fracmono::cli
