// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "fracmono/parallel.hpp"
#include "fracmono/reconstruct.hpp"
#include "fracmono/runge.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

using namespace fracmono;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

IndexSet range(Index lo, Index hi) {
  IndexSet out;
  for (Index i = lo; i <= hi; ++i) out.push_back(i);
  return out;
}

// 1D reference: 32 cells on [-2, 2], omega = cells 8..23, window = cells 25..30.
DomainPartition reference_1d() { return make_partition(GridSpec(1, 32, 2.0), range(8, 23), range(25, 30)); }

// Same physical layout at h = 1/16 with the test sets used for localization.
DomainPartition fine_1d(IndexSet b, IndexSet d) {
  return make_partition(GridSpec(1, 64, 2.0), range(16, 47), range(50, 55), std::move(b), std::move(d));
}

Vec<double> window_profile(const DomainPartition& p) {
  Vec<double> fw(static_cast<Index>(p.window.size()));
  const double a = p.grid.center(p.window.front())[0];
  const double b = p.grid.center(p.window.back())[0];
  for (Index k = 0; k < fw.size(); ++k) {
    const double x = p.grid.center(p.window[static_cast<std::size_t>(k)])[0];
    fw(k) = std::sin(M_PI * (x - a + p.grid.spacing()) / (b - a + 2.0 * p.grid.spacing()));
  }
  return fw;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto p = make_partition(GridSpec(1, 64, 2.0), range(16, 47), range(50, 55));
  const auto sigma = make_conductivity<double>(p, 1.0, {}, 0.4);
  std::mt19937_64 rng(101);
  std::normal_distribution<double> nd;
  Vec<double> v(64);
  for (auto& x : v) x = nd(rng);
  double worst_a = 0.0, worst_b = 0.0;
  bool decreasing = true;
  for (double s : {0.25, 0.5, 0.75}) {
    const auto model = ForwardModel<double>::build(p, sigma, FracOrder(s));
    const Vec<double> exact = fractional_apply(model.spectrum, FracOrder(s), v);
    const Vec<double> quad = fractional_apply_quadrature(model.spectrum, FracOrder(s), v,
                                                         default_quadrature(model.spectrum, p.grid.spacing()));
    worst_a = std::max(worst_a, (quad - exact).norm() / exact.norm());

    const Vec<double> f = scatter_window(p, window_profile(p));
    const Vec<double> u = solve_exterior(model.frac, p, f);
    const Vec<double> want = gather(Vec<double>(model.frac.values * u), p.window);
    double prev = 1e300, err = 0.0;
    for (Index m : {64, 128, 256}) {
      const auto mesh = build_ymesh(FracOrder(s), m, 8.0);
      const ExtensionSolver<double> ext(p, sigma, model.spectrum, model.op, mesh);
      const Vec<double> got =
          gather(neumann_trace(ext.solve(f), mesh), p.window) / d_s_constant(FracOrder(s));
      err = (got - want).norm() / want.norm();
      decreasing = decreasing && err < prev;
      prev = err;
    }
    worst_b = std::max(worst_b, err);
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = worst_a <= 1e-6 && worst_b <= 0.05 && decreasing && t <= 120.0;
  o.detail = "quadrature rel err " + fmt(worst_a) + " (<= 1e-6), trace rel err at M=256 " + fmt(worst_b) +
             " (<= 0.05), strictly decreasing " + (decreasing ? "yes" : "no") + ", " + fmt(t) + " s (<= 120)";
  return o;
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const GridSpec g(1, 64, 2.0);
  const double h = g.spacing(), r_max = g.half_width() / 2.0;
  const auto p = make_partition(g, range(16, 47), range(50, 55));
  const auto op = spectral_decompose(assemble_operator(p, make_conductivity<double>(p, 1.0, {}, 0.4)));
  const auto k = kernel_assemble(op, FracOrder(0.5), default_quadrature(op, h), h, g.cell_volume());
  // Pairs placed symmetrically about the box centre.
  double worst = 0.0, worst_r = 0.0;
  for (Index m = 4; static_cast<double>(m) * h <= r_max + 1e-12; m += 2) {
    const double r = static_cast<double>(m) * h;
    const Index i = 32 - m / 2, j = 32 + m / 2;
    const double rel = std::abs(std::abs(k.entries(i, j)) / (1.0 / (M_PI * r * r)) - 1.0);
    if (rel > worst) worst = rel, worst_r = r;
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 0.02 && t <= 60.0;
  o.detail = "max |K r^2 pi - 1| over r in [4h, R/2] = " + fmt(worst) + " at r = " + fmt(worst_r) + " (<= 0.02), " +
             fmt(t) + " s (<= 60)";
  return o;
}

Outcome criterion3() {
  const auto p = reference_1d();
  const auto wide = make_partition(GridSpec(1, 64, 4.0), range(24, 39), range(41, 46));
  double sym = 0.0, agree = 0.0, doubling = 0.0, entrywise = 0.0;
  for (double s : {0.25, 0.5, 0.75}) {
    const auto sigma = make_conductivity<double>(p, 1.0, {Inclusion{{15, 16}, 1.5}}, 0.4);
    const auto m = ForwardModel<double>::build(p, sigma, FracOrder(s));
    const auto cols = assemble_dn_columns(m.frac, p);
    const double scale = m.dn.max_abs();
    sym = std::max(sym, (m.dn.values - m.dn.values.transpose()).cwiseAbs().maxCoeff() / scale);
    agree = std::max(agree, (m.dn.values - cols.values).cwiseAbs().maxCoeff() / scale);

    const auto sw = make_conductivity<double>(wide, 1.0, {Inclusion{{31, 32}, 1.5}}, 0.4);
    const auto mw = ForwardModel<double>::build(wide, sw, FracOrder(s));
    const Mat<double> diff = mw.dn.values - m.dn.values;
    doubling = std::max(doubling, diff.cwiseAbs().maxCoeff() / mw.dn.max_abs());
    entrywise = std::max(entrywise, diff.cwiseQuotient(mw.dn.values).cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = sym <= 1e-10 && agree <= 1e-10 && doubling <= 0.02;
  o.detail = "symmetry " + fmt(sym) + " (<= 1e-10), schur vs columns " + fmt(agree) +
             " (<= 1e-10), R-doubling change max|dL|/max|L| " + fmt(doubling) + " (<= 0.02; per-entry relative " +
             fmt(entrywise) + ")";
  return o;
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  const auto p = reference_1d();
  int psd = 0, runs = 0, held = 0, checks = 0;
  double worst_rel = 0.0;
  for (double s : {0.25, 0.5, 0.75}) {
    std::mt19937_64 rng(400 + static_cast<std::uint64_t>(100 * s));
    const auto mesh = build_ymesh(FracOrder(s), 256, 8.0);
    for (int k = 0; k < 20; ++k) {
      const auto [s1, s2] = random_ordered_pair<double>(p, rng);
      const SandwichPair<double> pair(p, s1, s2, mesh);
      const double norm = symmetric_norm(Mat<double>(pair.first().dn.values - pair.second().dn.values));
      const auto v = loewner_test(pair.first().dn, pair.second().dn, 1e-8);
      ++runs;
      if (v.classification == Ordering::psd && v.min_eig >= -1e-8 * norm) ++psd;
      std::normal_distribution<double> nd;
      for (int i = 0; i < 3; ++i) {
        Vec<double> fw(static_cast<Index>(p.window.size()));
        for (auto& x : fw) x = nd(rng);
        for (auto form : {SandwichForm::first, SandwichForm::second}) {
          const auto r = pair.evaluate(fw, form);
          ++checks;
          if (r.holds(1e-8, 0.05)) ++held;
          if (r.middle != 0.0) worst_rel = std::max(worst_rel, r.worst_violation() / std::abs(r.middle));
        }
      }
    }
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = psd == runs && runs == 60 && held == checks && t <= 600.0;
  o.detail = "PSD " + std::to_string(psd) + "/" + std::to_string(runs) + ", sandwich " + std::to_string(held) + "/" +
             std::to_string(checks) + " within 1e-8 + 5%|middle| (worst relative violation " + fmt(worst_rel) + "), " +
             fmt(t) + " s (<= 600)";
  return o;
}

Outcome criterion5() {
  // Reference resolution: 32 cells, M = 256. Refinement halves h and doubles M together.
  struct Level {
    Index cells;
    Index intervals;
  };
  const Level ref{32, 256};
  const Level levels[] = {{16, 64}, {32, 128}, {64, 256}};
  auto gap_at = [](const Level& l, double s) {
    const Shape omega{Box{{-1.0, 0.0}, {1.0, 0.0}}};
    const Shape window{Box{{1.3, 0.0}, {1.85, 0.0}}};
    const auto p = build_partition(GridSpec(1, l.cells, 2.0), Geometry{omega, window, {}, {}, {}});
    const auto sigma =
        make_conductivity<double>(p, 1.0, {Inclusion{rasterize(p.grid, {Box{{-0.15, 0.0}, {0.15, 0.0}}}), 1.5}}, 0.4);
    return energy_identity_check(p, sigma, build_ymesh(FracOrder(s), l.intervals, 8.0), window_profile(p)).gap;
  };
  double worst_ref = 0.0;
  bool monotone = true;
  std::string seq;
  for (double s : {0.25, 0.5, 0.75}) {
    worst_ref = std::max(worst_ref, gap_at(ref, s));
    double prev = 1e300;
    seq += " s=" + fmt(s) + ":";
    for (const auto& l : levels) {
      const double g = gap_at(l, s);
      seq += " " + fmt(g);
      monotone = monotone && g < prev;
      prev = g;
    }
  }
  Outcome o;
  o.pass = worst_ref <= 0.1 && monotone;
  o.detail = "gap at reference " + fmt(worst_ref) + " (<= 0.1), refinement" + seq + ", decreasing " +
             (monotone ? "yes" : "no");
  return o;
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst_norm = 0.0, worst_d2 = 0.0;
  for (int k : {1, 2, 4, 8}) {
    for (double s : {0.25, 0.5, 0.75}) {
      const auto b = beta_profile(k, FracOrder(s));
      const double kk = static_cast<double>(k);
      worst_norm = std::max(worst_norm, std::abs(b.integral - 1.0));
      // Support [k, k + 1/(1-b) + 1], plateau value b on [k+1, k + 1/(1-b)].
      ok = ok && b.value(kk) == 0.0 && b.value(b.plateau_right + 1.0) == 0.0;
      ok = ok && b.value(kk - 1e-9) == 0.0 && b.value(b.plateau_right + 1.0 + 1e-9) == 0.0;
      ok = ok && b.value(kk + 0.02) > 0.0 && b.value(b.plateau_right + 0.98) > 0.0;
      ok = ok && b.value(kk + 1.0) == b.b && b.value(b.plateau_right) == b.b;
      ok = ok && std::abs(b.top() - 1.0 / (1.0 - b.b)) <= 1e-12;
      const double d2 = b.derivative_bound(2);
      ok = ok && std::isfinite(d2) && std::isfinite(b.derivative_bound(1));
      worst_d2 = std::max(worst_d2, d2);
    }
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = ok && worst_norm <= 1e-8 && t <= 30.0;
  o.detail = "max |I - 1| " + fmt(worst_norm) + " (<= 1e-8), support/plateau exact " + (ok ? "yes" : "no") +
             ", max |beta''| " + fmt(worst_d2) + ", " + fmt(t) + " s (<= 30)";
  return o;
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const auto p = fine_1d(IndexSet{40, 41}, IndexSet{24, 25});
  const auto sigma = make_conductivity<double>(p, 1.0, {}, 0.4);
  const auto l = assemble_operator(p, sigma);
  const auto op = spectral_decompose(l);
  const ExtensionSolver<double> ext(p, sigma, op, l, build_ymesh(FracOrder(0.5), 256, 8.0));
  const auto gb = energy_gram(ext, op, sigma, *p.b_set, "B");
  const auto gd = energy_gram(ext, op, sigma, *p.d_set, "D");
  const auto seq = localized_sequence(gb, gd, 6, gd.matrix.norm());
  const double t = seconds_since(t0);
  Outcome o;
  if (seq.size() != 6) {
    o.detail = "sequence stopped after " + std::to_string(seq.size()) + " steps";
    return o;
  }
  double worst_d = 0.0;
  for (double e : seq.energy_d) worst_d = std::max(worst_d, std::abs(e - 1.0));
  const double growth = seq.energy_b.back() / seq.energy_b.front();
  const double ratio = seq.energy_b.back() / seq.energy_d.back();
  o.pass = worst_d <= 1e-8 && growth >= 10.0 && ratio >= 1e3 && t <= 300.0;
  o.detail = "E_B " + fmt(seq.energy_b.front()) + " -> " + fmt(seq.energy_b.back()) + " (growth " + fmt(growth) +
             " >= 10), final E_B/E_D " + fmt(ratio) + " (>= 1e3), |E_D - 1| " + fmt(worst_d) + ", " + fmt(t) +
             " s (<= 300)";
  return o;
}

Outcome criterion8() {
  const auto p = fine_1d(range(36, 40), range(22, 24));
  const auto sigma = make_conductivity<double>(p, 1.0, {}, 0.4);
  const auto l = assemble_operator(p, sigma);
  const auto op = spectral_decompose(l);
  const ExtensionSolver<double> ext(p, sigma, op, l, build_ymesh(FracOrder(0.5), 256, 8.0));
  const auto curve = runge_curve(harmonic_target(p, sigma), beta_profile(1, FracOrder(0.5)), ext,
                                 static_cast<Index>(p.window.size()));
  bool monotone = true;
  for (std::size_t i = 1; i < curve.residual_x.size(); ++i) monotone = monotone && curve.residual_x[i] <= curve.residual_x[i - 1];
  const double rel = curve.residual_x.back() / curve.target_norm_x;
  const double rel_full = curve.residual_full.back() / curve.target_norm_full;
  Outcome o;
  o.pass = monotone && rel <= 0.1;
  o.detail = "nonincreasing " + std::string(monotone ? "yes" : "no") + ", relative residual at |W| = " +
             std::to_string(p.window.size()) + " basis " + fmt(rel) + " (<= 0.1; with y-derivative term " +
             fmt(rel_full) + ")";
  return o;
}

Outcome criterion9() {
  const auto t0 = Clock::now();
  // 22 x 22 grid on [-1.375, 1.375]^2, omega = 16 x 16 block, window = ring one cell off the box wall.
  const GridSpec g(2, 22, 1.375);
  IndexSet om, w;
  for (Index y = 0; y < 22; ++y)
    for (Index x = 0; x < 22; ++x) {
      const bool in = x >= 3 && x <= 18 && y >= 3 && y <= 18;
      const bool ring = x >= 1 && x <= 20 && y >= 1 && y <= 20 && (x == 1 || x == 20 || y == 1 || y == 20);
      if (in) om.push_back(g.cell(x, y));
      else if (ring) w.push_back(g.cell(x, y));
    }
  const auto p = make_partition(g, om, w);
  IndexSet truth;
  for (Index y = 8; y <= 10; ++y)
    for (Index x = 7; x <= 9; ++x) truth.push_back(g.cell(x, y));
  std::sort(truth.begin(), truth.end());
  const auto s0 = make_conductivity<double>(p, 1.0, {}, 0.4);
  const auto st = make_conductivity<double>(p, 1.0, {Inclusion{truth, 2.0}}, 0.4);
  const PixelTester<double> tester(p, s0, FracOrder(0.5));
  const auto measured = tester.dn_map(st);
  std::vector<IndexSet> sets;
  std::string sizes;
  for (double beta : {0.5, 1.0, 1.5}) {
    sets.push_back(inside_set(reconstruct_inclusion(measured, tester, p.omega, beta)));
    sizes += (sizes.empty() ? "" : "/") + std::to_string(sets.back().size());
  }
  bool nested = true;
  for (std::size_t i = 1; i < sets.size(); ++i)
    nested = nested && std::includes(sets[i - 1].begin(), sets[i - 1].end(), sets[i].begin(), sets[i].end());
  const double hd = hausdorff_cells(g, sets.front(), truth);
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = hd <= 1.0 && nested && t <= 600.0;
  o.detail = "Hausdorff at beta=0.5 " + fmt(hd) + " cells (<= 1), inside-set sizes beta 0.5/1/1.5 = " + sizes +
             ", nested " + (nested ? "yes" : "no") + ", " + fmt(t) + " s (<= 600)";
  return o;
}

Outcome criterion10() {
  const auto p = reference_1d();
  const IndexSet o_set = range(12, 19);
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(12, 19);
  int detected = 0, silent = 0;
  double min_gap = 1e300, max_same = 0.0;
  for (int k = 0; k < 10; ++k) {
    Vec<double> base = Vec<double>::Ones(32) + random_bump_field<double>(p, rng, 0.5);
    base = base.cwiseMin(1.5);
    Vec<double> raised = base;
    const double delta = 0.1 + 0.4 * unit(rng);
    const Index a = pick(rng);
    const Index b = std::min<Index>(19, a + static_cast<Index>(3 * unit(rng)));
    for (Index c = a; c <= b; ++c) raised(c) += delta;
    const auto s1 = conductivity_from_values(p, raised, 0.4);
    const auto s2 = conductivity_from_values(p, base, 0.4);
    const auto r = uniqueness_probe(s1, s2, p, o_set, 0.1, 1e-10, FracOrder(0.5));
    min_gap = std::min(min_gap, r.dn_gap);
    if (r.dn_gap > 1e-10 && r.coefficient_gap >= 0.1) ++detected;
    const auto same = uniqueness_probe(s2, s2, p, o_set, 0.1, 1e-10, FracOrder(0.5));
    max_same = std::max(max_same, same.dn_gap);
    if (same.dn_gap <= 1e-12) ++silent;
  }
  Outcome o;
  o.pass = detected == 10 && silent == 10;
  o.detail = "differing pairs detected " + std::to_string(detected) + "/10 (min dn_gap " + fmt(min_gap) +
             " > 1e-10), identical pairs silent " + std::to_string(silent) + "/10 (max dn_gap " + fmt(max_same) +
             " <= 1e-12)";
  return o;
}

}  // namespace

int main() {
  set_thread_count(std::max(1u, std::thread::hardware_concurrency()));
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
