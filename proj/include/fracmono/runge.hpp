#ifndef FRACMONO_RUNGE_HPP
#define FRACMONO_RUNGE_HPP

#include "fracmono/extension.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <functional>

namespace fracmono {

/// Smooth step S(t) = psi(t) / (psi(t) + psi(1-t)), psi(t) = exp(-1/t); 0 for
/// t <= 0 and 1 for t >= 1, C-infinity everywhere.
struct SmoothStep {
  static double value(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
  }
  static double d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = value(t);
    return s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
  }
  static double d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = value(t);
    const double q = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    const double dq = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    const double ds = s * (1.0 - s) * q;
    return (1.0 - 2.0 * s) * ds * q + s * (1.0 - s) * dq;
  }
};

/// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 30) {
  struct Rec {
    const std::function<double(double)>& f;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec{f}.run(a, b, fa, fm, fb, whole, tol, depth);
}

/// Cutoff in y: gamma_b rises smoothly from 0 to b on (0, 1), stays at b on
/// [1, 1/(1-b)], falls back to 0 over one unit; beta_k(y) = gamma_b(y - k) with
/// b chosen so that int y^{1-2s} beta_k = 1.
struct BetaProfile {
  int k = 1;
  double s = 0.5;
  double b = 0.5;
  double plateau_right = 3.0;  // k + 1/(1-b)
  double integral = 1.0;

  double top() const { return plateau_right - static_cast<double>(k); }  // 1/(1-b)

  double value(double y) const { return eval(y, 0); }
  double d1(double y) const { return eval(y, 1); }
  double d2(double y) const { return eval(y, 2); }

  /// Sampled max |d^l beta / dy^l| over the support.
  double derivative_bound(int order, int samples = 20000) const {
    double best = 0.0;
    const double lo = static_cast<double>(k);
    const double hi = plateau_right + 1.0;
    for (int i = 0; i <= samples; ++i) {
      const double y = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples);
      best = std::max(best, std::abs(eval(y, order)));
    }
    return best;
  }

 private:
  double eval(double y, int order) const {
    const double t = y - static_cast<double>(k);
    const double p = top();
    auto step = [order](double u) {
      return order == 0 ? SmoothStep::value(u) : order == 1 ? SmoothStep::d1(u) : SmoothStep::d2(u);
    };
    if (t <= 0.0 || t >= p + 1.0) return 0.0;
    if (t < 1.0) return b * step(t);
    if (t <= p) return order == 0 ? b : 0.0;
    // Falling edge S(p + 1 - t): odd derivatives flip sign.
    return b * step(p + 1.0 - t) * (order == 1 ? -1.0 : 1.0);
  }
};

/// I_{b,k} = int_0^inf y^{1-2s} gamma_b(y - k) dy.
inline double beta_integral(double b, int k, double s) {
  const double kk = static_cast<double>(k);
  const double e = 1.0 - 2.0 * s;
  const double p = 1.0 / (1.0 - b);
  const double rise =
      adaptive_simpson([&](double t) { return SmoothStep::value(t) * std::pow(t + kk, e); }, 0.0, 1.0, 1e-13);
  const double fall =
      adaptive_simpson([&](double u) { return SmoothStep::value(1.0 - u) * std::pow(u + p + kk, e); }, 0.0, 1.0, 1e-13);
  const double plateau = (std::pow(p + kk, 2.0 - 2.0 * s) - std::pow(1.0 + kk, 2.0 - 2.0 * s)) / (2.0 - 2.0 * s);
  return b * (rise + plateau + fall);
}

inline BetaProfile beta_profile(int k, FracOrder s) {
  if (k < 1) throw ValidationError("beta_profile needs k >= 1");
  const double sv = s.value();
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  const double i_lo = beta_integral(lo, k, sv);
  const double i_hi = beta_integral(hi, k, sv);
  if (!(i_lo < 1.0 && i_hi > 1.0)) {
    throw NumericalError("beta bisection bracket failure: I(0+)=" + std::to_string(i_lo) +
                         ", I(1-)=" + std::to_string(i_hi));
  }
  BetaProfile out;
  out.k = k;
  out.s = sv;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = beta_integral(mid, k, sv);
    out.b = mid;
    out.integral = v;
    if (std::abs(v - 1.0) <= 1e-10) break;
    (v < 1.0 ? lo : hi) = mid;
  }
  if (std::abs(out.integral - 1.0) > 1e-10) throw NumericalError("beta bisection did not converge");
  out.plateau_right = static_cast<double>(k) + 1.0 / (1.0 - out.b);
  return out;
}

/// Piecewise target: 1 on D, sigma-harmonic on B with boundary values equal to
/// the sum of the cell-centre coordinates.
template <typename Scalar>
struct HarmonicTarget {
  Vec<Scalar> values;  // full length, zero off B and D
  IndexSet support;    // B union D
  IndexSet b_interior;
  double residual = 0.0;
};

namespace detail {

inline IndexSet axis_neighbours(const GridSpec& g, Index c) {
  IndexSet out;
  const auto ij = g.coords(c);
  for (int ax = 0; ax < g.dims(); ++ax) {
    const auto k = ij[static_cast<std::size_t>(ax)];
    if (k > 0) out.push_back(c - g.stride(ax));
    if (k + 1 < g.cells_per_axis()) out.push_back(c + g.stride(ax));
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
HarmonicTarget<Scalar> harmonic_target(const DomainPartition& p, const Conductivity<Scalar>& sigma) {
  if (!p.b_set || !p.d_set) throw ValidationError("harmonic target needs b_set and d_set");
  const IndexSet& b = *p.b_set;
  const IndexSet& d = *p.d_set;
  for (Index x : b)
    for (Index y : d)
      if (cell_distance(p.grid, x, y) < 2) throw ValidationError("b_set and d_set must be separated by a cell");
  const GridSpec& g = p.grid;
  IndexSet interior, boundary;
  for (Index c : b) {
    bool inner = true;
    for (Index nb : detail::axis_neighbours(g, c)) inner = inner && contains(b, nb);
    // Cells on the box wall have a ghost neighbour outside B.
    inner = inner && g.box_faces(c) == 0;
    (inner ? interior : boundary).push_back(c);
  }
  if (interior.empty()) throw ValidationError("b_set has no interior cells; harmonic target is degenerate");

  HarmonicTarget<Scalar> t;
  t.values = Vec<Scalar>::Zero(g.cell_count());
  for (Index c : d) t.values(c) = Scalar(1);
  for (Index c : boundary) {
    const auto x = g.center(c);
    t.values(c) = Scalar(x[0] + x[1]);
  }
  const auto n = static_cast<Index>(interior.size());
  Mat<Scalar> a = Mat<Scalar>::Zero(n, n);
  Vec<Scalar> rhs = Vec<Scalar>::Zero(n);
  auto slot = [&](Index c) {
    return static_cast<Index>(std::lower_bound(interior.begin(), interior.end(), c) - interior.begin());
  };
  for (Index r = 0; r < n; ++r) {
    const Index c = interior[static_cast<std::size_t>(r)];
    for (Index nb : detail::axis_neighbours(g, c)) {
      const Scalar w = face_conductivity(sigma.values(c), sigma.values(nb), FaceRule::arithmetic);
      a(r, r) += w;
      if (contains(interior, nb)) {
        a(r, slot(nb)) -= w;
      } else {
        rhs(r) += w * t.values(nb);
      }
    }
  }
  const Vec<Scalar> sol = a.partialPivLu().solve(rhs);
  for (Index r = 0; r < n; ++r) t.values(interior[static_cast<std::size_t>(r)]) = sol(r);

  Scalar worst(0), scale(0);
  for (Index c : interior) {
    Scalar acc(0);
    for (Index nb : detail::axis_neighbours(g, c)) {
      const Scalar w = face_conductivity(sigma.values(c), sigma.values(nb), FaceRule::arithmetic);
      acc += w * (t.values(c) - t.values(nb));
      scale = std::max(scale, std::abs(w * t.values(nb)));
    }
    worst = std::max(worst, std::abs(acc));
  }
  t.residual = scale > Scalar(0) ? static_cast<double>(worst / scale) : 0.0;
  if (t.residual > 1e-10) throw NumericalError("harmonic target residual " + std::to_string(t.residual));

  Scalar grad(0);
  for (Index c : b)
    for (Index nb : detail::axis_neighbours(g, c))
      if (contains(b, nb)) grad = std::max(grad, std::abs(t.values(c) - t.values(nb)));
  if (!(grad > Scalar(0))) throw ValidationError("harmonic target has zero gradient on b_set");

  t.support = set_union(b, d);
  t.b_interior = std::move(interior);
  return t;
}

/// Quadratic form f -> int_{region x (0,Y)} y^{1-2s} |grad_x u^f|^2 on window
/// data; energy = f^T G f * cell volume.
template <typename Scalar>
struct EnergyGram {
  Mat<Scalar> matrix;
  std::string region;
  std::uint64_t sigma_hash = 0;
  double s = 0.5;
  double cell_volume = 1.0;
  IndexSet window;

  template <typename Derived>
  double energy(const Eigen::MatrixBase<Derived>& f) const {
    return static_cast<double>(f.dot(matrix * f)) * cell_volume;
  }
};

template <typename Scalar>
EnergyGram<Scalar> energy_gram(const ExtensionSolver<Scalar>& ext, const SpectralOperator<Scalar>& op,
                               const Conductivity<Scalar>& sigma, const IndexSet& region,
                               std::string region_name = "region") {
  const DomainPartition& p = ext.partition();
  for (Index c : region)
    if (!p.in_omega(c)) throw ValidationError("gram region must lie inside the domain");
  const Index n = p.grid.cell_count();
  const auto w = static_cast<Index>(p.window.size());
  Mat<Scalar> data = Mat<Scalar>::Zero(n, w);
  for (Index j = 0; j < w; ++j) data(p.window[static_cast<std::size_t>(j)], j) = Scalar(1);
  const Mat<Scalar> coeff = op.eigenvectors().transpose() * ext.traces(data);

  const GradientOperator<Scalar> grad(p.grid);
  Vec<Scalar> face_weight = Vec<Scalar>::Zero(grad.diff.rows());
  Vec<Scalar> mask = Vec<Scalar>::Zero(n);
  for (Index c : region) mask(c) = Scalar(1);
  face_weight = grad.spread.transpose() * mask;
  const Mat<Scalar> dv = grad.diff * op.eigenvectors();
  const Mat<Scalar> profiles = ext.profiles();
  const YMesh& mesh = ext.mesh();

  Mat<Scalar> g = Mat<Scalar>::Zero(w, w);
  for (Index j = 0; j <= mesh.intervals(); ++j) {
    const Scalar m = Scalar(mesh.mass[static_cast<std::size_t>(j)]);
    if (m == Scalar(0)) continue;
    const Mat<Scalar> x = dv * (profiles.col(j).asDiagonal() * coeff);
    g.noalias() += m * (x.transpose() * face_weight.asDiagonal() * x);
  }
  EnergyGram<Scalar> out;
  out.matrix = (g + g.transpose()) / Scalar(2);
  out.region = std::move(region_name);
  out.sigma_hash = sigma.hash();
  out.s = mesh.s;
  out.cell_volume = p.grid.cell_volume();
  out.window = p.window;
  return out;
}

template <typename Scalar>
EnergyGram<Scalar> energy_gram(const Conductivity<Scalar>& sigma, const DomainPartition& p, const YMesh& mesh,
                               const IndexSet& region, std::string region_name = "region") {
  const auto l = assemble_operator(p, sigma);
  const auto spec = spectral_decompose(l);
  const ExtensionSolver<Scalar> ext(p, sigma, spec, l, mesh);
  return energy_gram(ext, spec, sigma, region, std::move(region_name));
}

template <typename Scalar>
struct LocalizedSequence {
  std::vector<Vec<Scalar>> data;
  std::vector<double> energy_b;
  std::vector<double> energy_d;
  std::vector<double> epsilon;
  bool stopped_early = false;

  std::size_t size() const { return data.size(); }
};

/// Top generalized eigenvector of G_B f = mu (G_D + eps_i I) f for
/// eps_i = eps0 10^{-i}, i = 1..steps, normalized to unit D-energy.
template <typename Scalar>
LocalizedSequence<Scalar> localized_sequence(const EnergyGram<Scalar>& gb, const EnergyGram<Scalar>& gd, int steps,
                                             double eps0) {
  if (gb.window != gd.window || gb.sigma_hash != gd.sigma_hash || gb.s != gd.s) {
    throw ValidationError("energy grams have different provenance");
  }
  if (!(eps0 > 0.0)) throw ValidationError("eps0 must be positive");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  const Index n = gb.matrix.rows();
  const Scalar gd_norm = gd.matrix.norm();
  const Mat<Scalar> id = Mat<Scalar>::Identity(n, n);
  LocalizedSequence<Scalar> seq;
  for (int i = 1; i <= steps; ++i) {
    const double eps = eps0 * std::pow(10.0, -i);
    const Mat<Scalar> denom = gd.matrix + Scalar(eps) * id;
    if (Scalar(eps) < Scalar(1e-15) * gd_norm) {
      seq.stopped_early = true;
      break;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat<Scalar>> es(gb.matrix, denom, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) {
      seq.stopped_early = true;
      break;
    }
    Vec<Scalar> f = es.eigenvectors().col(n - 1);
    double ed = gd.energy(f);
    if (ed > 0.0) {
      f /= Scalar(std::sqrt(ed));
    } else {
      f /= Scalar(std::sqrt(gb.energy(f)));
    }
    ed = gd.energy(f);
    seq.data.push_back(f);
    seq.energy_b.push_back(gb.energy(f));
    seq.energy_d.push_back(ed > 0.0 ? ed : 0.0);
    seq.epsilon.push_back(eps);
  }
  return seq;
}

/// Residuals of the nested least-squares fits of v(x) beta(y) by the first m
/// window-basis extension solutions, m = 0..|W|.
struct RungeCurve {
  std::vector<double> residual_x;     // weighted H^1_x norm on (B u D) x (0,Y)
  std::vector<double> residual_full;  // adds the y-derivative term
  double target_norm_x = 0.0;
  double target_norm_full = 0.0;
  bool region_touches_boundary = false;
};

namespace detail {

/// Feature map whose Euclidean norm is the discrete weighted norm on C x y-mesh.
template <typename Scalar>
Vec<Scalar> runge_features(const Mat<Scalar>& u, const GridSpec& g, const IndexSet& c, const YMesh& mesh,
                           bool with_y) {
  std::vector<std::pair<Index, Index>> faces;
  g.for_each_face([&](Index a, Index b) {
    if (contains(c, a) && contains(c, b)) faces.emplace_back(a, b);
  });
  const double h = g.spacing();
  const double vol = g.cell_volume();
  const Index layers = mesh.intervals() + 1;
  std::vector<Scalar> out;
  out.reserve(static_cast<std::size_t>(layers) * (c.size() + faces.size() + (with_y ? c.size() : 0)));
  for (Index j = 0; j < layers; ++j) {
    const Scalar wj = Scalar(std::sqrt(vol * mesh.mass[static_cast<std::size_t>(j)]));
    for (Index i : c) out.push_back(wj * u(i, j));
    for (const auto& [a, b] : faces) out.push_back(wj * (u(b, j) - u(a, j)) / Scalar(h));
    if (with_y && j + 1 < layers) {
      const Scalar wy = Scalar(std::sqrt(vol * mesh.flux[static_cast<std::size_t>(j)]));
      for (Index i : c) out.push_back(wy * (u(i, j + 1) - u(i, j)));
    }
  }
  return Eigen::Map<Vec<Scalar>>(out.data(), static_cast<Index>(out.size()));
}

/// Squared residual norms of nested projections; modified Gram-Schmidt with
/// reorthogonalization, columns below the rank cutoff are skipped.
template <typename Scalar>
std::vector<double> nested_residuals(const std::vector<Vec<Scalar>>& basis, const Vec<Scalar>& target) {
  std::vector<Vec<Scalar>> q;
  std::vector<double> res;
  double r2 = static_cast<double>(target.squaredNorm());
  res.push_back(std::sqrt(r2));
  for (const auto& col : basis) {
    Vec<Scalar> v = col;
    const Scalar norm0 = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : q) v -= e.dot(v) * e;
    const Scalar nv = v.norm();
    if (norm0 > Scalar(0) && nv > Scalar(1e-12) * norm0) {
      v /= nv;
      const double c = static_cast<double>(v.dot(target));
      r2 = std::max(0.0, r2 - c * c);
      q.push_back(std::move(v));
    }
    res.push_back(std::sqrt(r2));
  }
  return res;
}

}  // namespace detail

template <typename Scalar>
RungeCurve runge_curve(const HarmonicTarget<Scalar>& target, const BetaProfile& beta,
                       const ExtensionSolver<Scalar>& ext, Index m) {
  const DomainPartition& p = ext.partition();
  const YMesh& mesh = ext.mesh();
  if (m < 0 || m > static_cast<Index>(p.window.size())) throw ValidationError("basis size exceeds the window");
  const Index layers = mesh.intervals() + 1;
  Mat<Scalar> tf(p.grid.cell_count(), layers);
  for (Index j = 0; j < layers; ++j)
    tf.col(j) = target.values * Scalar(beta.value(mesh.nodes[static_cast<std::size_t>(j)]));

  RungeCurve out;
  for (Index c : target.support)
    if (!p.in_omega(c)) throw ValidationError("target support must lie inside the domain");
  for (Index c : target.support)
    for (Index nb : detail::axis_neighbours(p.grid, c))
      if (!p.in_omega(nb)) out.region_touches_boundary = true;

  std::vector<Vec<Scalar>> bx, bf;
  for (Index k = 0; k < m; ++k) {
    Vec<Scalar> f = Vec<Scalar>::Zero(p.grid.cell_count());
    f(p.window[static_cast<std::size_t>(k)]) = Scalar(1);
    const Mat<Scalar> u = ext.layers(ext.traces(f).col(0));
    bx.push_back(detail::runge_features(u, p.grid, target.support, mesh, false));
    bf.push_back(detail::runge_features(u, p.grid, target.support, mesh, true));
  }
  const Vec<Scalar> tx = detail::runge_features(tf, p.grid, target.support, mesh, false);
  const Vec<Scalar> tfull = detail::runge_features(tf, p.grid, target.support, mesh, true);
  out.residual_x = detail::nested_residuals(bx, tx);
  out.residual_full = detail::nested_residuals(bf, tfull);
  out.target_norm_x = static_cast<double>(tx.norm());
  out.target_norm_full = static_cast<double>(tfull.norm());
  return out;
}

template <typename Scalar>
double runge_residual(const HarmonicTarget<Scalar>& target, const BetaProfile& beta, const Conductivity<Scalar>& sigma,
                      const DomainPartition& p, const YMesh& mesh, Index m) {
  const auto l = assemble_operator(p, sigma);
  const auto spec = spectral_decompose(l);
  const ExtensionSolver<Scalar> ext(p, sigma, spec, l, mesh);
  return runge_curve(target, beta, ext, m).residual_x.back();
}

}  // namespace fracmono

#endif  // FRACMONO_RUNGE_HPP
