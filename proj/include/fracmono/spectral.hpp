#ifndef FRACMONO_SPECTRAL_HPP
#define FRACMONO_SPECTRAL_HPP

#include "fracmono/domain.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <cmath>
#include <fstream>
#include <vector>

namespace fracmono {

/// How a face conductivity is formed from the two adjacent cell values.
enum class FaceRule { arithmetic, harmonic };

template <typename Scalar>
Scalar face_conductivity(Scalar a, Scalar b, FaceRule rule) {
  return rule == FaceRule::arithmetic ? (a + b) / Scalar(2) : Scalar(2) * a * b / (a + b);
}

/// Flux-conservative discretization of -div(sigma grad) with zero Dirichlet
/// closure one cell beyond the box.
template <typename Scalar>
struct EllipticMatrix {
  Eigen::SparseMatrix<Scalar> matrix;
  FaceRule rule = FaceRule::arithmetic;

  Index size() const { return matrix.rows(); }
};

template <typename Scalar>
EllipticMatrix<Scalar> assemble_operator(const GridSpec& grid, const Vec<Scalar>& sigma,
                                         FaceRule rule = FaceRule::arithmetic) {
  const Index n = grid.cell_count();
  if (sigma.size() != n) throw ValidationError("conductivity size does not match grid");
  const Scalar inv_h2 = Scalar(1) / (Scalar(grid.spacing()) * Scalar(grid.spacing()));
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * static_cast<std::size_t>(grid.dims()) + 1));
  Vec<Scalar> diag = Vec<Scalar>::Zero(n);
  grid.for_each_face([&](Index a, Index b) {
    const Scalar c = face_conductivity(sigma(a), sigma(b), rule) * inv_h2;
    trip.emplace_back(a, b, -c);
    trip.emplace_back(b, a, -c);
    diag(a) += c;
    diag(b) += c;
  });
  for (Index c = 0; c < n; ++c) {
    diag(c) += Scalar(grid.box_faces(c)) * sigma(c) * inv_h2;
    trip.emplace_back(c, c, diag(c));
  }
  EllipticMatrix<Scalar> out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.rule = rule;
  return out;
}

template <typename Scalar>
EllipticMatrix<Scalar> assemble_operator(const DomainPartition& p, const Conductivity<Scalar>& sigma,
                                         FaceRule rule = FaceRule::arithmetic) {
  return assemble_operator(p.grid, sigma.values, rule);
}

/// Face-difference gradient. Row r of `diff` is (u_a - u_b)/h for an interior
/// face or u_c/h for a box face; `spread` hands each squared face difference
/// back to cells (half to each side for interior faces).
template <typename Scalar>
struct GradientOperator {
  Eigen::SparseMatrix<Scalar> diff;
  Eigen::SparseMatrix<Scalar> spread;
  std::vector<std::array<Index, 2>> faces;  // {a, b}; b == -1 for box faces

  explicit GradientOperator(const GridSpec& grid) {
    const Scalar inv_h = Scalar(1) / Scalar(grid.spacing());
    grid.for_each_face([&](Index a, Index b) { faces.push_back({a, b}); });
    for (Index c = 0; c < grid.cell_count(); ++c)
      for (int k = 0; k < grid.box_faces(c); ++k) faces.push_back({c, Index(-1)});
    const auto nf = static_cast<Index>(faces.size());
    std::vector<Eigen::Triplet<Scalar>> d, s;
    for (Index r = 0; r < nf; ++r) {
      const auto [a, b] = faces[static_cast<std::size_t>(r)];
      d.emplace_back(r, a, inv_h);
      if (b >= 0) {
        d.emplace_back(r, b, -inv_h);
        s.emplace_back(a, r, Scalar(0.5));
        s.emplace_back(b, r, Scalar(0.5));
      } else {
        s.emplace_back(a, r, Scalar(1));
      }
    }
    diff.resize(nf, grid.cell_count());
    diff.setFromTriplets(d.begin(), d.end());
    spread.resize(grid.cell_count(), nf);
    spread.setFromTriplets(s.begin(), s.end());
  }

  /// Per-cell |grad u|^2 for each column of u.
  template <typename Derived>
  Mat<Scalar> density(const Eigen::MatrixBase<Derived>& u) const {
    return spread * (diff * u).cwiseAbs2();
  }
};

/// Per-cell squared gradient; with arithmetic faces sum_i sigma_i g_i = u^T L u.
template <typename Scalar>
Vec<Scalar> gradient_density(const GridSpec& grid, const Vec<Scalar>& u) {
  return GradientOperator<Scalar>(grid).density(u);
}

/// Eigendecomposition L = V diag(mu) V^T with ascending mu; source of the heat
/// semigroup, the fractional power and the jump kernel.
template <typename Scalar>
class SpectralOperator {
 public:
  static SpectralOperator decompose(const Mat<Scalar>& l) {
    if (l.rows() != l.cols()) throw ValidationError("spectral_decompose needs a square matrix");
    if ((l - l.transpose()).cwiseAbs().maxCoeff() != Scalar(0)) {
      throw ValidationError("spectral_decompose needs a symmetric matrix");
    }
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(l);
    if (es.info() != Eigen::Success) fail(l, "eigensolver did not converge");
    SpectralOperator op;
    op.values_ = es.eigenvalues();
    op.vectors_ = es.eigenvectors();
    const Index n = l.rows();
    const Scalar orth = (op.vectors_ * op.vectors_.transpose() - Mat<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
    const Scalar top = op.values_.cwiseAbs().maxCoeff();
    const Scalar resid = (l * op.vectors_ - op.vectors_ * op.values_.asDiagonal()).cwiseAbs().maxCoeff();
    if (orth > Scalar(1e-10)) fail(l, "eigenvectors not orthonormal");
    if (resid > Scalar(1e-8) * top) fail(l, "eigen residual too large");
    if (!(op.values_(0) > Scalar(0))) fail(l, "operator is not positive definite");
    return op;
  }

  static SpectralOperator decompose(const EllipticMatrix<Scalar>& l) { return decompose(Mat<Scalar>(l.matrix)); }

  Index size() const { return values_.size(); }
  const Vec<Scalar>& eigenvalues() const { return values_; }
  const Mat<Scalar>& eigenvectors() const { return vectors_; }

  /// V diag(phi(mu)) V^T, symmetrized.
  template <typename F>
  Mat<Scalar> function_matrix(F&& phi) const {
    const Vec<Scalar> d = values_.unaryExpr(phi);
    Mat<Scalar> m = vectors_ * d.asDiagonal() * vectors_.transpose();
    return (m + m.transpose()) / Scalar(2);
  }

  /// V diag(d) V^T for per-mode values d, symmetrized.
  Mat<Scalar> function_matrix_from(const Vec<Scalar>& d) const {
    Mat<Scalar> m = vectors_ * d.asDiagonal() * vectors_.transpose();
    return (m + m.transpose()) / Scalar(2);
  }

  template <typename F, typename Derived>
  Mat<Scalar> apply_function(F&& phi, const Eigen::MatrixBase<Derived>& v) const {
    const Vec<Scalar> d = values_.unaryExpr(phi);
    return vectors_ * (d.asDiagonal() * (vectors_.transpose() * v));
  }

 private:
  [[noreturn]] static void fail(const Mat<Scalar>& l, const std::string& why) {
    const std::string path = "fracmono_failed_matrix.csv";
    std::ofstream out(path);
    const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
    out << l.template cast<double>().format(csv) << "\n";
    throw NumericalError(why + " (n=" + std::to_string(l.rows()) + ", matrix dumped to " + path + ")");
  }

  Vec<Scalar> values_;
  Mat<Scalar> vectors_;
};

template <typename Scalar>
SpectralOperator<Scalar> spectral_decompose(const EllipticMatrix<Scalar>& l) {
  return SpectralOperator<Scalar>::decompose(l);
}

/// e^{-tL} v.
template <typename Scalar, typename Derived>
Mat<Scalar> heat_apply(const SpectralOperator<Scalar>& op, double t, const Eigen::MatrixBase<Derived>& v) {
  if (!(t >= 0.0)) throw ValidationError("heat_apply needs t >= 0");
  if (t == 0.0) return v;
  const Scalar tt(t);
  return op.apply_function([tt](Scalar mu) { return std::exp(-tt * mu); }, v);
}

/// L^s v.
template <typename Scalar, typename Derived>
Mat<Scalar> fractional_apply(const SpectralOperator<Scalar>& op, FracOrder s, const Eigen::MatrixBase<Derived>& v) {
  const Scalar ss(s.value());
  return op.apply_function([ss](Scalar mu) { return std::pow(mu, ss); }, v);
}

template <typename Scalar>
Mat<Scalar> fractional_matrix(const SpectralOperator<Scalar>& op, FracOrder s) {
  const Scalar ss(s.value());
  return op.function_matrix([ss](Scalar mu) { return std::pow(mu, ss); });
}

/// Time quadrature on [t_min, t_max] after t = e^tau.
struct QuadratureSpec {
  double t_min = 0.0;
  double t_max = 0.0;
  int nodes = 200;
};

/// Log-spaced nodes t_q and weights w_q for integrals in d(tau) = dt/t:
/// trapezoid with third-order Gregory end corrections.
struct LogQuadrature {
  std::vector<double> t;
  std::vector<double> w;
};

inline LogQuadrature make_log_quadrature(const QuadratureSpec& q) {
  if (q.nodes < 8) throw ValidationError("time quadrature needs at least 8 nodes");
  if (!(q.t_min > 0.0 && q.t_max > q.t_min)) throw ValidationError("time quadrature range must satisfy 0 < t_min < t_max");
  const auto n = static_cast<std::size_t>(q.nodes);
  const double a = std::log(q.t_min);
  const double b = std::log(q.t_max);
  const double h = (b - a) / static_cast<double>(n - 1);
  LogQuadrature out;
  out.t.resize(n);
  out.w.assign(n, h);
  for (std::size_t i = 0; i < n; ++i) out.t[i] = std::exp(a + h * static_cast<double>(i));
  static constexpr double end[4] = {17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0};
  for (std::size_t i = 0; i < 4; ++i) {
    out.w[i] = h * end[i];
    out.w[n - 1 - i] = h * end[i];
  }
  return out;
}

/// Default range [1e-6 h^2, 100/mu_1] with 200 nodes.
template <typename Scalar>
QuadratureSpec default_quadrature(const SpectralOperator<Scalar>& op, double h) {
  return QuadratureSpec{1e-6 * h * h, 100.0 / static_cast<double>(op.eigenvalues()(0)), 200};
}

/// L^s v through the semigroup integral
///   (1/Gamma(-s)) int_0^inf (e^{-tL} v - v) t^{-1-s} dt,
/// evaluated with heat_apply at the quadrature nodes plus closed-form head
/// (Taylor in t) and tail (e^{-tL} negligible) pieces.
template <typename Scalar, typename Derived>
Vec<Scalar> fractional_apply_quadrature(const SpectralOperator<Scalar>& op, FracOrder s,
                                        const Eigen::MatrixBase<Derived>& v, const QuadratureSpec& spec) {
  const LogQuadrature q = make_log_quadrature(spec);
  const double sv = s.value();
  const Vec<Scalar> x = v;
  Vec<Scalar> acc = Vec<Scalar>::Zero(x.size());
  for (std::size_t i = 0; i < q.t.size(); ++i) {
    const Scalar weight = Scalar(q.w[i] * std::pow(q.t[i], -sv));
    acc += weight * (heat_apply(op, q.t[i], x).col(0) - x);
  }
  const Vec<Scalar> lv = op.apply_function([](Scalar mu) { return mu; }, x);
  const Vec<Scalar> llv = op.apply_function([](Scalar mu) { return mu * mu; }, x);
  const double t0 = spec.t_min;
  acc += Scalar(-std::pow(t0, 1.0 - sv) / (1.0 - sv)) * lv;
  acc += Scalar(std::pow(t0, 2.0 - sv) / (2.0 * (2.0 - sv))) * llv;
  acc += Scalar(-std::pow(spec.t_max, -sv) / sv) * x;
  return acc / Scalar(std::tgamma(-sv));
}

/// Off-diagonal jump kernel |K_s(x_i, x_j)|; the diagonal is left at zero.
template <typename Scalar>
struct KernelMatrix {
  Mat<Scalar> entries;
  QuadratureSpec quadrature;
  double s = 0.5;
  double tail_ratio = 0.0;  // truncated-tail bound over median |K|
};

/// K_ij = (1/|Gamma(-s)|) int p_t(x_i, x_j) t^{-1-s} dt with p_t = [e^{-tL}]_ij / vol.
/// Summing heat kernels over the nodes is done mode-wise, which is the same
/// finite sum in a different order.
template <typename Scalar>
KernelMatrix<Scalar> kernel_assemble(const SpectralOperator<Scalar>& op, FracOrder s, const QuadratureSpec& spec,
                                     double h, double cell_volume) {
  const double mu1 = static_cast<double>(op.eigenvalues()(0));
  if (spec.t_min > 1e-4 * h * h) {
    throw ValidationError("kernel quadrature: t_min=" + std::to_string(spec.t_min) + " must be <= 1e-4 h^2 = " +
                          std::to_string(1e-4 * h * h));
  }
  if (spec.t_max < 10.0 / mu1) {
    throw ValidationError("kernel quadrature: t_max=" + std::to_string(spec.t_max) + " must be >= 10/mu_1 = " +
                          std::to_string(10.0 / mu1));
  }
  const LogQuadrature q = make_log_quadrature(spec);
  const double sv = s.value();
  const double scale = 1.0 / (cell_volume * std::abs(std::tgamma(-sv)));
  auto weight_fn = [&](Scalar mu) {
    Scalar acc(0);
    for (std::size_t i = 0; i < q.t.size(); ++i)
      acc += Scalar(q.w[i] * std::pow(q.t[i], -sv)) * std::exp(-Scalar(q.t[i]) * mu);
    return acc * Scalar(scale);
  };
  KernelMatrix<Scalar> out;
  out.entries = op.function_matrix(weight_fn);
  out.entries.diagonal().setZero();
  out.quadrature = spec;
  out.s = sv;

  // Every mode decays at least like the first, and sum_k |V_ik V_jk| <= 1.
  const double tail = std::exp(-mu1 * spec.t_max) * std::pow(spec.t_max, -1.0 - sv) / mu1 * scale;
  std::vector<double> mags;
  const Index n = out.entries.rows();
  mags.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) mags.push_back(std::abs(static_cast<double>(out.entries(i, j))));
  if (!mags.empty()) {
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    out.tail_ratio = *mid > 0.0 ? tail / *mid : 0.0;
  }
  if (out.tail_ratio > 0.01) {
    const double suggested = spec.t_max * (1.0 + std::log(100.0 * out.tail_ratio));
    throw ValidationError("kernel quadrature range too narrow: tail estimate is " +
                          std::to_string(100.0 * out.tail_ratio) + "% of the median kernel value; try t_max >= " +
                          std::to_string(suggested));
  }
  return out;
}

/// (1/2) sum_{i != j} (u_i - u_j)(w_i - w_j) K_ij vol^2.
template <typename Scalar, typename DU, typename DW>
Scalar bilinear_form(const KernelMatrix<Scalar>& k, const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DW>& w,
                     double cell_volume) {
  const Mat<Scalar>& K = k.entries;
  Scalar acc(0);
  for (Index j = 0; j < K.cols(); ++j)
    for (Index i = 0; i < K.rows(); ++i)
      if (i != j) acc += (u(i) - u(j)) * (w(i) - w(j)) * K(i, j);
  return acc * Scalar(0.5 * cell_volume * cell_volume);
}

}  // namespace fracmono

#endif  // FRACMONO_SPECTRAL_HPP
