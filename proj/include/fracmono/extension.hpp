#ifndef FRACMONO_EXTENSION_HPP
#define FRACMONO_EXTENSION_HPP

#include "fracmono/exterior.hpp"

#include <optional>

namespace fracmono {

/// Graded mesh 0 = y_0 < ... < y_M = Y, y_j = Y (j/M)^grading, carrying the
/// exact integrals of the weight y^{1-2s} over each interval.
struct YMesh {
  double s = 0.5;
  double height = 0.0;
  double grading = 1.0;
  std::vector<double> nodes;    // M + 1 entries
  std::vector<double> weights;  // omega_j = int_{y_j}^{y_{j+1}} y^{1-2s} dy
  std::vector<double> flux;     // kappa_j = 1 / int_{y_j}^{y_{j+1}} y^{2s-1} dy
  std::vector<double> mass;     // trapezoid node weights (omega_{j-1} + omega_j) / 2

  Index intervals() const { return static_cast<Index>(weights.size()); }
};

/// Default grading exponent is 3/(2s).
inline YMesh build_ymesh(FracOrder s, Index intervals, double height, std::optional<double> grading = std::nullopt) {
  if (intervals < 16) throw ValidationError("y-mesh needs at least 16 intervals");
  if (!(height > 0.0)) throw ValidationError("y-mesh height must be positive");
  const double sv = s.value();
  const double g = grading.value_or(3.0 / (2.0 * sv));
  if (!(g >= 1.0)) throw ValidationError("y-mesh grading exponent must be >= 1");
  YMesh m;
  m.s = sv;
  m.height = height;
  m.grading = g;
  const auto n = static_cast<std::size_t>(intervals);
  m.nodes.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j)
    m.nodes[j] = height * std::pow(static_cast<double>(j) / static_cast<double>(n), g);
  m.nodes[n] = height;
  m.weights.resize(n);
  m.flux.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = m.nodes[j];
    const double b = m.nodes[j + 1];
    if (!(b > a)) throw ValidationError("y-mesh nodes are not strictly increasing");
    m.weights[j] = (std::pow(b, 2.0 - 2.0 * sv) - std::pow(a, 2.0 - 2.0 * sv)) / (2.0 - 2.0 * sv);
    m.flux[j] = 2.0 * sv / (std::pow(b, 2.0 * sv) - std::pow(a, 2.0 * sv));
  }
  m.mass.assign(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    m.mass[j] += 0.5 * m.weights[j];
    m.mass[j + 1] += 0.5 * m.weights[j];
  }
  return m;
}

/// d_s = Gamma(1-s) / (2^{2s-1} Gamma(s)).
inline double d_s_constant(FracOrder s) {
  const double sv = s.value();
  return std::tgamma(1.0 - sv) / (std::pow(2.0, 2.0 * sv - 1.0) * std::tgamma(sv));
}

/// Discrete extension field: column j holds the layer y = y_j.
template <typename Scalar>
struct ExtensionField {
  Mat<Scalar> values;
  Vec<Scalar> boundary_data;
  Vec<Scalar> sigma;
  double s = 0.5;
  GridSpec grid;
};

struct EnergyReport {
  std::string region;
  std::string density;
  double value = 0.0;
};

/// Solves div(y^{1-2s} diag(sigma, 1) grad u) = 0 on box x (0, Y) with u = f on
/// exterior x {0}, zero weighted flux on omega x {0}, u = 0 at y = Y and at the
/// lateral box boundary.
///
/// The x-direction uses the same flux-conservative operator L as the spectral
/// module, the y-direction P1 elements with exact flux coefficients and
/// trapezoid lumping of the x-energy. For a fixed layer-0 trace the interior
/// layers decouple in the eigenbasis of L, so each mode reduces to one
/// tridiagonal chain; the layer-0 condition on omega is then a Schur solve of
/// the resulting discrete Neumann operator.
template <typename Scalar>
class ExtensionSolver {
 public:
  ExtensionSolver(const DomainPartition& p, const Conductivity<Scalar>& sigma, const SpectralOperator<Scalar>& op,
                  const EllipticMatrix<Scalar>& l, YMesh mesh)
      : partition_(p), sigma_(sigma.values), mu_(op.eigenvalues()), v_(op.eigenvectors()), l_(l.matrix),
        mesh_(std::move(mesh)) {
    const Index n = op.size();
    const Index m = mesh_.intervals();
    profiles_.resize(n, m + 1);
    phi_.resize(n);
    for (Index k = 0; k < n; ++k) chain(k);
    neumann_ = op.function_matrix_from(phi_);
    const Mat<Scalar> s_oo = block_of(neumann_, p.omega, p.omega);
    s_oe_ = block_of(neumann_, p.omega, p.exterior);
    llt_.compute(s_oo);
    if (llt_.info() != Eigen::Success) throw NumericalError("discrete extension Neumann block is singular");
  }

  const YMesh& mesh() const { return mesh_; }
  const DomainPartition& partition() const { return partition_; }

  /// Per-mode discrete Neumann response phi(mu_k); tends to d_s mu_k^s.
  const Vec<Scalar>& mode_response() const { return phi_; }

  /// Column j: per-mode value of the layer-j field for a unit layer-0 mode.
  const Mat<Scalar>& profiles() const { return profiles_; }

  /// Layer-0 Neumann operator V diag(phi) V^T.
  const Mat<Scalar>& neumann_operator() const { return neumann_; }

  /// Layer-0 traces for each column of exterior data (full length, zero on omega).
  Mat<Scalar> traces(const Mat<Scalar>& f) const {
    const Index n = mu_.size();
    if (f.rows() != n) throw ValidationError("extension data has wrong length");
    for (Index c : partition_.omega)
      for (Index j = 0; j < f.cols(); ++j)
        if (f(c, j) != Scalar(0)) throw ValidationError("extension data must vanish on the domain");
    Mat<Scalar> f_e(static_cast<Index>(partition_.exterior.size()), f.cols());
    for (std::size_t k = 0; k < partition_.exterior.size(); ++k) f_e.row(static_cast<Index>(k)) = f.row(partition_.exterior[k]);
    const Mat<Scalar> u_o = llt_.solve(-(s_oe_ * f_e));
    Mat<Scalar> u0 = f;
    for (std::size_t k = 0; k < partition_.omega.size(); ++k) u0.row(partition_.omega[k]) = u_o.row(static_cast<Index>(k));
    return u0;
  }

  /// Field for one trace u0 (all layers).
  Mat<Scalar> layers(const Vec<Scalar>& u0) const {
    const Vec<Scalar> c = v_.transpose() * u0;
    Mat<Scalar> out = v_ * (c.asDiagonal() * profiles_);
    out.col(0) = u0;
    return out;
  }

  ExtensionField<Scalar> solve(const Vec<Scalar>& f) const {
    const Vec<Scalar> u0 = traces(f).col(0);
    ExtensionField<Scalar> field{layers(u0), f, sigma_, mesh_.s, partition_.grid};
    const double r = residual(field);
    if (r > 1e-8) {
      const Mat<Scalar> lmat = llt_.matrixL();
      const Vec<Scalar> d = lmat.diagonal().cwiseAbs2();
      throw NumericalError("extension solve residual " + std::to_string(r) + " exceeds 1e-8 (condition estimate " +
                           std::to_string(static_cast<double>(d.maxCoeff() / d.minCoeff())) + ")");
    }
    return field;
  }

  /// Relative residual of the assembled block system.
  double residual(const ExtensionField<Scalar>& field) const {
    const Mat<Scalar>& u = field.values;
    const Index m = mesh_.intervals();
    const Eigen::SparseMatrix<Scalar>& l = l_;
    Scalar num(0), den(0);
    auto accumulate = [&](const Vec<Scalar>& reaction, const Vec<Scalar>& lower, const Vec<Scalar>& upper,
                          const IndexSet* rows) {
      const Vec<Scalar> r = reaction + lower + upper;
      if (rows == nullptr) {
        num += r.squaredNorm();
        den += reaction.squaredNorm() + lower.squaredNorm() + upper.squaredNorm();
      } else {
        for (Index i : *rows) {
          num += r(i) * r(i);
          den += reaction(i) * reaction(i) + lower(i) * lower(i) + upper(i) * upper(i);
        }
      }
    };
    const auto& k = mesh_.flux;
    const auto& ms = mesh_.mass;
    for (Index j = 0; j < m; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const Vec<Scalar> reaction = Scalar(ms[js]) * (l * u.col(j));
      const Vec<Scalar> up = Scalar(k[js]) * (u.col(j) - u.col(j + 1));
      const Vec<Scalar> down =
          j == 0 ? Vec<Scalar>::Zero(u.rows()).eval() : Vec<Scalar>(Scalar(k[js - 1]) * (u.col(j) - u.col(j - 1)));
      accumulate(reaction, down, up, j == 0 ? &partition_.omega : nullptr);
    }
    if (den == Scalar(0)) return 0.0;
    return static_cast<double>(std::sqrt(num / den));
  }

 private:
  // Tridiagonal chain for mode k with U_0 = 1, U_M = 0.
  void chain(Index k) {
    const Scalar mu = mu_(k);
    const auto m = static_cast<std::size_t>(mesh_.intervals());
    const auto& kap = mesh_.flux;
    const auto& ms = mesh_.mass;
    std::vector<Scalar> cp(m), dp(m), sol(m + 1, Scalar(0));
    sol[0] = Scalar(1);
    // rows j = 1..m-1
    for (std::size_t j = 1; j < m; ++j) {
      const Scalar a = -Scalar(kap[j - 1]);
      const Scalar b = Scalar(ms[j]) * mu + Scalar(kap[j - 1]) + Scalar(kap[j]);
      const Scalar c = -Scalar(kap[j]);
      const Scalar rhs = j == 1 ? Scalar(kap[0]) : Scalar(0);
      if (j == 1) {
        cp[j] = c / b;
        dp[j] = rhs / b;
      } else {
        const Scalar denom = b - a * cp[j - 1];
        cp[j] = c / denom;
        dp[j] = (rhs - a * dp[j - 1]) / denom;
      }
    }
    for (std::size_t j = m - 1; j >= 1; --j) sol[j] = dp[j] - cp[j] * sol[j + 1];
    for (std::size_t j = 0; j <= m; ++j) profiles_(k, static_cast<Index>(j)) = sol[j];
    phi_(k) = Scalar(ms[0]) * mu + Scalar(kap[0]) * (Scalar(1) - sol[1]);
  }

  DomainPartition partition_;
  Vec<Scalar> sigma_;
  Vec<Scalar> mu_;
  Mat<Scalar> v_;
  Eigen::SparseMatrix<Scalar> l_;
  YMesh mesh_;
  Mat<Scalar> profiles_;
  Vec<Scalar> phi_;
  Mat<Scalar> neumann_;
  Mat<Scalar> s_oe_;
  Eigen::LLT<Mat<Scalar>> llt_;
};

/// Full-length exterior data from values on the window cells.
template <typename Scalar>
Vec<Scalar> scatter_window(const DomainPartition& p, const Vec<Scalar>& fw) {
  if (fw.size() != static_cast<Index>(p.window.size())) throw ValidationError("window data has wrong length");
  Vec<Scalar> f = Vec<Scalar>::Zero(p.grid.cell_count());
  for (std::size_t k = 0; k < p.window.size(); ++k) f(p.window[k]) = fw(static_cast<Index>(k));
  return f;
}

/// -lim y^{1-2s} d_y u from the boundary expansion u(.,y) ~ u(.,0) + a y^{2s}:
/// returns -2s (u_1 - u_0) / y_1^{2s}.
template <typename Scalar>
Vec<Scalar> neumann_trace(const ExtensionField<Scalar>& field, const YMesh& mesh) {
  if (field.values.cols() != mesh.intervals() + 1) throw ValidationError("field and mesh do not match");
  const double y1 = mesh.nodes[1];
  return Scalar(-2.0 * mesh.s / std::pow(y1, 2.0 * mesh.s)) * (field.values.col(1) - field.values.col(0));
}

/// Per-cell sum_j m_j |grad_x u|^2(x, y_j): the y-integrated gradient density.
template <typename Scalar>
Vec<Scalar> integrated_gradient_density(const ExtensionField<Scalar>& field, const YMesh& mesh) {
  const GradientOperator<Scalar> grad(field.grid);
  const Mat<Scalar> g = grad.density(field.values);
  Vec<Scalar> w(g.cols());
  for (Index j = 0; j < g.cols(); ++j) w(j) = Scalar(mesh.mass[static_cast<std::size_t>(j)]);
  return g * w;
}

/// int_{region x (0,Y)} y^{1-2s} rho |grad_x u|^2, discretized with the
/// face-difference gradient and the trapezoid rule in y.
template <typename Scalar>
EnergyReport energy(const ExtensionField<Scalar>& field, const YMesh& mesh, const IndexSet& region,
                    const Vec<Scalar>& density, std::string region_name = "region",
                    std::string density_name = "custom") {
  if (density.size() != field.grid.cell_count()) throw ValidationError("density must be defined on every cell");
  const Vec<Scalar> g = integrated_gradient_density(field, mesh);
  Scalar acc(0);
  for (Index c : region) acc += density(c) * g(c);
  return EnergyReport{std::move(region_name), std::move(density_name),
                      static_cast<double>(acc) * field.grid.cell_volume()};
}

/// Full weighted Dirichlet energy int y^{1-2s} (sigma |grad_x u|^2 + |d_y u|^2).
template <typename Scalar>
double weighted_dirichlet_energy(const ExtensionField<Scalar>& field, const YMesh& mesh) {
  const Vec<Scalar> g = integrated_gradient_density(field, mesh);
  Scalar acc = field.sigma.dot(g);
  for (Index j = 0; j < mesh.intervals(); ++j)
    acc += Scalar(mesh.flux[static_cast<std::size_t>(j)]) * (field.values.col(j + 1) - field.values.col(j)).squaredNorm();
  return static_cast<double>(acc) * field.grid.cell_volume();
}

struct IdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// Extension energy against d_s <Lambda f, f> for window data fw.
template <typename Scalar>
IdentityReport energy_identity_check(const ForwardModel<Scalar>& model, const ExtensionSolver<Scalar>& ext,
                                     const Vec<Scalar>& fw) {
  const auto field = ext.solve(scatter_window(model.partition, fw));
  IdentityReport r;
  r.lhs = weighted_dirichlet_energy(field, ext.mesh());
  r.rhs = d_s_constant(FracOrder(model.s)) *
          static_cast<double>(dn_pairing(model.dn, fw, fw, model.partition.grid.cell_volume()));
  const double scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
  r.gap = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
  return r;
}

template <typename Scalar>
IdentityReport energy_identity_check(const DomainPartition& p, const Conductivity<Scalar>& sigma, const YMesh& mesh,
                                     const Vec<Scalar>& fw) {
  const auto model = ForwardModel<Scalar>::build(p, sigma, FracOrder(mesh.s));
  const ExtensionSolver<Scalar> ext(p, sigma, model.spectrum, model.op, mesh);
  return energy_identity_check(model, ext, fw);
}

/// One-shot solve; builds the operator and spectrum internally.
template <typename Scalar>
ExtensionField<Scalar> solve_extension(const DomainPartition& p, const Conductivity<Scalar>& sigma,
                                       const YMesh& mesh, const Vec<Scalar>& f) {
  const auto l = assemble_operator(p, sigma);
  const auto spec = spectral_decompose(l);
  return ExtensionSolver<Scalar>(p, sigma, spec, l, mesh).solve(f);
}

}  // namespace fracmono

#endif  // FRACMONO_EXTENSION_HPP
