#ifndef FRACMONO_EXTERIOR_HPP
#define FRACMONO_EXTERIOR_HPP

#include "fracmono/spectral.hpp"

#include <Eigen/Cholesky>

namespace fracmono {

/// Dense A = L^s with its provenance.
template <typename Scalar>
struct FractionalMatrix {
  Mat<Scalar> values;
  double s = 0.5;
  std::uint64_t sigma_hash = 0;
};

template <typename Scalar>
FractionalMatrix<Scalar> make_fractional_matrix(const SpectralOperator<Scalar>& op, FracOrder s,
                                                std::uint64_t sigma_hash = 0) {
  return FractionalMatrix<Scalar>{fractional_matrix(op, s), s.value(), sigma_hash};
}

/// Dirichlet-to-Neumann map in the cell basis of the window.
template <typename Scalar>
struct DNMatrix {
  Mat<Scalar> values;
  double s = 0.5;
  std::uint64_t sigma_hash = 0;
  std::uint64_t grid_hash = 0;
  IndexSet window;

  Scalar max_abs() const { return values.cwiseAbs().maxCoeff(); }
};

namespace detail {

template <typename Scalar>
Eigen::LLT<Mat<Scalar>> factor_interior(const Mat<Scalar>& a_oo) {
  Eigen::LLT<Mat<Scalar>> llt(a_oo);
  if (llt.info() != Eigen::Success) throw NumericalError("interior block of L^s is not positive definite");
  return llt;
}

}  // namespace detail

/// Solution of L^s u = 0 in omega, u = f on the exterior. `f` is a full-length
/// vector and must vanish on omega.
template <typename Scalar>
Vec<Scalar> solve_exterior(const FractionalMatrix<Scalar>& a, const DomainPartition& p, const Vec<Scalar>& f) {
  if (f.size() != p.grid.cell_count()) throw ValidationError("exterior data has wrong length");
  for (Index c : p.omega)
    if (f(c) != Scalar(0)) throw ValidationError("exterior data must vanish on the domain");
  const Mat<Scalar> a_oo = block_of(a.values, p.omega, p.omega);
  const Mat<Scalar> a_oe = block_of(a.values, p.omega, p.exterior);
  const Vec<Scalar> f_e = gather(f, p.exterior);
  const Vec<Scalar> u_o = detail::factor_interior(a_oo).solve(-(a_oe * f_e));
  Vec<Scalar> u = f;
  for (std::size_t k = 0; k < p.omega.size(); ++k) u(p.omega[k]) = u_o(static_cast<Index>(k));

  const Vec<Scalar> r = gather(Vec<Scalar>(a.values * u), p.omega);
  const Scalar norm_a = a.values.cwiseAbs().rowwise().sum().maxCoeff();
  if (r.norm() > Scalar(1e-8) * norm_a * f.norm()) throw NumericalError("exterior solve residual too large");
  return u;
}

/// Lambda = A_WW - A_WO A_OO^{-1} A_OW.
template <typename Scalar>
DNMatrix<Scalar> assemble_dn_schur(const FractionalMatrix<Scalar>& a, const DomainPartition& p) {
  if (p.window.empty()) throw ValidationError("window is empty");
  const Mat<Scalar> a_oo = block_of(a.values, p.omega, p.omega);
  const Mat<Scalar> a_ow = block_of(a.values, p.omega, p.window);
  const Mat<Scalar> a_ww = block_of(a.values, p.window, p.window);
  const Mat<Scalar> x = detail::factor_interior(a_oo).solve(a_ow);
  DNMatrix<Scalar> dn;
  dn.values = a_ww - a_ow.transpose() * x;
  dn.s = a.s;
  dn.sigma_hash = a.sigma_hash;
  dn.grid_hash = p.grid.hash();
  dn.window = p.window;
  return dn;
}

/// Column j is (A u^{e_j})|_W with u^{e_j} from solve_exterior.
template <typename Scalar>
DNMatrix<Scalar> assemble_dn_columns(const FractionalMatrix<Scalar>& a, const DomainPartition& p) {
  if (p.window.empty()) throw ValidationError("window is empty");
  const auto m = static_cast<Index>(p.window.size());
  DNMatrix<Scalar> dn;
  dn.values.resize(m, m);
  for (Index j = 0; j < m; ++j) {
    Vec<Scalar> f = Vec<Scalar>::Zero(p.grid.cell_count());
    f(p.window[static_cast<std::size_t>(j)]) = Scalar(1);
    const Vec<Scalar> u = solve_exterior(a, p, f);
    dn.values.col(j) = gather(Vec<Scalar>(a.values * u), p.window);
  }
  dn.s = a.s;
  dn.sigma_hash = a.sigma_hash;
  dn.grid_hash = p.grid.hash();
  dn.window = p.window;
  return dn;
}

template <typename Scalar>
DNMatrix<Scalar> assemble_dn(const FractionalMatrix<Scalar>& a, const DomainPartition& p) {
  return assemble_dn_schur(a, p);
}

/// <Lambda f, g> = f^T Lambda g vol, with Lambda symmetrized. Written so that
/// swapping f and g reproduces the value bit for bit.
template <typename Scalar, typename DF, typename DG>
Scalar dn_pairing(const DNMatrix<Scalar>& dn, const Eigen::MatrixBase<DF>& f, const Eigen::MatrixBase<DG>& g,
                  double cell_volume) {
  const Mat<Scalar>& l = dn.values;
  if (f.size() != l.rows() || g.size() != l.rows()) throw ValidationError("pairing vectors must live on the window");
  Scalar acc(0);
  for (Index i = 0; i < l.rows(); ++i) {
    acc += l(i, i) * (f(i) * g(i));
    for (Index j = i + 1; j < l.cols(); ++j)
      acc += ((l(i, j) + l(j, i)) / Scalar(2)) * (f(i) * g(j) + f(j) * g(i));
  }
  return acc * Scalar(cell_volume);
}

/// Everything downstream of (partition, sigma, s): operator, spectrum, L^s and
/// the DN map.
template <typename Scalar>
struct ForwardModel {
  DomainPartition partition;
  Conductivity<Scalar> sigma;
  double s;
  EllipticMatrix<Scalar> op;
  SpectralOperator<Scalar> spectrum;
  FractionalMatrix<Scalar> frac;
  DNMatrix<Scalar> dn;

  static ForwardModel build(const DomainPartition& p, const Conductivity<Scalar>& sigma, FracOrder s,
                            FaceRule rule = FaceRule::arithmetic) {
    auto l = assemble_operator(p, sigma, rule);
    auto spec = spectral_decompose(l);
    auto a = make_fractional_matrix(spec, s, sigma.hash());
    auto dn = assemble_dn_schur(a, p);
    return ForwardModel{p, sigma, s.value(), std::move(l), std::move(spec), std::move(a), std::move(dn)};
  }
};

}  // namespace fracmono

#endif  // FRACMONO_EXTERIOR_HPP
