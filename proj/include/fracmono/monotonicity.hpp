#ifndef FRACMONO_MONOTONICITY_HPP
#define FRACMONO_MONOTONICITY_HPP

#include "fracmono/extension.hpp"

#include <Eigen/Eigenvalues>
#include <limits>
#include <random>
#include <utility>

namespace fracmono {

enum class Ordering { psd, nsd, indefinite, zero };

inline const char* to_string(Ordering o) {
  switch (o) {
    case Ordering::psd: return "PSD";
    case Ordering::nsd: return "NSD";
    case Ordering::indefinite: return "indefinite";
    case Ordering::zero: return "zero";
  }
  return "?";
}

struct LoewnerVerdict {
  double min_eig = 0.0;
  double max_eig = 0.0;
  Ordering classification = Ordering::zero;
  double tolerance = 0.0;
  double scale = 0.0;
};

namespace detail {

template <typename Scalar>
LoewnerVerdict loewner(const DNMatrix<Scalar>& l1, const DNMatrix<Scalar>& l2, double rel_tol, double abs_tol) {
  if (l1.window != l2.window || l1.grid_hash != l2.grid_hash || l1.s != l2.s ||
      l1.values.rows() != l2.values.rows()) {
    throw ValidationError("DN maps have different provenance (window, grid or order)");
  }
  if (!(rel_tol >= 0.0) || !(abs_tol >= 0.0)) throw ValidationError("tolerance must be nonnegative");
  Mat<Scalar> d = l1.values - l2.values;
  d = (d + d.transpose()).eval() / Scalar(2);
  const Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(d, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on DN difference");
  LoewnerVerdict v;
  v.min_eig = static_cast<double>(es.eigenvalues().minCoeff());
  v.max_eig = static_cast<double>(es.eigenvalues().maxCoeff());
  v.scale = std::max(std::abs(v.min_eig), std::abs(v.max_eig));
  const double tol = rel_tol * v.scale + abs_tol;
  v.tolerance = tol;
  const double ref = static_cast<double>(std::max(l1.values.norm(), l2.values.norm()));
  if (v.scale <= std::max(abs_tol, 64.0 * std::numeric_limits<double>::epsilon() * ref)) {
    v.classification = Ordering::zero;
  } else if (v.min_eig >= -tol) {
    v.classification = Ordering::psd;
  } else if (v.max_eig <= tol) {
    v.classification = Ordering::nsd;
  } else {
    v.classification = Ordering::indefinite;
  }
  return v;
}

}  // namespace detail

/// Sign of the quadratic form of Lambda1 - Lambda2. `tol` is relative to the
/// spectral norm of the difference; a difference at round-off level of the
/// maps themselves is "zero". The reported tolerance is the absolute one used.
template <typename Scalar>
LoewnerVerdict loewner_test(const DNMatrix<Scalar>& l1, const DNMatrix<Scalar>& l2, double tol) {
  return detail::loewner(l1, l2, tol, 0.0);
}

/// Same classification with an absolute eigenvalue tolerance, for noisy data.
template <typename Scalar>
LoewnerVerdict loewner_test_absolute(const DNMatrix<Scalar>& l1, const DNMatrix<Scalar>& l2, double abs_tol) {
  return detail::loewner(l1, l2, 0.0, abs_tol);
}

enum class SandwichForm { first, second };

inline const char* to_string(SandwichForm f) { return f == SandwichForm::first ? "lemma31_first" : "lemma31_second"; }

struct SandwichReport {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  SandwichForm form = SandwichForm::first;
  double lower_violation = 0.0;
  double upper_violation = 0.0;

  double worst_violation() const { return std::max(lower_violation, upper_violation); }
  bool holds(double abs_tol, double rel_tol) const {
    return worst_violation() <= abs_tol + rel_tol * std::abs(middle);
  }
};

/// Both coefficients with their forward models and extension solvers; built
/// once and reused for many boundary data.
template <typename Scalar>
class SandwichPair {
 public:
  SandwichPair(const DomainPartition& p, const Conductivity<Scalar>& s1, const Conductivity<Scalar>& s2,
               const YMesh& mesh)
      : m1_(ForwardModel<Scalar>::build(p, s1, FracOrder(mesh.s))),
        m2_(ForwardModel<Scalar>::build(p, s2, FracOrder(mesh.s))),
        e1_(p, s1, m1_.spectrum, m1_.op, mesh),
        e2_(p, s2, m2_.spectrum, m2_.op, mesh) {
    if (s1.values.size() != s2.values.size()) throw ValidationError("conductivities live on different grids");
  }

  const ForwardModel<Scalar>& first() const { return m1_; }
  const ForwardModel<Scalar>& second() const { return m2_; }

  SandwichReport evaluate(const Vec<Scalar>& fw, SandwichForm form) const {
    const DomainPartition& p = m1_.partition;
    const Vec<Scalar> f = scatter_window(p, fw);
    const YMesh& mesh = e1_.mesh();
    const Vec<Scalar>& s1 = m1_.sigma.values;
    const Vec<Scalar>& s2 = m2_.sigma.values;
    const Vec<Scalar> diff = s1 - s2;

    DNMatrix<Scalar> delta = m1_.dn;
    delta.values -= m2_.dn.values;

    SandwichReport r;
    r.form = form;
    r.middle = d_s_constant(FracOrder(mesh.s)) * static_cast<double>(dn_pairing(delta, fw, fw, p.grid.cell_volume()));
    const auto u2 = e2_.solve(f);
    r.upper = energy(u2, mesh, p.omega, diff, "omega", "sigma1-sigma2").value;
    if (form == SandwichForm::first) {
      const auto u1 = e1_.solve(f);
      r.lower = energy(u1, mesh, p.omega, diff, "omega", "sigma1-sigma2").value;
    } else {
      const Vec<Scalar> rho = (s2.array() / s1.array() * diff.array()).matrix();
      r.lower = energy(u2, mesh, p.omega, rho, "omega", "sigma2/sigma1*(sigma1-sigma2)").value;
    }
    r.lower_violation = std::max(0.0, r.lower - r.middle);
    r.upper_violation = std::max(0.0, r.middle - r.upper);
    return r;
  }

 private:
  ForwardModel<Scalar> m1_;
  ForwardModel<Scalar> m2_;
  ExtensionSolver<Scalar> e1_;
  ExtensionSolver<Scalar> e2_;
};

template <typename Scalar>
SandwichReport verify_sandwich(const Conductivity<Scalar>& s1, const Conductivity<Scalar>& s2,
                               const DomainPartition& p, const YMesh& mesh, const Vec<Scalar>& fw,
                               SandwichForm form) {
  return SandwichPair<Scalar>(p, s1, s2, mesh).evaluate(fw, form);
}

/// Random smooth nonnegative field on omega: a sum of 1-3 Gaussian bumps with
/// amplitudes in [0, amp].
template <typename Scalar>
Vec<Scalar> random_bump_field(const DomainPartition& p, std::mt19937_64& rng, double amp) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_int_distribution<std::size_t> pick(0, p.omega.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = p.grid.half_width();
  const double h = p.grid.spacing();
  Vec<Scalar> out = Vec<Scalar>::Zero(p.grid.cell_count());
  const int n = count(rng);
  for (int b = 0; b < n; ++b) {
    const auto c0 = p.grid.center(p.omega[pick(rng)]);
    const double a = amp * unit(rng);
    const double w = h + (0.5 * r - h) * unit(rng);
    for (Index c : p.omega) {
      const auto x = p.grid.center(c);
      const double d2 = (x[0] - c0[0]) * (x[0] - c0[0]) + (x[1] - c0[1]) * (x[1] - c0[1]);
      out(c) += Scalar(a * std::exp(-d2 / (2.0 * w * w)));
    }
  }
  return out;
}

/// sigma1 >= sigma2 pointwise, both 1 plus nonnegative bumps, values in [1, 2].
template <typename Scalar>
std::pair<Conductivity<Scalar>, Conductivity<Scalar>> random_ordered_pair(const DomainPartition& p,
                                                                          std::mt19937_64& rng,
                                                                          double lambda = 0.4) {
  Vec<Scalar> s2 = Vec<Scalar>::Ones(p.grid.cell_count()) + random_bump_field<Scalar>(p, rng, 0.5);
  s2 = s2.cwiseMin(Scalar(2));
  Vec<Scalar> s1 = (s2 + random_bump_field<Scalar>(p, rng, 0.5)).cwiseMin(Scalar(2));
  return {conductivity_from_values(p, std::move(s1), lambda), conductivity_from_values(p, std::move(s2), lambda)};
}

}  // namespace fracmono

#endif  // FRACMONO_MONOTONICITY_HPP
