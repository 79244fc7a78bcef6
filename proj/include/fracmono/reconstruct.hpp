#ifndef FRACMONO_RECONSTRUCT_HPP
#define FRACMONO_RECONSTRUCT_HPP

#include "fracmono/monotonicity.hpp"
#include "fracmono/parallel.hpp"
#include "fracmono/runge.hpp"

#include <map>
#include <optional>
#include <random>

namespace fracmono {

enum class TestSide { raise, lower };
enum class Decision { inside, outside, undecided };

inline const char* to_string(TestSide s) { return s == TestSide::raise ? "raise" : "lower"; }

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::inside: return "inside";
    case Decision::outside: return "outside";
    case Decision::undecided: return "undecided";
  }
  return "?";
}

struct PixelTestResult {
  IndexSet pixel;
  double contrast = 0.0;
  TestSide side = TestSide::raise;
  LoewnerVerdict verdict;
  Decision decision = Decision::undecided;
};

/// Tolerance for the Loewner classification: relative to the spectral norm of
/// the difference, or absolute (used with noisy data).
struct TestTolerance {
  double relative = 1e-8;
  double absolute = 0.0;
};

/// Reference coefficient sigma0 with the forward pipeline for test
/// coefficients sigma0 +/- beta chi_pixel.
template <typename Scalar>
class PixelTester {
 public:
  PixelTester(DomainPartition p, Conductivity<Scalar> sigma0, FracOrder s, FaceRule rule = FaceRule::arithmetic)
      : p_(std::move(p)), sigma0_(std::move(sigma0)), s_(s), rule_(rule) {}

  const DomainPartition& partition() const { return p_; }
  const Conductivity<Scalar>& reference() const { return sigma0_; }

  Conductivity<Scalar> test_coefficient(const IndexSet& pixel, double beta, TestSide side) const {
    if (!(beta > 0.0)) throw ValidationError("test contrast beta must be positive");
    if (pixel.empty()) throw ValidationError("pixel is empty");
    Conductivity<Scalar> c = sigma0_;
    const double sign = side == TestSide::raise ? 1.0 : -1.0;
    for (Index i : pixel) {
      if (!p_.in_omega(i)) throw ValidationError("pixel cell " + std::to_string(i) + " lies outside the domain");
      c.values(i) += Scalar(sign * beta);
      detail::check_band(sigma0_.lambda, static_cast<double>(c.values(i)), "pixel cell " + std::to_string(i));
    }
    return c;
  }

  DNMatrix<Scalar> dn_map(const Conductivity<Scalar>& sigma) const {
    return ForwardModel<Scalar>::build(p_, sigma, s_, rule_).dn;
  }

  /// raise: inside iff Lambda_meas >= Lambda_test; lower: inside iff
  /// Lambda_meas <= Lambda_test. A zero difference is undecided.
  PixelTestResult test(const DNMatrix<Scalar>& measured, const IndexSet& pixel, double beta, TestSide side,
                       TestTolerance tol) const {
    const auto dn = dn_map(test_coefficient(pixel, beta, side));
    PixelTestResult r;
    r.pixel = pixel;
    r.contrast = beta;
    r.side = side;
    r.verdict = detail::loewner(measured, dn, tol.relative, tol.absolute);
    const Ordering want = side == TestSide::raise ? Ordering::psd : Ordering::nsd;
    if (r.verdict.classification == Ordering::zero) {
      r.decision = Decision::undecided;
    } else {
      r.decision = r.verdict.classification == want ? Decision::inside : Decision::outside;
    }
    return r;
  }

 private:
  DomainPartition p_;
  Conductivity<Scalar> sigma0_;
  FracOrder s_;
  FaceRule rule_;
};

template <typename Scalar>
PixelTestResult pixel_test(const DNMatrix<Scalar>& measured, const PixelTester<Scalar>& tester, const IndexSet& pixel,
                           double beta, TestSide side, TestTolerance tol = {}) {
  return tester.test(measured, pixel, beta, side, tol);
}

/// One single-cell pixel test per cell of the test region.
template <typename Scalar>
std::map<Index, PixelTestResult> reconstruct_inclusion(const DNMatrix<Scalar>& measured,
                                                       const PixelTester<Scalar>& tester, const IndexSet& region,
                                                       double beta, TestTolerance tol = {},
                                                       TestSide side = TestSide::raise) {
  std::vector<PixelTestResult> results(region.size());
  parallel_for(region.size(), [&](std::size_t i) { results[i] = tester.test(measured, {region[i]}, beta, side, tol); });
  std::map<Index, PixelTestResult> out;
  for (std::size_t i = 0; i < region.size(); ++i) out.emplace(region[i], std::move(results[i]));
  return out;
}

inline IndexSet inside_set(const std::map<Index, PixelTestResult>& m) {
  IndexSet out;
  for (const auto& [c, r] : m)
    if (r.decision == Decision::inside) out.push_back(c);
  return out;
}

/// Symmetric Hausdorff distance in Chebyshev cell units; infinite when exactly
/// one set is empty.
inline double hausdorff_cells(const GridSpec& g, const IndexSet& a, const IndexSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [&](const IndexSet& x, const IndexSet& y) {
    Index worst = 0;
    for (Index i : x) {
      Index best = std::numeric_limits<Index>::max();
      for (Index j : y) best = std::min(best, cell_distance(g, i, j));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return static_cast<double>(std::max(directed(a, b), directed(b, a)));
}

/// Adds a symmetric random perturbation of spectral norm `level`.
template <typename Scalar>
DNMatrix<Scalar> inject_noise(DNMatrix<Scalar> dn, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw ValidationError("noise level must be nonnegative");
  if (level == 0.0) return dn;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const Index n = dn.values.rows();
  Mat<Scalar> e(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) e(i, j) = Scalar(nd(rng));
  e = (e + e.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(e, Eigen::EigenvaluesOnly);
  const Scalar norm = es.eigenvalues().cwiseAbs().maxCoeff();
  dn.values += e * Scalar(level / static_cast<double>(norm));
  return dn;
}

enum class Conclusion { consistent, contradiction_detected };

inline const char* to_string(Conclusion c) {
  return c == Conclusion::consistent ? "consistent" : "contradiction-detected";
}

struct UniquenessReport {
  IndexSet region;
  std::string direction;  // "sigma1>=sigma2", "sigma1<=sigma2" or "equal"
  double dn_gap = 0.0;
  double coefficient_gap = 0.0;
  Conclusion conclusion = Conclusion::consistent;
  bool detectable = true;  // dn_gap > noise floor whenever coefficient_gap >= delta_min
  // Localized-potential lower bound delta_min * E_B(f) <= d_s <(Lambda_hi - Lambda_lo) f, f>.
  bool localized = false;
  std::size_t localized_steps = 0;
  double localized_energy_b = 0.0;
  double localized_lower_bound = 0.0;
  double localized_pairing = 0.0;
};

struct UniquenessOptions {
  std::optional<YMesh> mesh;  // enables the localized-potential bound
  int steps = 6;
  double eps0 = 0.0;  // <= 0 selects the Frobenius norm of G_D
};

/// ||A||_2 of the symmetrized matrix.
template <typename Scalar>
double symmetric_norm(const Mat<Scalar>& a) {
  const Mat<Scalar> s = (a + a.transpose()) / Scalar(2);
  const Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s, Eigen::EigenvaluesOnly);
  return static_cast<double>(es.eigenvalues().cwiseAbs().maxCoeff());
}

template <typename Scalar>
UniquenessReport uniqueness_probe(const Conductivity<Scalar>& s1, const Conductivity<Scalar>& s2,
                                  const DomainPartition& p, IndexSet region, double delta_min, double noise_floor,
                                  FracOrder s, const UniquenessOptions& opt = {}) {
  std::sort(region.begin(), region.end());
  region.erase(std::unique(region.begin(), region.end()), region.end());
  if (s1.values.size() != p.grid.cell_count() || s2.values.size() != p.grid.cell_count()) {
    throw ValidationError("conductivities do not match the grid");
  }
  for (Index c : region)
    if (!p.in_omega(c)) throw ValidationError("region O must lie inside the domain");
  bool ge = true, le = true;
  double gap = 0.0;
  for (Index c = 0; c < p.grid.cell_count(); ++c) {
    const double d = static_cast<double>(s1.values(c) - s2.values(c));
    if (!contains(region, c)) {
      if (d != 0.0) throw ValidationError("conductivities differ outside O at cell " + std::to_string(c));
      continue;
    }
    ge = ge && d >= 0.0;
    le = le && d <= 0.0;
    gap = std::max(gap, std::abs(d));
  }
  if (!ge && !le) throw ValidationError("conductivities are not ordered on O");

  UniquenessReport r;
  r.region = region;
  r.direction = ge && le ? "equal" : ge ? "sigma1>=sigma2" : "sigma1<=sigma2";
  r.coefficient_gap = gap;
  const auto m1 = ForwardModel<Scalar>::build(p, s1, s);
  const auto m2 = ForwardModel<Scalar>::build(p, s2, s);
  r.dn_gap = symmetric_norm(Mat<Scalar>(m1.dn.values - m2.dn.values));
  r.conclusion = gap > delta_min && r.dn_gap > noise_floor ? Conclusion::contradiction_detected : Conclusion::consistent;
  r.detectable = !(gap >= delta_min && gap > 0.0) || r.dn_gap > noise_floor;

  if (opt.mesh && gap > 0.0) {
    const bool first_high = ge;
    const auto& hi = first_high ? m1 : m2;
    const auto& lo = first_high ? m2 : m1;
    IndexSet b;
    for (Index c : region)
      if (std::abs(static_cast<double>(s1.values(c) - s2.values(c))) >= delta_min) b.push_back(c);
    const IndexSet d = set_difference(p.omega, region);
    if (!b.empty() && !d.empty()) {
      const ExtensionSolver<Scalar> ext(p, hi.sigma, hi.spectrum, hi.op, *opt.mesh);
      const auto gb = energy_gram(ext, hi.spectrum, hi.sigma, b, "B");
      const auto gd = energy_gram(ext, hi.spectrum, hi.sigma, d, "D");
      const double eps0 = opt.eps0 > 0.0 ? opt.eps0 : static_cast<double>(gd.matrix.norm());
      const auto seq = localized_sequence(gb, gd, opt.steps, eps0);
      if (seq.size() > 0) {
        const Vec<Scalar>& f = seq.data.back();
        DNMatrix<Scalar> delta = hi.dn;
        delta.values -= lo.dn.values;
        r.localized = true;
        r.localized_steps = seq.size();
        r.localized_energy_b = seq.energy_b.back();
        r.localized_lower_bound = delta_min * seq.energy_b.back();
        r.localized_pairing =
            d_s_constant(s) * static_cast<double>(dn_pairing(delta, f, f, p.grid.cell_volume()));
      }
    }
  }
  return r;
}

}  // namespace fracmono

#endif  // FRACMONO_RECONSTRUCT_HPP
