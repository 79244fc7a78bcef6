#ifndef FRACMONO_COMMON_HPP
#define FRACMONO_COMMON_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracmono {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sorted list of linear cell indices.
using IndexSet = std::vector<Index>;

/// Input that violates a documented precondition (bad config, band violation, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not deliver its postcondition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Order s of the fractional power, always in the open interval (0, 1).
class FracOrder {
 public:
  explicit FracOrder(double s) : value_(s) {
    if (!(s > 0.0 && s < 1.0)) {
      throw ValidationError("fractional order s=" + std::to_string(s) + " outside (0,1)");
    }
  }
  double value() const { return value_; }

 private:
  double value_;
};

/// FNV-1a, used for provenance tags. Stable across runs and platforms with
/// the same floating point layout.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 1099511628211ULL;
    }
    return *this;
  }
  template <typename T>
  Fnv1a& value(const T& v) {
    return bytes(&v, sizeof(T));
  }
  Fnv1a& text(const std::string& s) { return bytes(s.data(), s.size()); }
  template <typename Derived>
  Fnv1a& dense(const Eigen::DenseBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) value(m(i, j));
    return *this;
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

inline bool contains(const IndexSet& set, Index i) {
  return std::binary_search(set.begin(), set.end(), i);
}

/// Gather entries of v at the given indices.
template <typename Derived>
Vec<typename Derived::Scalar> gather(const Eigen::MatrixBase<Derived>& v, const IndexSet& idx) {
  Vec<typename Derived::Scalar> out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

/// Submatrix m(rows, cols).
template <typename Derived>
Mat<typename Derived::Scalar> block_of(const Eigen::MatrixBase<Derived>& m, const IndexSet& rows,
                                       const IndexSet& cols) {
  Mat<typename Derived::Scalar> out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace fracmono

#endif  // FRACMONO_COMMON_HPP
