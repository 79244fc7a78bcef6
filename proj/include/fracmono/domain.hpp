#ifndef FRACMONO_DOMAIN_HPP
#define FRACMONO_DOMAIN_HPP

#include "fracmono/common.hpp"

#include <array>
#include <optional>
#include <sstream>

namespace fracmono {

/// Uniform cell-centred grid on the box [-R, R]^n, n in {1, 2}.
class GridSpec {
 public:
  GridSpec(int dims, Index cells_per_axis, double half_width);

  int dims() const { return dims_; }
  Index cells_per_axis() const { return cells_; }
  double half_width() const { return half_width_; }
  double spacing() const { return 2.0 * half_width_ / static_cast<double>(cells_); }
  double cell_volume() const;
  Index cell_count() const;

  std::array<Index, 2> coords(Index cell) const {
    return {cell % cells_, dims_ == 2 ? cell / cells_ : 0};
  }
  Index cell(Index ix, Index iy = 0) const { return ix + cells_ * iy; }
  std::array<double, 2> center(Index cell) const;

  /// Linear index offset to the neighbour along `axis`.
  Index stride(int axis) const { return axis == 0 ? 1 : cells_; }

  /// Calls f(a, b) for every interior face between cells a < b.
  template <typename F>
  void for_each_face(F&& f) const {
    for (Index c = 0; c < cell_count(); ++c) {
      const auto ij = coords(c);
      for (int ax = 0; ax < dims_; ++ax)
        if (ij[static_cast<std::size_t>(ax)] + 1 < cells_) f(c, c + stride(ax));
    }
  }

  /// Number of faces of `cell` lying on the box boundary.
  int box_faces(Index cell) const;

  std::uint64_t hash() const;

 private:
  int dims_;
  Index cells_;
  double half_width_;
};

/// Axis-aligned box [lo, hi] in physical coordinates (second entry unused in 1D).
struct Box {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
};

/// Union of boxes; a cell belongs to the shape when its centre does.
using Shape = std::vector<Box>;

IndexSet rasterize(const GridSpec& grid, const Shape& shape);

/// Shapes for the partition. b, d and o are optional test subsets of omega.
struct Geometry {
  Shape omega;
  Shape window;
  Shape b;
  Shape d;
  Shape o;
};

struct DomainPartition {
  GridSpec grid;
  IndexSet omega;
  IndexSet exterior;
  IndexSet window;
  std::optional<IndexSet> b_set;
  std::optional<IndexSet> d_set;
  std::optional<IndexSet> o_set;

  bool in_omega(Index c) const { return contains(omega, c); }
};

/// Rasterizes the geometry and checks every partition invariant.
DomainPartition build_partition(const GridSpec& grid, const Geometry& geometry);

/// Same checks for index sets that were built directly.
DomainPartition make_partition(const GridSpec& grid, IndexSet omega, IndexSet window,
                               std::optional<IndexSet> b_set = std::nullopt,
                               std::optional<IndexSet> d_set = std::nullopt,
                               std::optional<IndexSet> o_set = std::nullopt);

/// Chebyshev distance in cell units between two cells.
Index cell_distance(const GridSpec& grid, Index a, Index b);

/// Per-cell coefficient sigma with lambda <= sigma <= 1/lambda on omega and
/// sigma = 1 everywhere else.
template <typename Scalar>
struct Conductivity {
  Vec<Scalar> values;
  double lambda = 0.5;

  std::uint64_t hash() const {
    Fnv1a h;
    h.dense(values).value(lambda);
    return h.digest();
  }
};

struct Inclusion {
  IndexSet cells;
  double value = 1.0;
};

namespace detail {
inline void check_band(double lambda, double value, const std::string& where) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ValidationError("ellipticity constant lambda=" + std::to_string(lambda) + " outside (0,1)");
  }
  if (!(value >= lambda && value <= 1.0 / lambda)) {
    std::ostringstream os;
    os << "ellipticity violated: sigma=" << value << " at " << where << " outside [" << lambda << ", "
       << 1.0 / lambda << "]";
    throw ValidationError(os.str());
  }
}
}  // namespace detail

/// Wraps raw per-cell values after checking the band and the exterior
/// normalization.
template <typename Scalar = double>
Conductivity<Scalar> conductivity_from_values(const DomainPartition& p, Vec<Scalar> values, double lambda) {
  if (values.size() != p.grid.cell_count()) {
    throw ValidationError("conductivity has " + std::to_string(values.size()) + " values, grid has " +
                          std::to_string(p.grid.cell_count()) + " cells");
  }
  for (Index c = 0; c < values.size(); ++c) {
    if (p.in_omega(c)) {
      detail::check_band(lambda, static_cast<double>(values(c)), "cell " + std::to_string(c));
    } else if (values(c) != Scalar(1)) {
      throw ValidationError("sigma must equal 1 off the domain; cell " + std::to_string(c) + " has " +
                            std::to_string(static_cast<double>(values(c))));
    }
  }
  return Conductivity<Scalar>{std::move(values), lambda};
}

template <typename Scalar = double>
Conductivity<Scalar> make_conductivity(const DomainPartition& p, double background,
                                       const std::vector<Inclusion>& inclusions, double lambda) {
  detail::check_band(lambda, background, "background");
  Vec<Scalar> values = Vec<Scalar>::Ones(p.grid.cell_count());
  for (Index c : p.omega) values(c) = Scalar(background);
  for (const auto& inc : inclusions) {
    for (Index c : inc.cells) {
      if (!p.in_omega(c)) {
        throw ValidationError("inclusion cell " + std::to_string(c) + " lies outside the domain");
      }
      detail::check_band(lambda, inc.value, "cell " + std::to_string(c));
      values(c) = Scalar(inc.value);
    }
  }
  return Conductivity<Scalar>{std::move(values), lambda};
}

}  // namespace fracmono

#endif  // FRACMONO_DOMAIN_HPP
