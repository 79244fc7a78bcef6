#include "fracmono/domain.hpp"

#include <cmath>

namespace fracmono {

GridSpec::GridSpec(int dims, Index cells_per_axis, double half_width)
    : dims_(dims), cells_(cells_per_axis), half_width_(half_width) {
  if (dims != 1 && dims != 2) throw ValidationError("grid dims must be 1 or 2, got " + std::to_string(dims));
  if (cells_per_axis < 8) {
    throw ValidationError("grid needs at least 8 cells per axis, got " + std::to_string(cells_per_axis));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ValidationError("grid half width must be positive");
  }
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dims_); }

Index GridSpec::cell_count() const { return dims_ == 2 ? cells_ * cells_ : cells_; }

std::array<double, 2> GridSpec::center(Index c) const {
  const auto ij = coords(c);
  const double h = spacing();
  return {-half_width_ + (static_cast<double>(ij[0]) + 0.5) * h,
          dims_ == 2 ? -half_width_ + (static_cast<double>(ij[1]) + 0.5) * h : 0.0};
}

int GridSpec::box_faces(Index c) const {
  const auto ij = coords(c);
  int n = 0;
  for (int ax = 0; ax < dims_; ++ax) {
    const Index k = ij[static_cast<std::size_t>(ax)];
    if (k == 0) ++n;
    if (k == cells_ - 1) ++n;
  }
  return n;
}

std::uint64_t GridSpec::hash() const {
  Fnv1a h;
  h.value(dims_).value(cells_).value(half_width_);
  return h.digest();
}

Index cell_distance(const GridSpec& grid, Index a, Index b) {
  const auto pa = grid.coords(a);
  const auto pb = grid.coords(b);
  return std::max(std::abs(pa[0] - pb[0]), std::abs(pa[1] - pb[1]));
}

IndexSet rasterize(const GridSpec& grid, const Shape& shape) {
  IndexSet out;
  for (Index c = 0; c < grid.cell_count(); ++c) {
    const auto x = grid.center(c);
    for (const Box& b : shape) {
      bool inside = true;
      for (int ax = 0; ax < grid.dims(); ++ax) {
        const auto k = static_cast<std::size_t>(ax);
        inside = inside && x[k] >= b.lo[k] && x[k] <= b.hi[k];
      }
      if (inside) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

namespace {

void require_subset(const IndexSet& sub, const IndexSet& super, const char* name) {
  if (!std::includes(super.begin(), super.end(), sub.begin(), sub.end())) {
    throw ValidationError(std::string(name) + " must lie inside the domain");
  }
}

}  // namespace

DomainPartition make_partition(const GridSpec& grid, IndexSet omega, IndexSet window,
                               std::optional<IndexSet> b_set, std::optional<IndexSet> d_set,
                               std::optional<IndexSet> o_set) {
  auto normalize = [](IndexSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  };
  normalize(omega);
  normalize(window);
  if (omega.empty()) throw ValidationError("domain omega is empty");
  if (window.empty()) throw ValidationError("window is empty");
  for (Index c : omega)
    if (c < 0 || c >= grid.cell_count()) throw ValidationError("domain cell index out of range");
  for (Index w : window) {
    if (w < 0 || w >= grid.cell_count()) throw ValidationError("window cell index out of range");
    for (Index c : omega) {
      // Closures are disjoint only with at least one full cell in between.
      if (cell_distance(grid, w, c) < 2) throw ValidationError("window intersects domain closure");
    }
  }
  IndexSet all(static_cast<std::size_t>(grid.cell_count()));
  for (Index c = 0; c < grid.cell_count(); ++c) all[static_cast<std::size_t>(c)] = c;

  DomainPartition p{grid, omega, set_difference(all, omega), window, std::nullopt, std::nullopt, std::nullopt};
  if (b_set) {
    normalize(*b_set);
    require_subset(*b_set, omega, "b_set");
    p.b_set = std::move(b_set);
  }
  if (d_set) {
    normalize(*d_set);
    require_subset(*d_set, omega, "d_set");
    p.d_set = std::move(d_set);
  }
  if (o_set) {
    normalize(*o_set);
    require_subset(*o_set, omega, "o_set");
    p.o_set = std::move(o_set);
  }
  if (p.b_set && p.d_set) {
    if (!set_intersection(*p.b_set, *p.d_set).empty()) throw ValidationError("b_set and d_set overlap");
    if (set_difference(*p.b_set, *p.d_set).empty()) throw ValidationError("b_set minus d_set is empty");
  }
  return p;
}

DomainPartition build_partition(const GridSpec& grid, const Geometry& g) {
  auto optional_shape = [&](const Shape& s) -> std::optional<IndexSet> {
    if (s.empty()) return std::nullopt;
    return rasterize(grid, s);
  };
  return make_partition(grid, rasterize(grid, g.omega), rasterize(grid, g.window), optional_shape(g.b),
                        optional_shape(g.d), optional_shape(g.o));
}

}  // namespace fracmono
