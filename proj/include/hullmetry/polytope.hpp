#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <queue>
#include <vector>

#include "hullmetry/core.hpp"

namespace hullmetry {

/// An (n-1)-simplex on the boundary of an n-dimensional body. Vertices index
/// into the owning boundary's vertex table; the orientation is the vertex
/// order times `orientation`.
struct OrientedSimplex {
  std::vector<std::size_t> vertices;
  int orientation = 1;
};

struct SimplicialBoundary {
  int dim = 0;
  std::vector<Point> vertices;
  std::vector<OrientedSimplex> simplices;
};

/// A closed bounded polyhedron given by its vertex table and an oriented
/// simplicial boundary. The body need not be convex.
struct Polytope {
  SimplicialBoundary boundary;

  int dim() const { return boundary.dim; }
  const std::vector<Point>& vertices() const { return boundary.vertices; }
};

namespace detail {

inline int permutation_parity(std::vector<std::size_t>& v) {
  // insertion sort, counting transpositions
  int parity = 1;
  for (std::size_t i = 1; i < v.size(); ++i)
    for (std::size_t j = i; j > 0 && v[j - 1] > v[j]; --j) {
      std::swap(v[j - 1], v[j]);
      parity = -parity;
    }
  return parity;
}

struct RidgeUse {
  std::size_t simplex;
  int sign;
};

/// Ridges ((n-2)-faces) with their induced orientation, keyed by sorted index set.
inline std::map<std::vector<std::size_t>, std::vector<RidgeUse>> ridge_table(const SimplicialBoundary& b) {
  std::map<std::vector<std::size_t>, std::vector<RidgeUse>> table;
  for (std::size_t s = 0; s < b.simplices.size(); ++s) {
    const auto& sx = b.simplices[s];
    const std::size_t k = sx.vertices.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::size_t> face;
      face.reserve(k - 1);
      for (std::size_t j = 0; j < k; ++j)
        if (j != i) face.push_back(sx.vertices[j]);
      int sign = ((i % 2 == 0) ? 1 : -1) * sx.orientation;
      sign *= permutation_parity(face);
      table[face].push_back({s, sign});
    }
  }
  return table;
}

inline void normalize_orientation(SimplicialBoundary& b) {
  if (b.dim < 2) return;
  for (auto& s : b.simplices) {
    if (s.orientation < 0) {
      std::swap(s.vertices[0], s.vertices[1]);
      s.orientation = 1;
    }
  }
}

inline Point vertex_centroid(const SimplicialBoundary& b) {
  Point c = Point::Zero(b.dim);
  if (b.vertices.empty()) return c;
  for (const auto& v : b.vertices) c += v;
  return c / static_cast<double>(b.vertices.size());
}

inline double simplex_cone_volume(const SimplicialBoundary& b, const OrientedSimplex& s, const Point& apex) {
  const int n = b.dim;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m.col(i) = b.vertices[s.vertices[static_cast<std::size_t>(i)]] - apex;
  return s.orientation * m.determinant() / factorial(n);
}

}  // namespace detail

/// True when every ridge is shared by exactly two simplices with opposite
/// induced orientations. In dimension 1 the endpoint signs must cancel.
inline bool is_closed(const SimplicialBoundary& b) {
  if (b.dim == 1) {
    int total = 0;
    for (const auto& s : b.simplices) total += s.orientation;
    return total == 0 && !b.simplices.empty();
  }
  if (b.simplices.empty()) return false;
  for (const auto& [face, uses] : detail::ridge_table(b)) {
    if (uses.size() != 2 || uses[0].sign != -uses[1].sign) return false;
  }
  return true;
}

/// Signed sum of cone volumes over the boundary: sum_sigma det(v_1..v_n)/n!.
/// Coordinates are taken relative to the vertex centroid; for a closed
/// boundary the sum does not depend on the apex.
inline double volume_det(const SimplicialBoundary& b) {
  const Point apex = detail::vertex_centroid(b);
  double vol = 0.0;
  for (const auto& s : b.simplices) vol += detail::simplex_cone_volume(b, s, apex);
  return vol;
}

/// Volume from the last coordinate and the projection that deletes it:
/// (-1)^(n-1) sum_sigma mean(v_i[n]) det[1 ... 1; v_i[not n]] / (n-1)!.
inline double volume_projected(const SimplicialBoundary& b) {
  const int n = b.dim;
  const Point shift = detail::vertex_centroid(b);
  const double sign = (n % 2 == 1) ? 1.0 : -1.0;
  double vol = 0.0;
  Eigen::MatrixXd m(n, n);
  for (const auto& s : b.simplices) {
    double mean_last = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point v = b.vertices[s.vertices[static_cast<std::size_t>(i)]] - shift;
      mean_last += v[n - 1];
      m(0, i) = 1.0;
      for (int r = 0; r < n - 1; ++r) m(r + 1, i) = v[r];
    }
    mean_last /= n;
    vol += s.orientation * mean_last * m.determinant() / factorial(n - 1);
  }
  return sign * vol;
}

/// Builds a closed, outward-oriented simplicial boundary from facet index
/// lists. Polygonal facets in R^3 are fanned from their lowest-index vertex;
/// in R^2 facets are edges and for n >= 4 each facet must already be a simplex.
/// Facet orientation is propagated across shared ridges and the result is
/// flipped per connected component so each component has positive volume.
inline SimplicialBoundary triangulate_boundary(int dim, const std::vector<Point>& vertices,
                                               const std::vector<std::vector<std::size_t>>& facets) {
  if (dim < 1) throw Error(ErrorCode::ParamOutOfRange, "dimension must be >= 1");
  if (dim > kMaxHullDim) throw Error(ErrorCode::Unsupported, "boundary work is capped at dimension 8");
  for (const auto& v : vertices)
    if (v.size() != dim) throw Error(ErrorCode::DimensionMismatch, "vertex dimension differs from body dimension");

  SimplicialBoundary b;
  b.dim = dim;
  b.vertices = vertices;

  for (const auto& f : facets) {
    for (auto idx : f)
      if (idx >= vertices.size()) throw Error(ErrorCode::ParamOutOfRange, "facet references unknown vertex");
  }

  if (dim == 1) {
    // endpoints: sort by coordinate and alternate exit/entry signs
    std::vector<std::size_t> pts;
    for (const auto& f : facets) {
      if (f.size() != 1) throw Error(ErrorCode::NonOrientable, "1-d facets must be single vertices");
      pts.push_back(f[0]);
    }
    if (pts.size() % 2 != 0 || pts.empty()) throw Error(ErrorCode::NonOrientable, "odd number of 1-d endpoints");
    std::stable_sort(pts.begin(), pts.end(),
                     [&](std::size_t a, std::size_t c) { return vertices[a][0] < vertices[c][0]; });
    for (std::size_t i = 0; i < pts.size(); ++i)
      b.simplices.push_back({{pts[i]}, (i % 2 == 0) ? -1 : 1});
    return b;
  }

  for (const auto& f : facets) {
    if (f.size() < static_cast<std::size_t>(dim))
      throw Error(ErrorCode::NonOrientable, "facet has fewer vertices than the dimension");
    if (f.size() == static_cast<std::size_t>(dim)) {
      b.simplices.push_back({f, 1});
      continue;
    }
    if (dim != 3) throw Error(ErrorCode::Unsupported, "non-simplicial facets are only supported in R^3");
    const auto lowest = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    std::vector<std::size_t> ring(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) ring[i] = f[(lowest + i) % f.size()];
    for (std::size_t i = 1; i + 1 < ring.size(); ++i) b.simplices.push_back({{ring[0], ring[i], ring[i + 1]}, 1});
  }

  const auto table = detail::ridge_table(b);
  std::vector<std::vector<std::pair<std::size_t, int>>> adj(b.simplices.size());  // (neighbour, relation)
  for (const auto& [face, uses] : table) {
    if (uses.size() != 2) throw Error(ErrorCode::NonOrientable, "boundary is not closed: ridge used " +
                                                                     std::to_string(uses.size()) + " times");
    // flip[b] = -flip[a] * sa * sb
    const int rel = -uses[0].sign * uses[1].sign;
    adj[uses[0].simplex].push_back({uses[1].simplex, rel});
    adj[uses[1].simplex].push_back({uses[0].simplex, rel});
  }

  std::vector<int> flip(b.simplices.size(), 0);
  std::vector<int> component(b.simplices.size(), -1);
  int n_components = 0;
  for (std::size_t start = 0; start < b.simplices.size(); ++start) {
    if (flip[start] != 0) continue;
    flip[start] = 1;
    component[start] = n_components;
    std::queue<std::size_t> q;
    q.push(start);
    while (!q.empty()) {
      const auto s = q.front();
      q.pop();
      for (auto [t, rel] : adj[s]) {
        const int want = flip[s] * rel;
        if (flip[t] == 0) {
          flip[t] = want;
          component[t] = n_components;
          q.push(t);
        } else if (flip[t] != want) {
          throw Error(ErrorCode::NonOrientable, "facets cannot be consistently oriented");
        }
      }
    }
    ++n_components;
  }
  for (std::size_t s = 0; s < b.simplices.size(); ++s) b.simplices[s].orientation *= flip[s];

  const Point apex = detail::vertex_centroid(b);
  std::vector<double> comp_vol(static_cast<std::size_t>(n_components), 0.0);
  for (std::size_t s = 0; s < b.simplices.size(); ++s)
    comp_vol[static_cast<std::size_t>(component[s])] += detail::simplex_cone_volume(b, b.simplices[s], apex);
  for (std::size_t s = 0; s < b.simplices.size(); ++s)
    if (comp_vol[static_cast<std::size_t>(component[s])] < 0) b.simplices[s].orientation *= -1;

  detail::normalize_orientation(b);
  return b;
}

/// Returns the boundary of an existing polytope after checking it is closed.
inline SimplicialBoundary triangulate_boundary(const Polytope& poly) {
  if (!is_closed(poly.boundary)) throw Error(ErrorCode::NonOrientable, "polytope boundary is not closed");
  return poly.boundary;
}

inline Polytope make_polytope(int dim, const std::vector<Point>& vertices,
                              const std::vector<std::vector<std::size_t>>& facets) {
  return Polytope{triangulate_boundary(dim, vertices, facets)};
}

inline PointCloud vertex_cloud(const Polytope& poly) { return PointCloud::from_points(poly.vertices()); }

/// Applies x -> scale * x + shift to every vertex.
inline Polytope transform(const Polytope& poly, const Eigen::MatrixXd& linear, const Point& shift) {
  Polytope out = poly;
  for (auto& v : out.boundary.vertices) v = linear * v + shift;
  if (linear.determinant() < 0)
    for (auto& s : out.boundary.simplices) s.orientation *= -1;
  detail::normalize_orientation(out.boundary);
  return out;
}

}  // namespace hullmetry
