#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hullmetry/core.hpp"
#include "hullmetry/polytope.hpp"

namespace hullmetry::io {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline std::vector<Point> parse_points(const json& arr, int dim, const char* field) {
  if (!arr.is_array()) throw Error(ErrorCode::ParseError, std::string("'") + field + "' must be an array");
  std::vector<Point> pts;
  for (const auto& row : arr) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw Error(ErrorCode::ParseError, std::string("each entry of '") + field + "' must have dim coordinates");
    Point p(dim);
    for (int i = 0; i < dim; ++i) {
      if (!row[static_cast<std::size_t>(i)].is_number()) throw Error(ErrorCode::ParseError, "coordinates must be numbers");
      p[i] = row[static_cast<std::size_t>(i)].get<double>();
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

inline int parse_dim(const json& doc) {
  if (!doc.contains("dim") || !doc["dim"].is_number_integer())
    throw Error(ErrorCode::ParseError, "missing integer 'dim'");
  const int dim = doc["dim"].get<int>();
  if (dim < 1) throw Error(ErrorCode::ParseError, "'dim' must be >= 1");
  return dim;
}

/// {"dim": n, "vertices": [[...]], "facets": [[idx, ...], ...]}
inline Polytope polytope_from_json(const json& doc) {
  const int dim = parse_dim(doc);
  if (!doc.contains("vertices") || !doc.contains("facets"))
    throw Error(ErrorCode::ParseError, "body needs 'vertices' and 'facets'");
  auto verts = parse_points(doc["vertices"], dim, "vertices");
  std::vector<std::vector<std::size_t>> facets;
  for (const auto& f : doc["facets"]) {
    if (!f.is_array()) throw Error(ErrorCode::ParseError, "each facet must be an index array");
    std::vector<std::size_t> idx;
    for (const auto& i : f) {
      if (!i.is_number_integer() || i.get<long long>() < 0)
        throw Error(ErrorCode::ParseError, "facet indices must be non-negative integers");
      idx.push_back(i.get<std::size_t>());
    }
    facets.push_back(std::move(idx));
  }
  return make_polytope(dim, verts, facets);
}

/// {"dim": n, "points": [[...]]}; a body document is accepted and read as
/// its vertex set.
inline PointCloud cloud_from_json(const json& doc) {
  const int dim = parse_dim(doc);
  if (doc.contains("points")) return PointCloud::from_points(parse_points(doc["points"], dim, "points"));
  if (doc.contains("vertices")) return PointCloud::from_points(parse_points(doc["vertices"], dim, "vertices"));
  throw Error(ErrorCode::ParseError, "cloud needs 'points'");
}

inline json polytope_to_json(const Polytope& poly) {
  json doc;
  doc["dim"] = poly.dim();
  json verts = json::array();
  for (const auto& v : poly.vertices()) {
    json row = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
    verts.push_back(row);
  }
  doc["vertices"] = verts;
  json facets = json::array();
  for (const auto& s : poly.boundary.simplices) facets.push_back(s.vertices);
  doc["facets"] = facets;
  return doc;
}

inline json point_to_json(const Point& p) {
  json row = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
  return row;
}

}  // namespace hullmetry::io
