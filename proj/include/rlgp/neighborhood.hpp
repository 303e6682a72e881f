// Training corpus and per-query nearest-neighbor subdesigns.
//
// Neighbor selection is an exact brute-force scan: the data regimes here are
// hundreds to tens of thousands of rows per fit, selection cost is dominated
// by the downstream covariance work, and exactness keeps every downstream
// result deterministic. Ties are broken by ascending global row index.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <istream>
#include <numeric>
#include <string>
#include <vector>

#include "rlgp/csv.hpp"
#include "rlgp/kernel.hpp"

namespace rlgp {

struct Dataset {
  Matrix x;  // N x d inputs
  Vector y;  // length-N responses

  int size() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

// Expected train schema: header "x1,...,xd,y", all cells finite numbers.
inline Dataset load_dataset(std::istream& in) {
  const csv::Table table = csv::read_table(in);
  if (table.header.size() < 2)
    throw ParseError("need at least one feature column and a y column");
  const auto d = static_cast<int>(table.header.size()) - 1;
  for (int j = 0; j < d; ++j) {
    const std::string expected = "x" + std::to_string(j + 1);
    if (table.header[static_cast<std::size_t>(j)] != expected)
      throw ParseError("expected header column '" + expected + "', found '" +
                       table.header[static_cast<std::size_t>(j)] + "'");
  }
  if (table.header.back() != "y")
    throw ParseError("expected final header column 'y', found '" + table.header.back() + "'");
  if (table.rows.empty()) throw ParseError("no rows");

  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(table.rows.size()), d);
  ds.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (int j = 0; j < d; ++j) ds.x(static_cast<Eigen::Index>(i), j) = table.rows[i][static_cast<std::size_t>(j)];
    ds.y(static_cast<Eigen::Index>(i)) = table.rows[i].back();
  }
  return ds;
}

// Optional per-feature min-max transform onto [0, 1], fitted on the training
// inputs and reused verbatim for queries. Constant features map to 0.
struct FeatureScaling {
  Vector lo;
  Vector range;  // hi - lo, zeros replaced by 1

  static FeatureScaling fit(const Matrix& x) {
    FeatureScaling s;
    s.lo = x.colwise().minCoeff();
    Vector hi = x.colwise().maxCoeff();
    s.range = (hi - s.lo).cwiseMax(0.0);
    for (Eigen::Index j = 0; j < s.range.size(); ++j)
      if (s.range(j) == 0.0) s.range(j) = 1.0;
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - lo.transpose()).array().rowwise() / range.transpose().array();
  }

  Vector apply(const Vector& point) const {
    return (point - lo).cwiseQuotient(range);
  }
};

struct Neighborhood {
  std::vector<int> indices;  // global row indices, ordered by (distance, index)
  Matrix xn;                 // n x d local inputs
  Vector yn;                 // length-n local responses
  Vector query;              // the test location
  DistanceMatrix dist;       // pairwise squared distances over xn
  Vector cross_sq_dist;      // squared distance from each local point to query

  int size() const { return static_cast<int>(yn.size()); }
};

inline Neighborhood select_neighbors(const Dataset& ds, const Vector& query, int n) {
  const int total = ds.size();
  if (n < 1 || n > total)
    throw std::invalid_argument("select_neighbors: n must be in [1, N], got n=" +
                                std::to_string(n) + " with N=" + std::to_string(total));
  if (query.size() != ds.dim())
    throw std::invalid_argument("select_neighbors: query dimension mismatch");
  if (!query.allFinite()) throw std::invalid_argument("select_neighbors: non-finite query");

  Vector sq = (ds.x.rowwise() - query.transpose()).rowwise().squaredNorm();
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  const auto closer = [&sq](int a, int b) {
    return sq(a) < sq(b) || (sq(a) == sq(b) && a < b);
  };
  std::nth_element(order.begin(), order.begin() + (n - 1), order.end(), closer);
  std::sort(order.begin(), order.begin() + n, closer);
  order.resize(static_cast<std::size_t>(n));

  Neighborhood nb;
  nb.indices = std::move(order);
  nb.xn.resize(n, ds.dim());
  nb.yn.resize(n);
  nb.cross_sq_dist.resize(n);
  for (int i = 0; i < n; ++i) {
    nb.xn.row(i) = ds.x.row(nb.indices[static_cast<std::size_t>(i)]);
    nb.yn(i) = ds.y(nb.indices[static_cast<std::size_t>(i)]);
    nb.cross_sq_dist(i) = sq(nb.indices[static_cast<std::size_t>(i)]);
  }
  nb.query = query;
  nb.dist = pairwise_sq_dist(nb.xn);
  return nb;
}

}  // namespace rlgp
