#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tensor.hpp"

namespace signa {

struct KMeansOptions {
  std::size_t k = 2;
  std::size_t restarts = 10;
  std::size_t max_iters = 300;
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<int> assignments;
  Tensor centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;
};

namespace kmeans_detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// k-means++: first centre uniform, then proportional to squared distance.
inline Tensor seed_plus_plus(const Tensor& x, std::size_t k, RngStream& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor centroids(Shape{k, d});
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], sq_dist(x.row(i), centroids.row(c)));
      total += dist[i];
    }
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.below(n));
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= dist[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

inline double assign(const Tensor& x, const Tensor& centroids, std::vector<int>& out) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double dd = sq_dist(x.row(i), centroids.row(c));
      if (dd < best) {
        best = dd;
        arg = static_cast<int>(c);
      }
    }
    out[i] = arg;
    inertia += best;
  }
  return inertia;
}

}  // namespace kmeans_detail

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// inertia wins. A centroid left without points is moved onto the point
/// farthest from its own centroid.
inline KMeansResult kmeans(const Tensor& x, const KMeansOptions& options, RngStream& rng) {
  x.require_matrix("kmeans");
  const std::size_t n = x.rows(), d = x.cols(), k = options.k;
  if (k == 0 || k > n) throw InvalidArgument("kmeans needs 1 <= k <= rows");
  if (options.restarts == 0) throw InvalidArgument("kmeans needs at least one restart");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    auto run_rng = rng.fork(restart);
    KMeansResult cur;
    cur.centroids = kmeans_detail::seed_plus_plus(x, k, run_rng);
    cur.assignments.assign(n, 0);
    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
      cur.inertia = kmeans_detail::assign(x, cur.centroids, cur.assignments);
      cur.inertia_history.push_back(cur.inertia);
      cur.iterations = iter + 1;
      Tensor next(Shape{k, d});
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(cur.assignments[i]);
        ++counts[c];
        auto row = next.row(c);
        const auto xi = x.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] += xi[j];
      }
      for (std::size_t c = 0; c < k; ++c) {
        auto row = next.row(c);
        if (counts[c] == 0) {
          std::size_t far = 0;
          double far_d = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dd = kmeans_detail::sq_dist(x.row(i), cur.centroids.row(static_cast<std::size_t>(cur.assignments[i])));
            if (dd > far_d) {
              far_d = dd;
              far = i;
            }
          }
          std::copy(x.row(far).begin(), x.row(far).end(), row.begin());
          continue;
        }
        for (auto& v : row) v /= static_cast<double>(counts[c]);
      }
      double shift = 0.0;
      for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, kmeans_detail::sq_dist(next.row(c), cur.centroids.row(c)));
      cur.centroids = std::move(next);
      if (std::sqrt(shift) < options.tol) {
        cur.inertia = kmeans_detail::assign(x, cur.centroids, cur.assignments);
        cur.inertia_history.push_back(cur.inertia);
        break;
      }
    }
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

}  // namespace signa
