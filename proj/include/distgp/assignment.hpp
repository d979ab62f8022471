#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

#include "distgp/errors.hpp"

namespace distgp {

/// Minimum-cost perfect matching on a square cost matrix by the shortest
/// augmenting path method with row/column potentials, O(m^3).
/// Returns col[i], the column assigned to row i.
inline std::vector<Eigen::Index> solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index m = cost.rows();
  if (cost.cols() != m) throw DimensionError("assignment cost matrix must be square");
  if (m == 0) return {};

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based bookkeeping; index 0 is the virtual root of each search.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<Eigen::Index> row_of(m + 1, 0), way(m + 1, 0);

  for (Eigen::Index i = 1; i <= m; ++i) {
    row_of[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = row_of[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Eigen::Index> col(m);
  for (Eigen::Index j = 1; j <= m; ++j) col[row_of[j] - 1] = j - 1;
  return col;
}

/// Sum of cost(i, col[i]) accumulated in row order.
inline double assignment_cost(const Eigen::MatrixXd& cost,
                              const std::vector<Eigen::Index>& col) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) total += cost(i, col[i]);
  return total;
}

}  // namespace distgp
