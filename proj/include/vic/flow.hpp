#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vic/ot.hpp"

namespace vic {

/// Discrete reading of a frame pair: matched index pairs, first-frame-only
/// instances (outflow) and second-frame-only instances (inflow).
struct FlowDecomposition {
  std::vector<std::pair<int, int>> matched;
  std::vector<int> inflow;   // column indices
  std::vector<int> outflow;  // row indices
};

/// Mass the dust-bin row sends to real columns: the soft count of instances
/// that are new in the second frame.
inline double soft_inflow_count(const TransportPlan& plan) {
  if (plan.scale != PlanScale::count)
    throw std::logic_error("soft_inflow_count: plan must be in count scale");
  if (plan.n == 0) return 0.0;
  return plan.values.row(plan.m).head(plan.n).sum();
}

/// Mass real rows send to the dust-bin column: the soft count of departures.
inline double soft_outflow_count(const TransportPlan& plan) {
  if (plan.scale != PlanScale::count)
    throw std::logic_error("soft_outflow_count: plan must be in count scale");
  if (plan.m == 0) return 0.0;
  return plan.values.col(plan.n).head(plan.m).sum();
}

/// Hard decisions from a soft plan. A pair is matched when row and column
/// pick each other as their (full-row / full-column) argmax and neither
/// argmax is the dust bin; everything else flows to the bins. Ties break
/// toward the lower index.
inline FlowDecomposition decode_assignment(const TransportPlan& plan) {
  if (plan.scale != PlanScale::count)
    throw std::logic_error("decode_assignment: plan must be in count scale");
  const int m = plan.m;
  const int n = plan.n;

  std::vector<int> row_pick(m, -1), col_pick(n, -1);
  for (int i = 0; i < m; ++i) {
    int best = n;  // dust bin
    double best_value = plan.values(i, n);
    for (int j = n - 1; j >= 0; --j)
      if (plan.values(i, j) >= best_value) {
        best_value = plan.values(i, j);
        best = j;
      }
    row_pick[i] = best;
  }
  for (int j = 0; j < n; ++j) {
    int best = m;
    double best_value = plan.values(m, j);
    for (int i = m - 1; i >= 0; --i)
      if (plan.values(i, j) >= best_value) {
        best_value = plan.values(i, j);
        best = i;
      }
    col_pick[j] = best;
  }

  FlowDecomposition flow;
  std::vector<bool> row_matched(m, false), col_matched(n, false);
  for (int i = 0; i < m; ++i) {
    const int j = row_pick[i];
    if (j < n && col_pick[j] == i) {
      flow.matched.emplace_back(i, j);
      row_matched[i] = true;
      col_matched[j] = true;
    }
  }
  for (int i = 0; i < m; ++i)
    if (!row_matched[i]) flow.outflow.push_back(i);
  for (int j = 0; j < n; ++j)
    if (!col_matched[j]) flow.inflow.push_back(j);
  return flow;
}

namespace detail {

// Shortest-augmenting-path assignment with potentials, O(rows^2 * cols);
// requires rows <= cols and minimizes total cost over full row assignments.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based with column 0 as the virtual start column.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> match(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_value(cols + 1, inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < min_value[j]) {
          min_value[j] = cur;
          way[j] = j0;
        }
        if (min_value[j] < delta) {
          delta = min_value[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_value[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (int j = 1; j <= cols; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Exact maximum-similarity one-to-one assignment of min(m, n) pairs, after
/// which pairs below the threshold are dissolved into inflow + outflow.
inline FlowDecomposition hungarian_baseline(const Eigen::MatrixXd& similarity,
                                            double threshold = 0.0) {
  if (!similarity.allFinite())
    throw std::invalid_argument("hungarian_baseline: non-finite similarity");
  const int m = static_cast<int>(similarity.rows());
  const int n = static_cast<int>(similarity.cols());

  FlowDecomposition flow;
  std::vector<int> row_to_col(m, -1);
  if (m > 0 && n > 0) {
    if (m <= n) {
      row_to_col = detail::min_cost_assignment(-similarity);
    } else {
      const std::vector<int> col_to_row =
          detail::min_cost_assignment((-similarity).transpose());
      for (int j = 0; j < n; ++j)
        if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
    }
  }

  std::vector<bool> col_matched(n, false);
  for (int i = 0; i < m; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && similarity(i, j) >= threshold) {
      flow.matched.emplace_back(i, j);
      col_matched[j] = true;
    } else {
      flow.outflow.push_back(i);
    }
  }
  for (int j = 0; j < n; ++j)
    if (!col_matched[j]) flow.inflow.push_back(j);
  return flow;
}

}  // namespace vic
