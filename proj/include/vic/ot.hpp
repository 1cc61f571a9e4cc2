#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace vic {

/// Similarity matrix augmented with a dust-bin row and column. The extra row
/// absorbs instances that only exist in the second frame (inflow), the extra
/// column absorbs instances that only exist in the first frame (outflow), and
/// every augmented cell holds the scalar threshold.
struct AugmentedScore {
  Eigen::MatrixXd values;  // (m+1) x (n+1)
  double threshold = 0.0;
  int m = 0;
  int n = 0;
};

inline AugmentedScore build_augmented_score(const Eigen::MatrixXd& similarity,
                                            double threshold) {
  if (!similarity.allFinite() || !std::isfinite(threshold))
    throw std::invalid_argument("build_augmented_score: non-finite input");
  AugmentedScore score;
  score.m = static_cast<int>(similarity.rows());
  score.n = static_cast<int>(similarity.cols());
  score.threshold = threshold;
  score.values =
      Eigen::MatrixXd::Constant(score.m + 1, score.n + 1, threshold);
  score.values.topLeftCorner(score.m, score.n) = similarity;
  return score;
}

/// Histogram marginals: every real instance carries mass 1, the dust-bin row
/// carries n and the dust-bin column carries m, so both sides total m + n.
/// The normalized probabilities divide by max(m,1) * max(n,1).
struct Marginals {
  int m = 0;
  int n = 0;
  Eigen::VectorXd row_mass;  // length m + 1
  Eigen::VectorXd col_mass;  // length n + 1
  double normalizer = 1.0;
  Eigen::VectorXd row_prob;
  Eigen::VectorXd col_prob;
};

inline Marginals build_marginals(int m, int n) {
  if (m < 0 || n < 0) throw std::invalid_argument("build_marginals: negative count");
  if (m == 0 && n == 0)
    throw std::invalid_argument("build_marginals: both sides empty");
  Marginals marg;
  marg.m = m;
  marg.n = n;
  marg.row_mass = Eigen::VectorXd::Ones(m + 1);
  marg.row_mass(m) = static_cast<double>(n);
  marg.col_mass = Eigen::VectorXd::Ones(n + 1);
  marg.col_mass(n) = static_cast<double>(m);
  marg.normalizer = static_cast<double>(std::max(m, 1)) * std::max(n, 1);
  marg.row_prob = marg.row_mass / marg.normalizer;
  marg.col_prob = marg.col_mass / marg.normalizer;
  return marg;
}

enum class PlanScale { normalized, count };
enum class SinkhornDomain { naive, log };

struct SinkhornOptions {
  double sigma = 1.0;
  int iterations = 100;
  SinkhornDomain domain = SinkhornDomain::log;
  bool record_dual_trace = false;
};

/// Soft assignment between two frames. In count scale each real row and
/// column sums to 1 (up to the reported violation), the dust-bin row to n and
/// the dust-bin column to m.
struct TransportPlan {
  Eigen::MatrixXd values;  // (m+1) x (n+1)
  int m = 0;
  int n = 0;
  PlanScale scale = PlanScale::normalized;
  int iterations_run = 0;
  double marginal_violation = 0.0;  // L1, always in count scale
  bool used_log_domain = false;
  bool overflow_fallback = false;
  std::vector<double> dual_trace;
};

namespace detail {

inline double count_scale_violation(const Eigen::MatrixXd& count_plan,
                                    const Marginals& marg) {
  return (count_plan.rowwise().sum() - marg.row_mass).cwiseAbs().sum() +
         (count_plan.colwise().sum().transpose() - marg.col_mass)
             .cwiseAbs()
             .sum();
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf)
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

// Dual objective of the entropic problem; each half update is an exact
// block-coordinate maximizer of it, so it is non-decreasing per iteration.
inline double dual_objective(const Eigen::VectorXd& log_u,
                             const Eigen::VectorXd& log_v,
                             const Eigen::MatrixXd& plan, double sigma,
                             const Marginals& marg) {
  double value = 0.0;
  for (int i = 0; i < log_u.size(); ++i)
    if (marg.row_prob(i) > 0.0) value += marg.row_prob(i) * sigma * log_u(i);
  for (int j = 0; j < log_v.size(); ++j)
    if (marg.col_prob(j) > 0.0) value += marg.col_prob(j) * sigma * log_v(j);
  return value - sigma * plan.sum();
}

struct SinkhornCore {
  Eigen::MatrixXd plan;  // normalized scale
  Eigen::VectorXd log_u, log_v;
  std::vector<double> dual_trace;
  bool overflowed = false;
};

inline SinkhornCore sinkhorn_naive(const Eigen::MatrixXd& kernel,
                                   const Marginals& marg,
                                   const SinkhornOptions& opts) {
  SinkhornCore core;
  const int rows = static_cast<int>(kernel.rows());
  const int cols = static_cast<int>(kernel.cols());
  Eigen::VectorXd u = Eigen::VectorXd::Ones(rows);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(cols);
  const Eigen::VectorXd& a = marg.row_prob;
  const Eigen::VectorXd& b = marg.col_prob;

  for (int it = 0; it < opts.iterations; ++it) {
    const Eigen::VectorXd ku = kernel * v;
    for (int i = 0; i < rows; ++i) u(i) = a(i) == 0.0 ? 0.0 : a(i) / ku(i);
    const Eigen::VectorXd kv = kernel.transpose() * u;
    for (int j = 0; j < cols; ++j) v(j) = b(j) == 0.0 ? 0.0 : b(j) / kv(j);
    if (!u.allFinite() || !v.allFinite()) {
      core.overflowed = true;
      return core;
    }
    if (opts.record_dual_trace) {
      const Eigen::MatrixXd plan =
          u.asDiagonal() * kernel * v.asDiagonal();
      core.dual_trace.push_back(dual_objective(
          u.array().log().matrix(), v.array().log().matrix(), plan,
          opts.sigma, marg));
    }
  }
  core.plan = u.asDiagonal() * kernel * v.asDiagonal();
  if (!core.plan.allFinite()) {
    core.overflowed = true;
    return core;
  }
  core.log_u = u.array().log().matrix();
  core.log_v = v.array().log().matrix();
  return core;
}

inline SinkhornCore sinkhorn_log(const Eigen::MatrixXd& log_kernel,
                                 const Marginals& marg,
                                 const SinkhornOptions& opts) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  SinkhornCore core;
  const int rows = static_cast<int>(log_kernel.rows());
  const int cols = static_cast<int>(log_kernel.cols());
  Eigen::VectorXd log_a(rows), log_b(cols);
  for (int i = 0; i < rows; ++i)
    log_a(i) = marg.row_prob(i) > 0.0 ? std::log(marg.row_prob(i)) : neg_inf;
  for (int j = 0; j < cols; ++j)
    log_b(j) = marg.col_prob(j) > 0.0 ? std::log(marg.col_prob(j)) : neg_inf;

  Eigen::VectorXd log_u = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd log_v = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd scratch_row(cols), scratch_col(rows);

  auto make_plan = [&]() {
    Eigen::MatrixXd plan(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        plan(i, j) = std::exp(log_u(i) + log_kernel(i, j) + log_v(j));
    return plan;
  };

  for (int it = 0; it < opts.iterations; ++it) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j)
        scratch_row(j) = log_kernel(i, j) + log_v(j);
      log_u(i) = log_a(i) - log_sum_exp(scratch_row);
      if (std::isnan(log_u(i))) log_u(i) = neg_inf;  // -inf minus -inf
    }
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i)
        scratch_col(i) = log_kernel(i, j) + log_u(i);
      log_v(j) = log_b(j) - log_sum_exp(scratch_col);
      if (std::isnan(log_v(j))) log_v(j) = neg_inf;
    }
    if (opts.record_dual_trace)
      core.dual_trace.push_back(
          dual_objective(log_u, log_v, make_plan(), opts.sigma, marg));
  }
  core.plan = make_plan();
  core.log_u = log_u;
  core.log_v = log_v;
  return core;
}

}  // namespace detail

/// Entropic solver for the augmented assignment problem. The kernel is
/// exp(+score/sigma): the plan concentrates where similarities (or the
/// threshold, for dust bins) are largest. Runs exactly `iterations`
/// alternations; the remaining marginal violation is reported, not enforced.
inline TransportPlan sinkhorn(const AugmentedScore& score,
                              const Marginals& marg,
                              const SinkhornOptions& opts = {}) {
  if (!(opts.sigma > 0.0)) throw std::invalid_argument("sinkhorn: sigma must be positive");
  if (opts.iterations < 1)
    throw std::invalid_argument("sinkhorn: iterations must be >= 1");
  if (score.m != marg.m || score.n != marg.n)
    throw std::invalid_argument("sinkhorn: score/marginal shape mismatch");

  const Eigen::MatrixXd log_kernel = score.values / opts.sigma;

  detail::SinkhornCore core;
  bool fell_back = false;
  bool used_log = opts.domain == SinkhornDomain::log;
  if (opts.domain == SinkhornDomain::naive) {
    core = detail::sinkhorn_naive(log_kernel.array().exp().matrix(), marg, opts);
    if (core.overflowed) {
      core = detail::sinkhorn_log(log_kernel, marg, opts);
      fell_back = true;
      used_log = true;
    }
  } else {
    core = detail::sinkhorn_log(log_kernel, marg, opts);
  }

  TransportPlan plan;
  plan.values = core.plan;
  plan.m = score.m;
  plan.n = score.n;
  plan.scale = PlanScale::normalized;
  plan.iterations_run = opts.iterations;
  plan.used_log_domain = used_log;
  plan.overflow_fallback = fell_back;
  plan.dual_trace = std::move(core.dual_trace);
  plan.marginal_violation =
      detail::count_scale_violation(marg.normalizer * plan.values, marg);
  return plan;
}

/// Multiplies a normalized plan by max(m,1)*max(n,1) so that entries read as
/// assignment probabilities and row/column sums match the histogram masses.
inline TransportPlan rescale_plan(const TransportPlan& plan) {
  if (plan.scale != PlanScale::normalized)
    throw std::logic_error("rescale_plan: plan already in count scale");
  TransportPlan out = plan;
  const double normalizer =
      static_cast<double>(std::max(plan.m, 1)) * std::max(plan.n, 1);
  out.values *= normalizer;
  out.scale = PlanScale::count;
  return out;
}

/// Objective sum(plan .* score) of a count-scale plan.
inline double transport_objective(const TransportPlan& plan,
                                  const AugmentedScore& score) {
  if (plan.scale != PlanScale::count)
    throw std::logic_error("transport_objective: plan must be in count scale");
  return plan.values.cwiseProduct(score.values).sum();
}

/// Exact maximizer of the augmented assignment LP, for testing. Feasible
/// integral plans correspond one-to-one with partial matchings between the m
/// rows and n columns (unmatched instances route to their dust bin and the
/// corner absorbs the matched mass), so exhaustive enumeration of partial
/// matchings visits every vertex of the transport polytope.
inline TransportPlan lp_oracle(const AugmentedScore& score,
                               const Marginals& marg) {
  if (score.m != marg.m || score.n != marg.n)
    throw std::invalid_argument("lp_oracle: score/marginal shape mismatch");
  const int m = score.m;
  const int n = score.n;
  if (m + n > 12)
    throw std::invalid_argument(
        "lp_oracle: instance too large (m + n must be <= 12)");

  const double c = score.threshold;
  std::vector<int> row_to_col(m, -1), best_assign(m, -1);
  std::vector<bool> col_used(n, false);
  double best_gain = 0.0;  // empty matching

  // DFS over partial matchings; gain(S) = sum over S of (C_ij - c).
  auto dfs = [&](auto&& self, int row, double gain) -> void {
    if (row == m) {
      if (gain > best_gain) {
        best_gain = gain;
        best_assign = row_to_col;
      }
      return;
    }
    self(self, row + 1, gain);  // row goes to the dust bin
    for (int j = 0; j < n; ++j) {
      if (col_used[j]) continue;
      col_used[j] = true;
      row_to_col[row] = j;
      self(self, row + 1, gain + score.values(row, j) - c);
      row_to_col[row] = -1;
      col_used[j] = false;
    }
  };
  dfs(dfs, 0, 0.0);

  TransportPlan plan;
  plan.m = m;
  plan.n = n;
  plan.scale = PlanScale::count;
  plan.values = Eigen::MatrixXd::Zero(m + 1, n + 1);
  int matched = 0;
  std::vector<bool> col_matched(n, false);
  for (int i = 0; i < m; ++i) {
    if (best_assign[i] >= 0) {
      plan.values(i, best_assign[i]) = 1.0;
      col_matched[best_assign[i]] = true;
      ++matched;
    } else {
      plan.values(i, n) = 1.0;
    }
  }
  for (int j = 0; j < n; ++j)
    if (!col_matched[j]) plan.values(m, j) = 1.0;
  plan.values(m, n) = static_cast<double>(matched);
  plan.marginal_violation = 0.0;
  plan.iterations_run = 0;
  return plan;
}

}  // namespace vic
