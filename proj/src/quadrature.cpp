#include "mixquad/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mixquad/kernels.hpp"

namespace mixquad {

Eigen::MatrixXd basis_matrix(const BasisSet& basis, const Eigen::MatrixXd& nodes,
                             int up_to_order) {
  if (nodes.cols() != basis.dimension()) {
    throw InputError("basis_matrix: node dimension mismatch");
  }
  const int n = basis.indices().count_up_to(up_to_order);
  Eigen::MatrixXd phi(n, nodes.rows());
  for (Eigen::Index k = 0; k < nodes.rows(); ++k) {
    phi.col(k) = eval_basis(basis, nodes.row(k).transpose(), up_to_order);
  }
  return phi;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol) {
  const int n = static_cast<int>(a.cols());
  if (b.size() != a.rows()) throw InputError("nnls: shape mismatch");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<char> passive(n, 0);
  std::vector<char> banned(n, 0);  // rejected entering columns, reset on pivots
  std::vector<int> passive_list;
  passive_list.reserve(n);

  const auto solve_passive = [&](void) -> Eigen::VectorXd {
    Eigen::MatrixXd ap(a.rows(), passive_list.size());
    for (std::size_t c = 0; c < passive_list.size(); ++c) {
      ap.col(c) = a.col(passive_list[c]);
    }
    return ap.colPivHouseholderQr().solve(b);
  };

  Eigen::VectorXd gradient = a.transpose() * b;  // = A^T (b - A x) at x = 0
  const int max_pivots = 30 * n + 100;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    // Most positive gradient among free, unbanned coordinates; first index
    // wins ties so the path is deterministic.
    int enter = -1;
    double best = tol;
    for (int i = 0; i < n; ++i) {
      if (!passive[i] && !banned[i] && gradient[i] > best) {
        best = gradient[i];
        enter = i;
      }
    }
    if (enter < 0) break;

    passive[enter] = 1;
    passive_list.push_back(enter);
    Eigen::VectorXd z = solve_passive();

    if (!(z[z.size() - 1] > tol)) {
      // The entering coordinate did not come out positive; put it back and
      // try the next candidate.
      passive[enter] = 0;
      passive_list.pop_back();
      banned[enter] = 1;
      continue;
    }

    // Walk toward z, clipping at the first coordinate that would go
    // negative, until the passive solve is entirely positive.
    while (true) {
      bool all_positive = true;
      double alpha = 1.0;
      int leave_pos = -1;
      for (std::size_t c = 0; c < passive_list.size(); ++c) {
        if (z[c] > 0.0) continue;
        all_positive = false;
        const int i = passive_list[c];
        const double denom = x[i] - z[c];
        const double ratio = denom > 0.0 ? x[i] / denom : 0.0;
        if (ratio < alpha) {
          alpha = ratio;
          leave_pos = static_cast<int>(c);
        }
      }
      if (all_positive) {
        for (std::size_t c = 0; c < passive_list.size(); ++c) x[passive_list[c]] = z[c];
        break;
      }
      for (std::size_t c = 0; c < passive_list.size(); ++c) {
        const int i = passive_list[c];
        x[i] += alpha * (z[c] - x[i]);
      }
      if (leave_pos >= 0) x[passive_list[leave_pos]] = 0.0;
      for (std::size_t c = passive_list.size(); c-- > 0;) {
        const int i = passive_list[c];
        if (x[i] <= 0.0) {
          x[i] = 0.0;
          passive[i] = 0;
          passive_list.erase(passive_list.begin() + static_cast<std::ptrdiff_t>(c));
        }
      }
      if (passive_list.empty()) break;
      z = solve_passive();
    }

    std::fill(banned.begin(), banned.end(), 0);
    gradient.noalias() = a.transpose() * (b - a * x);
  }
  return x;
}

Eigen::VectorXd solve_weights(const BasisSet& basis, const Eigen::MatrixXd& nodes) {
  const Eigen::MatrixXd phi = basis_matrix(basis, nodes, basis.order());
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(phi.rows());
  e1[0] = 1.0;
  return nnls(phi, e1);
}

namespace {

struct PhiWithJacobians {
  Eigen::MatrixXd phi;                   // N x M
  std::vector<Eigen::MatrixXd> grads;    // per node, N x d (unweighted)
};

PhiWithJacobians eval_with_gradients(const BasisSet& basis, const Eigen::MatrixXd& nodes) {
  PhiWithJacobians out;
  const int n = basis.size();
  out.phi.resize(n, nodes.rows());
  out.grads.reserve(static_cast<std::size_t>(nodes.rows()));
  for (Eigen::Index k = 0; k < nodes.rows(); ++k) {
    BasisEval eval = eval_basis_with_gradient(basis, nodes.row(k).transpose(), basis.order());
    out.phi.col(k) = eval.values;
    out.grads.push_back(std::move(eval.jacobian));
  }
  return out;
}

Eigen::MatrixXd damped_node_step(const PhiWithJacobians& eval, const Eigen::MatrixXd& nodes,
                                 const Eigen::VectorXd& weights, const SolverConfig& cfg) {
  const int n = static_cast<int>(eval.phi.rows());
  const int m = static_cast<int>(nodes.rows());
  const int d = static_cast<int>(nodes.cols());

  Eigen::VectorXd residual = eval.phi * weights;
  residual[0] -= 1.0;
  if (!residual.allFinite()) {
    throw NumericalError("gauss_newton_step: non-finite residual");
  }

  Eigen::MatrixXd jac(n, m * d);
  for (int k = 0; k < m; ++k) {
    jac.middleCols(k * d, d) = weights[k] * eval.grads[static_cast<std::size_t>(k)];
  }
  if (!jac.allFinite()) {
    throw NumericalError("gauss_newton_step: non-finite Jacobian");
  }

  Eigen::MatrixXd normal = jac.transpose() * jac;
  // Damping proportional to the current l1 residual: far from a solution the
  // step stays bounded, near one it degenerates to the plain Gauss-Newton
  // step (the factor is ~1e-3 * epsilon by the time the rule converges).
  const double damping = std::max(
      cfg.gn_damping,
      1e-3 * residual.lpNorm<1>() * normal.trace() / static_cast<double>(m * d));
  normal.diagonal().array() += damping;
  const Eigen::VectorXd step = normal.ldlt().solve(-jac.transpose() * residual);
  if (!step.allFinite()) {
    throw NumericalError("gauss_newton_step: linear solve produced non-finite step");
  }

  Eigen::MatrixXd updated = nodes;
  for (int k = 0; k < m; ++k) {
    updated.row(k) += step.segment(k * d, d).transpose();
  }
  return updated;
}

}  // namespace

Eigen::MatrixXd gauss_newton_step(const BasisSet& basis, const QuadratureRule& rule,
                                  const SolverConfig& cfg) {
  if (rule.nodes.rows() != rule.weights.size()) {
    throw InputError("gauss_newton_step: nodes/weights size mismatch");
  }
  const PhiWithJacobians eval = eval_with_gradients(basis, rule.nodes);
  return damped_node_step(eval, rule.nodes, rule.weights, cfg);
}

BcdResult bcd_solve(const BasisSet& basis, const QuadratureRule& start,
                    const SolverConfig& cfg) {
  if (start.nodes.rows() < 1) throw InputError("bcd_solve: rule needs at least one node");
  if (start.nodes.rows() != start.weights.size()) {
    throw InputError("bcd_solve: nodes/weights size mismatch");
  }

  const int n = basis.size();
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1[0] = 1.0;

  Eigen::MatrixXd nodes = start.nodes;
  Eigen::VectorXd weights = start.weights;

  BcdResult result;
  result.rule = start;
  result.rule.residual_l1 = std::numeric_limits<double>::infinity();

  const auto record = [&](const Eigen::MatrixXd& cand_nodes, const Eigen::VectorXd& cand_w,
                          double residual) {
    if (residual < result.rule.residual_l1) {
      result.rule.nodes = cand_nodes;
      result.rule.weights = cand_w;
      result.rule.residual_l1 = residual;
    }
    result.best_history.push_back(result.rule.residual_l1);
  };

  try {
    for (int t = 0;; ++t) {
      const PhiWithJacobians eval = eval_with_gradients(basis, nodes);
      const double residual = (eval.phi * weights - e1).lpNorm<1>();
      record(nodes, weights, residual);
      if (residual <= cfg.epsilon) {
        result.converged = true;
        break;
      }
      if (t >= cfg.max_bcd_iters) break;
      result.iterations = t + 1;

      weights = nnls(eval.phi, e1);
      const double residual_w = (eval.phi * weights - e1).lpNorm<1>();
      record(nodes, weights, residual_w);
      if (residual_w <= cfg.epsilon) {
        result.converged = true;
        break;
      }

      nodes = damped_node_step(eval, nodes, weights, cfg);
    }
  } catch (const NumericalError&) {
    // A diverging node step is a failed attempt, not a hard error; the
    // caller decides whether to retry with a different initialization.
    result.converged = false;
  }
  return result;
}

QuadratureRule cluster_init(const Eigen::MatrixXd& candidates,
                            const Eigen::VectorXd& weights, int target_m) {
  const int m0 = static_cast<int>(candidates.rows());
  if (target_m < 1) throw InputError("cluster_init: target cluster count must be >= 1");
  if (m0 < target_m) throw InputError("cluster_init: fewer candidates than clusters");
  if (weights.size() != m0) throw InputError("cluster_init: weight count mismatch");
  if (weights.minCoeff() < 0.0) throw InputError("cluster_init: negative candidate weight");

  // Complete-linkage distances support the Lance-Williams max update, so the
  // geometric part stays exact across merges.
  Eigen::MatrixXd linkage(m0, m0);
  for (int i = 0; i < m0; ++i) {
    linkage(i, i) = 0.0;
    for (int j = i + 1; j < m0; ++j) {
      const double dist = (candidates.row(i) - candidates.row(j)).norm();
      linkage(i, j) = dist;
      linkage(j, i) = dist;
    }
  }

  std::vector<char> active(m0, 1);
  Eigen::VectorXd cluster_weight = weights;
  std::vector<std::vector<int>> members(m0);
  for (int i = 0; i < m0; ++i) members[i] = {i};

  for (int remaining = m0; remaining > target_m; --remaining) {
    int best_i = -1;
    int best_j = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m0; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < m0; ++j) {
        if (!active[j]) continue;
        const double cost = (cluster_weight[i] + cluster_weight[j]) * linkage(i, j);
        if (cost < best_cost) {
          best_cost = cost;
          best_i = i;
          best_j = j;
        }
      }
    }
    cluster_weight[best_i] += cluster_weight[best_j];
    members[best_i].insert(members[best_i].end(), members[best_j].begin(),
                           members[best_j].end());
    for (int k = 0; k < m0; ++k) {
      if (!active[k] || k == best_i || k == best_j) continue;
      const double merged = std::max(linkage(best_i, k), linkage(best_j, k));
      linkage(best_i, k) = merged;
      linkage(k, best_i) = merged;
    }
    active[best_j] = 0;
  }

  QuadratureRule rule;
  rule.nodes.resize(target_m, candidates.cols());
  rule.weights.resize(target_m);
  rule.residual_l1 = std::numeric_limits<double>::infinity();
  int out = 0;
  for (int i = 0; i < m0; ++i) {
    if (!active[i]) continue;
    Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(candidates.cols());
    if (cluster_weight[i] > 0.0) {
      for (int k : members[i]) center += (weights[k] / cluster_weight[i]) * candidates.row(k);
    } else {
      for (int k : members[i]) center += candidates.row(k);
      center /= static_cast<double>(members[i].size());
    }
    rule.nodes.row(out) = center;
    rule.weights[out] = cluster_weight[i];
    ++out;
  }
  return rule;
}

namespace {

QuadratureRule drop_node(const QuadratureRule& rule, int k) {
  QuadratureRule out;
  out.order = rule.order;
  out.residual_l1 = rule.residual_l1;
  const int m = rule.size();
  out.nodes.resize(m - 1, rule.nodes.cols());
  out.weights.resize(m - 1);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    if (i == k) continue;
    out.nodes.row(row) = rule.nodes.row(i);
    out.weights[row] = rule.weights[i];
    ++row;
  }
  return out;
}

int smallest_weight_index(const Eigen::VectorXd& w) {
  int best = 0;
  for (int i = 1; i < w.size(); ++i) {
    if (w[i] < w[best]) best = i;
  }
  return best;
}

}  // namespace

QuadratureRule build_rule(const BasisSet& basis, const GaussianMixture& density,
                          int order, const SolverConfig& cfg) {
  if (order < 1) throw InputError("build_rule: order must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw InputError("build_rule: epsilon must be > 0");
  if (cfg.init_multiplier < 1 || cfg.start_nodes_factor < 1) {
    throw InputError("build_rule: pool factors must be >= 1");
  }
  if (basis.dimension() != density.dimension()) {
    throw InputError("build_rule: basis/density dimension mismatch");
  }
  if (basis.order() != 2 * order) {
    throw InputError("build_rule: basis must be built to order " +
                     std::to_string(2 * order) + " (testing functions), got " +
                     std::to_string(basis.order()));
  }
  const int d = density.dimension();
  const int n_low = static_cast<int>(basis_count(d, order));
  const int n_high = basis.size();

  // Initial clustering: init_multiplier * M Monte-Carlo candidates with
  // NNLS-refined weights, grouped to M = start_nodes_factor * N_p clusters.
  int m = std::min(cfg.start_nodes_factor * n_low, n_high);
  const auto clustered_pool = [&](int pool_size, int clusters, std::uint64_t seed) {
    const Eigen::MatrixXd pool = sample(density, pool_size, seed);
    const Eigen::VectorXd pool_weights = solve_weights(basis, pool);
    return cluster_init(pool, pool_weights, clusters);
  };

  QuadratureRule current = clustered_pool(cfg.init_multiplier * m, m, cfg.seed);
  current.order = order;

  // Increase phase.
  BcdResult solved;
  for (int attempt = 0;; ++attempt) {
    solved = bcd_solve(basis, current, cfg);
    if (solved.converged) break;
    if (attempt >= cfg.max_increase_rounds) {
      throw RuleConstructionError(
          "quadrature construction failed after " + std::to_string(attempt) +
          " increase rounds (best l1 residual " +
          std::to_string(solved.rule.residual_l1) + ", target " +
          std::to_string(cfg.epsilon) + ")",
          solved.rule);
    }
    const int grown = std::min(m + std::max(1, (m + 9) / 10), n_high);
    const int added = grown - m;
    const std::uint64_t pool_seed = cfg.seed + static_cast<std::uint64_t>(attempt) + 1;
    if (added == 0) {
      // Already at the upper bound; restart from a fresh clustering.
      current = clustered_pool(cfg.init_multiplier * grown, grown, pool_seed);
      current.order = order;
      continue;
    }
    // Keep the best nodes found so far and append the heaviest centroids of
    // a fresh clustered pool.
    QuadratureRule fresh = clustered_pool(cfg.init_multiplier * grown, grown, pool_seed);
    std::vector<int> idx(static_cast<std::size_t>(fresh.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return fresh.weights[a] > fresh.weights[b];
    });
    QuadratureRule grown_rule;
    grown_rule.order = order;
    grown_rule.nodes.resize(grown, d);
    grown_rule.weights.resize(grown);
    grown_rule.nodes.topRows(m) = solved.rule.nodes;
    grown_rule.weights.head(m) = solved.rule.weights;
    for (int i = 0; i < added; ++i) {
      grown_rule.nodes.row(m + i) = fresh.nodes.row(idx[static_cast<std::size_t>(i)]);
      grown_rule.weights[m + i] = fresh.weights[idx[static_cast<std::size_t>(i)]];
    }
    current = grown_rule;
    m = grown;
  }
  current = solved.rule;

  // Decrease phase: drop the smallest weight, re-solve, keep while feasible.
  while (current.size() > n_low) {
    const QuadratureRule trial = drop_node(current, smallest_weight_index(current.weights));
    const BcdResult reduced = bcd_solve(basis, trial, cfg);
    if (!reduced.converged) break;
    current = reduced.rule;
  }

  validate_rule(current);
  if (current.residual_l1 > cfg.epsilon) {
    throw NumericalError("build_rule: final residual above tolerance");
  }
  return current;
}

double integrate(const QuadratureRule& rule, const Eigen::VectorXd& values) {
  if (values.size() != rule.weights.size()) {
    throw InputError("integrate: value count " + std::to_string(values.size()) +
                     " != node count " + std::to_string(rule.weights.size()));
  }
  return kernels::active_ops().dot(values.data(), rule.weights.data(),
                                   static_cast<std::size_t>(values.size()));
}

void validate_rule(const QuadratureRule& rule) {
  if (rule.order < 1) throw InputError("rule order must be >= 1");
  if (rule.nodes.rows() != rule.weights.size()) {
    throw InputError("rule nodes/weights size mismatch");
  }
  if (!rule.nodes.allFinite() || !rule.weights.allFinite()) {
    throw NumericalError("rule contains non-finite entries");
  }
  if (rule.weights.size() > 0 && rule.weights.minCoeff() < 0.0) {
    throw NumericalError("rule has a negative weight");
  }
  const double sum_defect = std::abs(rule.weights.sum() - 1.0);
  if (sum_defect > rule.residual_l1 + 1e-14) {
    throw NumericalError("rule weight sum differs from 1 by " +
                         std::to_string(sum_defect) + ", beyond its residual");
  }
  const auto m = rule.size();
  const auto lower = basis_count(rule.dimension(), rule.order);
  const auto upper = basis_count(rule.dimension(), 2 * rule.order);
  if (m < lower || m > upper) {
    throw NumericalError("rule size " + std::to_string(m) + " outside [" +
                         std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
}

}  // namespace mixquad
