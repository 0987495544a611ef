#ifndef MIXQUAD_QUADRATURE_HPP
#define MIXQUAD_QUADRATURE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mixquad/basis.hpp"
#include "mixquad/density.hpp"
#include "mixquad/errors.hpp"

namespace mixquad {

// Nodes and nonnegative weights matching density-weighted integrals of the
// orthonormal basis up to order 2p within an l1 residual.
struct QuadratureRule {
  Eigen::MatrixXd nodes;    // M x d, one node per row
  Eigen::VectorXd weights;  // length M, all >= 0
  double residual_l1 = 0.0;
  int order = 0;  // the p this rule certifies

  int size() const { return static_cast<int>(weights.size()); }
  int dimension() const { return static_cast<int>(nodes.cols()); }
};

struct SolverConfig {
  double epsilon = 1e-8;       // l1 residual tolerance
  int max_bcd_iters = 500;     // outer iterations per solve
  int init_multiplier = 3;     // candidate pool factor for clustering
  int start_nodes_factor = 2;  // initial M = factor * N_p
  double gn_damping = 1e-10;   // damping floor for the node step
  std::uint64_t seed = 0;
  int max_increase_rounds = 8;  // attempt budget before giving up
};

// Thrown when the increase phase exhausts its budget; carries the best rule
// found so the caller can inspect or persist it.
class RuleConstructionError : public Error {
public:
  RuleConstructionError(const std::string& msg, QuadratureRule best)
      : Error(msg), best_rule(std::move(best)) {}
  QuadratureRule best_rule;
};

// Agglomerative weighted complete-linkage clustering: repeatedly merges the
// two clusters with the smallest (w_i + w_j) * max-linkage distance (ties
// broken on the lowest cluster index pair) until target_m clusters remain,
// then returns weighted centroids with summed weights.
QuadratureRule cluster_init(const Eigen::MatrixXd& candidates,
                            const Eigen::VectorXd& weights, int target_m);

// Nonnegative least squares min ||phi w - e1||_2 s.t. w >= 0 over the basis
// evaluation matrix at the given nodes (Lawson-Hanson active set).
Eigen::VectorXd solve_weights(const BasisSet& basis, const Eigen::MatrixXd& nodes);

// Lawson-Hanson on an explicit system; exposed for reuse and testing.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     double tol = 1e-12);

// One damped Gauss-Newton update of the nodes with the weights held fixed.
Eigen::MatrixXd gauss_newton_step(const BasisSet& basis, const QuadratureRule& rule,
                                  const SolverConfig& cfg = {});

struct BcdResult {
  QuadratureRule rule;  // best iterate seen, by l1 residual
  bool converged = false;
  int iterations = 0;
  std::vector<double> best_history;  // best-seen residual after each check
};

// Alternates the weight solve and one Gauss-Newton node step until the l1
// residual drops below cfg.epsilon or the iteration budget runs out.
BcdResult bcd_solve(const BasisSet& basis, const QuadratureRule& start,
                    const SolverConfig& cfg);

// Full pipeline: Monte-Carlo candidates, weight refinement, clustering to
// 2 N_p nodes, increase phase while the solver fails, then the decrease
// phase removing smallest-weight nodes while the tolerance holds.
// `basis` must be built to order 2p against the same density.
QuadratureRule build_rule(const BasisSet& basis, const GaussianMixture& density,
                          int order, const SolverConfig& cfg);

// sum_k values_k w_k.
double integrate(const QuadratureRule& rule, const Eigen::VectorXd& values);

// Basis evaluation matrix: phi(j, k) = Psi_j(node_k), j up to N_{up_to}.
Eigen::MatrixXd basis_matrix(const BasisSet& basis, const Eigen::MatrixXd& nodes,
                             int up_to_order);

// Structural invariants shared by construction and file import: finite
// coordinates, nonnegative weights, weight sum within residual_l1 of one,
// and N_p <= M <= N_2p. Throws on violation.
void validate_rule(const QuadratureRule& rule);

}  // namespace mixquad

#endif  // MIXQUAD_QUADRATURE_HPP
