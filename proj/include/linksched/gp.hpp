#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "linksched/linkmodel.hpp"

namespace linksched {

enum class GpInit { kFullPower, kGiven };

struct GpConfig {
  int outer_max_iters = 50;
  double outer_tol = 1e-4;    // relative WSR improvement
  double trust_factor = 2.0;  // p^k / a <= p <= a p^k; +inf disables the trust region
  int inner_max_iters = 1000;
  double inner_grad_tol = 1e-8;
  double p_floor_frac = 1e-8;
  GpInit init = GpInit::kFullPower;

  void validate() const;
};

struct GpResult {
  PowerAlloc alloc;
  int outer_iters = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // uncapped WSR, starting at the initial point
};

/// Successive geometric programming for weighted sum-rate maximization.
///
/// Each outer round condenses the received-power posynomial of every link at
/// the current point into a monomial (arithmetic-geometric mean bound) and
/// minimizes prod_i (interference_i / condensed_received_i)^{w_i} over the
/// power box intersected with a multiplicative trust region. The condensed
/// problem is convex in log-powers and is solved by `inner_solve`. The
/// surrogate upper-bounds the true objective and is tight at the expansion
/// point, so the uncapped WSR never decreases across rounds.
///
/// `initial_powers` is used when config.init == GpInit::kGiven; it is clamped
/// into [p_floor, p_max].
GpResult wsr_maximize(const LinkProblem& problem, const GpConfig& config = {},
                      const std::optional<Eigen::VectorXd>& initial_powers = std::nullopt);

/// theta_t = term_t / sum(term). Throws std::invalid_argument on a non-positive term.
Eigen::VectorXd condense_posynomial(const Eigen::Ref<const Eigen::VectorXd>& term_values);

/// Value of the condensed monomial prod_t (term_t / theta_t)^theta_t for new
/// term values, given weights from `condense_posynomial`.
double condensed_monomial(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Eigen::Ref<const Eigen::VectorXd>& term_values);

/// Smooth objective: returns f(x) and writes the gradient into `grad`.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct InnerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double projected_grad_norm = 0.0;
};

/// Projected gradient descent on a box with Armijo backtracking and
/// Barzilai-Borwein trial steps. Accepted steps never increase f.
InnerResult inner_solve(const SmoothObjective& objective, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper, const Eigen::VectorXd& x0, int max_iters,
                        double grad_tol);

/// x - P(x - grad): zero exactly at box-constrained stationary points.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace linksched
