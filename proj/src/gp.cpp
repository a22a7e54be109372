#include "linksched/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace linksched {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Condensed log-domain objective for one outer round. theta(i, j) weighs the
// term G_ij p_j of link i's received power; the noise term only contributes a
// constant and is dropped.
struct CondensedObjective {
  const LinkProblem& problem;
  Eigen::MatrixXd theta;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const Eigen::Index n = x.size();
    const Eigen::VectorXd p = x.array().exp();
    grad = Eigen::VectorXd::Zero(n);
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = problem.weights(i);
      if (w == 0.0) continue;
      double interference = problem.noise_w(i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) interference += problem.gain(i, j) * p(j);
      }
      f += w * (std::log(interference) - theta.row(i).dot(x));
      for (Eigen::Index j = 0; j < n; ++j) {
        const double share = j == i ? 0.0 : problem.gain(i, j) * p(j) / interference;
        grad(j) += w * (share - theta(i, j));
      }
    }
    return f;
  }
};

}  // namespace

void GpConfig::validate() const {
  if (outer_max_iters < 1) throw std::invalid_argument("GpConfig: outer_max_iters must be >= 1");
  if (!(outer_tol > 0)) throw std::invalid_argument("GpConfig: outer_tol must be > 0");
  if (!(trust_factor > 1)) throw std::invalid_argument("GpConfig: trust_factor must be > 1");
  if (inner_max_iters < 1) throw std::invalid_argument("GpConfig: inner_max_iters must be >= 1");
  if (!(inner_grad_tol > 0)) throw std::invalid_argument("GpConfig: inner_grad_tol must be > 0");
  if (!(p_floor_frac > 0 && p_floor_frac < 1)) {
    throw std::invalid_argument("GpConfig: p_floor_frac must lie in (0, 1)");
  }
}

Eigen::VectorXd condense_posynomial(const Eigen::Ref<const Eigen::VectorXd>& term_values) {
  if (term_values.size() == 0) throw std::invalid_argument("condense_posynomial: no terms");
  if (!(term_values.array() > 0).all() || !term_values.allFinite()) {
    throw std::invalid_argument("condense_posynomial: terms must be positive and finite");
  }
  return term_values / term_values.sum();
}

double condensed_monomial(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Eigen::Ref<const Eigen::VectorXd>& term_values) {
  double log_value = 0.0;
  for (Eigen::Index t = 0; t < theta.size(); ++t) {
    if (theta(t) > 0) log_value += theta(t) * (std::log(term_values(t)) - std::log(theta(t)));
  }
  return std::exp(log_value);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return x - clamp_box(x - grad, lower, upper);
}

InnerResult inner_solve(const SmoothObjective& objective, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper, const Eigen::VectorXd& x0, int max_iters,
                        double grad_tol) {
  if (lower.size() != x0.size() || upper.size() != x0.size()) {
    throw std::invalid_argument("inner_solve: bound dimensions differ from x0");
  }
  if (!lower.allFinite() || !upper.allFinite() || (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("inner_solve: bounds must be finite with lower <= upper");
  }
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;

  InnerResult r;
  r.x = clamp_box(x0, lower, upper);
  Eigen::VectorXd g;
  r.value = objective(r.x, g);
  double step = 1.0;
  Eigen::VectorXd xn;
  Eigen::VectorXd gn;
  for (r.iterations = 0; r.iterations < max_iters; ++r.iterations) {
    r.projected_grad_norm = projected_gradient(r.x, g, lower, upper).norm();
    if (r.projected_grad_norm <= grad_tol) {
      r.converged = true;
      return r;
    }
    double fn = 0.0;
    double t = step;
    bool accepted = false;
    while (t >= kMinStep) {
      xn = clamp_box(r.x - t * g, lower, upper);
      fn = objective(xn, gn);
      if (fn <= r.value + kArmijo * g.dot(xn - r.x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return r;  // stalled at working precision
    const Eigen::VectorXd s = xn - r.x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    step = sy > 0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : std::min(2.0 * t, 1e10);
    r.x = xn;
    r.value = fn;
    g = gn;
  }
  r.projected_grad_norm = projected_gradient(r.x, g, lower, upper).norm();
  r.converged = r.projected_grad_norm <= grad_tol;
  return r;
}

GpResult wsr_maximize(const LinkProblem& problem, const GpConfig& config,
                      const std::optional<Eigen::VectorXd>& initial_powers) {
  config.validate();
  if (problem.weights.size() == 0) throw std::invalid_argument("wsr_maximize: problem has no links");
  problem.validate();
  const Eigen::Index n = problem.weights.size();

  const Eigen::VectorXd p_floor = config.p_floor_frac * problem.p_max_w;
  Eigen::VectorXd p = problem.p_max_w;
  if (config.init == GpInit::kGiven) {
    if (!initial_powers || initial_powers->size() != n) {
      throw std::invalid_argument("wsr_maximize: GIVEN init needs an initial power vector of length N");
    }
    p = clamp_box(*initial_powers, p_floor, problem.p_max_w);
  }
  const Eigen::VectorXd log_floor = p_floor.array().log();
  const Eigen::VectorXd log_max = problem.p_max_w.array().log();
  const double log_trust = std::log(config.trust_factor);

  GpResult result;
  double wsr = uncapped_wsr(problem, p);
  result.objective_trace.push_back(wsr);
  Eigen::VectorXd x = p.array().log();

  CondensedObjective objective{problem, Eigen::MatrixXd(n, n)};
  Eigen::VectorXd terms(n + 1);
  for (int k = 1; k <= config.outer_max_iters; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      terms.head(n) = problem.gain.row(i).transpose().cwiseProduct(p);
      terms(n) = problem.noise_w(i);
      objective.theta.row(i) = condense_posynomial(terms).head(n).transpose();
    }
    Eigen::VectorXd lo = log_floor;
    Eigen::VectorXd hi = log_max;
    if (std::isfinite(log_trust)) {
      lo = lo.cwiseMax((x.array() - log_trust).matrix());
      hi = hi.cwiseMin((x.array() + log_trust).matrix());
    }
    const InnerResult inner = inner_solve(objective, lo, hi, x, config.inner_max_iters, config.inner_grad_tol);

    const Eigen::VectorXd p_next = clamp_box(inner.x.array().exp().matrix(), p_floor, problem.p_max_w);
    const double wsr_next = uncapped_wsr(problem, p_next);
    result.objective_trace.push_back(wsr_next);
    result.outer_iters = k;
    const double gain = (wsr_next - wsr) / std::max(std::abs(wsr), std::numeric_limits<double>::min());
    if (wsr_next >= wsr) {
      p = p_next;
      x = inner.x;
      wsr = wsr_next;
    }
    if (gain < config.outer_tol) {
      result.converged = true;
      break;
    }
  }
  result.alloc = evaluate(problem, p);
  return result;
}

}  // namespace linksched
