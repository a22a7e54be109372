#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "linksched/topo.hpp"

namespace linksched {

enum class Direction : int { kDownlink = 0, kUplink = 1 };

struct LinkChoice {
  int user_slot = 0;
  Direction direction = Direction::kDownlink;

  int code() const { return 2 * user_slot + static_cast<int>(direction); }
  friend bool operator==(const LinkChoice&, const LinkChoice&) = default;
};

/// One active link per cell. flat_index = sum_c choice_c.code() * (2M)^c.
struct Schedule {
  std::vector<LinkChoice> choices;
  std::int64_t flat_index = 0;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// (2M)^N; throws std::overflow_error when it does not fit in int64.
std::int64_t schedule_count(int n_cells, int users_per_cell);

Schedule schedule_from_index(std::int64_t flat_index, int n_cells, int users_per_cell);
std::int64_t schedule_index(std::span<const LinkChoice> choices, int users_per_cell);

std::vector<Schedule> enumerate_schedules(int n_cells, int users_per_cell);

/// The N-link power-control instance induced by a schedule.
/// gain(i, j) is the gain from the transmitter of link j to the receiver of link i.
struct LinkProblem {
  Eigen::MatrixXd gain;
  Eigen::VectorXd weights;
  Eigen::VectorXi downlink;  // 1 = downlink, 0 = uplink
  Eigen::VectorXd noise_w;
  Eigen::VectorXd p_max_w;
  double bandwidth_hz = 1.0;
  double se_cap_bps_hz = 7.0;

  int n_links() const { return static_cast<int>(weights.size()); }
  void validate() const;
};

struct PowerAlloc {
  Eigen::VectorXd powers_w;
  Eigen::VectorXd sinr;
  Eigen::VectorXd rate_bps;
  double wsr_bps = 0.0;
};

/// Transmitter and receiver node ids of the link a cell schedules.
struct LinkEndpoints {
  int tx = 0;
  int rx = 0;
};
LinkEndpoints link_endpoints(const Topology& topology, int cell, const LinkChoice& choice);

LinkProblem build_link_problem(const Topology& topology, const Schedule& schedule);

/// SINR_i = G_ii p_i / (sum_{j != i} G_ij p_j + noise_i).
template <typename GainDerived, typename NoiseDerived, typename PowerDerived>
auto sinr(const Eigen::MatrixBase<GainDerived>& gain, const Eigen::MatrixBase<NoiseDerived>& noise,
          const Eigen::MatrixBase<PowerDerived>& powers) {
  using Scalar = typename PowerDerived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  // Interference from the off-diagonal terms only; subtracting the signal from
  // the total received power cancels catastrophically at high SINR.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cross = gain.template cast<Scalar>();
  cross.diagonal().setZero();
  const Vec signal = gain.diagonal().template cast<Scalar>().cwiseProduct(powers);
  return Vec(signal.cwiseQuotient(cross * powers + noise));
}

/// Sum_i w_i W log2(1 + SINR_i), without the spectral-efficiency cap.
template <typename PowerDerived>
typename PowerDerived::Scalar uncapped_wsr(const LinkProblem& problem,
                                           const Eigen::MatrixBase<PowerDerived>& powers) {
  using Scalar = typename PowerDerived::Scalar;
  const auto s = sinr(problem.gain.template cast<Scalar>(), problem.noise_w.template cast<Scalar>(), powers);
  Scalar total(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    total += Scalar(problem.weights(i)) * std::log2(Scalar(1) + s(i));
  }
  return total * Scalar(problem.bandwidth_hz);
}

/// Capped evaluation. Throws std::invalid_argument if a power leaves [0, p_max].
PowerAlloc evaluate(const LinkProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& powers_w);

/// Argmax of a schedule valuation; ties go to the lowest flat_index.
struct ScheduleChoice {
  Schedule schedule;
  double wsr_bps = 0.0;
};
ScheduleChoice best_schedule_by(const std::function<double(const Schedule&)>& evaluator,
                                std::span<const Schedule> schedules);

}  // namespace linksched
