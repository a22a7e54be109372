#include "linksched/linkmodel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace linksched {

std::int64_t schedule_count(int n_cells, int users_per_cell) {
  if (n_cells < 1 || users_per_cell < 1) {
    throw std::invalid_argument("schedule_count: n_cells and users_per_cell must be >= 1");
  }
  const std::int64_t base = 2 * static_cast<std::int64_t>(users_per_cell);
  std::int64_t total = 1;
  for (int c = 0; c < n_cells; ++c) {
    if (total > std::numeric_limits<std::int64_t>::max() / base) {
      throw std::overflow_error("schedule_count: (2M)^N exceeds the int64 index range");
    }
    total *= base;
  }
  return total;
}

Schedule schedule_from_index(std::int64_t flat_index, int n_cells, int users_per_cell) {
  const std::int64_t total = schedule_count(n_cells, users_per_cell);
  if (flat_index < 0 || flat_index >= total) {
    throw std::out_of_range("schedule_from_index: index " + std::to_string(flat_index) + " outside [0, " +
                            std::to_string(total) + ")");
  }
  const std::int64_t base = 2 * static_cast<std::int64_t>(users_per_cell);
  Schedule s;
  s.flat_index = flat_index;
  s.choices.resize(static_cast<std::size_t>(n_cells));
  std::int64_t rest = flat_index;
  for (auto& choice : s.choices) {
    const auto code = static_cast<int>(rest % base);
    rest /= base;
    choice.user_slot = code / 2;
    choice.direction = static_cast<Direction>(code % 2);
  }
  return s;
}

std::int64_t schedule_index(std::span<const LinkChoice> choices, int users_per_cell) {
  const std::int64_t base = 2 * static_cast<std::int64_t>(users_per_cell);
  std::int64_t index = 0;
  std::int64_t scale = 1;
  for (const auto& choice : choices) {
    if (choice.user_slot < 0 || choice.user_slot >= users_per_cell) {
      throw std::out_of_range("schedule_index: user_slot out of range");
    }
    index += choice.code() * scale;
    scale *= base;
  }
  return index;
}

std::vector<Schedule> enumerate_schedules(int n_cells, int users_per_cell) {
  const std::int64_t total = schedule_count(n_cells, users_per_cell);
  if (static_cast<std::uint64_t>(total) > std::vector<Schedule>().max_size()) {
    throw std::overflow_error("enumerate_schedules: schedule space too large to materialize");
  }
  std::vector<Schedule> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t k = 0; k < total; ++k) out.push_back(schedule_from_index(k, n_cells, users_per_cell));
  return out;
}

void LinkProblem::validate() const {
  const Eigen::Index n = weights.size();
  if (n < 1) throw std::invalid_argument("LinkProblem: no links");
  if (gain.rows() != n || gain.cols() != n || downlink.size() != n || noise_w.size() != n ||
      p_max_w.size() != n) {
    throw std::invalid_argument("LinkProblem: inconsistent dimensions");
  }
  if (!gain.allFinite()) throw std::invalid_argument("LinkProblem: non-finite gains");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(gain(i, i) > 0)) throw std::invalid_argument("LinkProblem: non-positive direct gain");
    if (!(noise_w(i) > 0)) throw std::invalid_argument("LinkProblem: non-positive noise");
    if (!(p_max_w(i) > 0)) throw std::invalid_argument("LinkProblem: non-positive power cap");
  }
  if ((gain.array() < 0).any()) throw std::invalid_argument("LinkProblem: negative gain");
}

LinkEndpoints link_endpoints(const Topology& topology, int cell, const LinkChoice& choice) {
  const int bs = topology.bs(cell).id;
  const int ue = topology.ue(cell, choice.user_slot).id;
  return choice.direction == Direction::kDownlink ? LinkEndpoints{bs, ue} : LinkEndpoints{ue, bs};
}

LinkProblem build_link_problem(const Topology& topology, const Schedule& schedule) {
  const int n = topology.config.n_cells;
  if (static_cast<int>(schedule.choices.size()) != n) {
    throw std::invalid_argument("build_link_problem: schedule has wrong cell count");
  }
  std::vector<LinkEndpoints> ends(static_cast<std::size_t>(n));
  LinkProblem p;
  p.gain.resize(n, n);
  p.weights.resize(n);
  p.downlink.resize(n);
  p.noise_w.resize(n);
  p.p_max_w.resize(n);
  p.bandwidth_hz = topology.config.bandwidth_hz;
  p.se_cap_bps_hz = topology.config.se_cap_bps_hz;
  for (int c = 0; c < n; ++c) {
    const LinkChoice& choice = schedule.choices[static_cast<std::size_t>(c)];
    if (choice.user_slot < 0 || choice.user_slot >= topology.config.users_per_cell) {
      throw std::out_of_range("build_link_problem: user_slot out of range");
    }
    const LinkEndpoints e = link_endpoints(topology, c, choice);
    ends[static_cast<std::size_t>(c)] = e;
    const int ue = topology.ue_index(c, choice.user_slot);
    const bool down = choice.direction == Direction::kDownlink;
    p.weights(c) = topology.weights(2 * ue + (down ? 0 : 1));
    p.downlink(c) = down ? 1 : 0;
    p.noise_w(c) = noise_power_w(topology.config, topology.nodes[static_cast<std::size_t>(e.rx)].kind);
    p.p_max_w(c) = topology.nodes[static_cast<std::size_t>(e.tx)].max_power_w;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      p.gain(i, j) = topology.gains(ends[static_cast<std::size_t>(j)].tx, ends[static_cast<std::size_t>(i)].rx);
    }
  }
  return p;
}

PowerAlloc evaluate(const LinkProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& powers_w) {
  const Eigen::Index n = problem.weights.size();
  if (powers_w.size() != n) throw std::invalid_argument("evaluate: power vector has wrong length");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(powers_w(i) >= 0.0 && powers_w(i) <= problem.p_max_w(i))) {
      throw std::invalid_argument("evaluate: power " + std::to_string(i) + " outside [0, p_max]");
    }
  }
  PowerAlloc a;
  a.powers_w = powers_w;
  a.sinr = sinr(problem.gain, problem.noise_w, powers_w);
  a.rate_bps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.rate_bps(i) = problem.bandwidth_hz * std::min(std::log2(1.0 + a.sinr(i)), problem.se_cap_bps_hz);
  }
  a.wsr_bps = problem.weights.dot(a.rate_bps);
  return a;
}

ScheduleChoice best_schedule_by(const std::function<double(const Schedule&)>& evaluator,
                                std::span<const Schedule> schedules) {
  if (schedules.empty()) throw std::invalid_argument("best_schedule_by: empty schedule sequence");
  const Schedule* best = nullptr;
  double best_wsr = 0.0;
  for (const auto& s : schedules) {
    const double v = evaluator(s);
    if (best == nullptr || v > best_wsr || (v == best_wsr && s.flat_index < best->flat_index)) {
      best = &s;
      best_wsr = v;
    }
  }
  return {*best, best_wsr};
}

}  // namespace linksched
