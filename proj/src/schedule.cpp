#include "flockyap/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace flockyap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform draw in [0,1) keyed by (seed, cell, edge); independent of call order.
double edge_uniform(std::uint64_t seed, std::int64_t cell, int i, int j) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(cell) * 0xD1B54A32D192ED03ULL));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(i) << 32 ^ static_cast<std::uint64_t>(j)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Index k with t in [k*mesh, (k+1)*mesh), robust to the rounding of k*mesh.
std::int64_t cell_of(double t, double mesh) {
  auto k = static_cast<std::int64_t>(std::floor(t / mesh));
  if (static_cast<double>(k + 1) * mesh <= t)
    ++k;
  else if (static_cast<double>(k) * mesh > t)
    --k;
  return k;
}

}  // namespace

WeightSchedule WeightSchedule::constant(WeightMatrix m) {
  m.validate();
  WeightSchedule s;
  s.kind_ = Kind::Constant;
  s.n_ = m.n();
  s.constant_ = std::move(m);
  return s;
}

WeightSchedule WeightSchedule::periodic(std::vector<WeightMatrix> slots, double mesh) {
  if (slots.empty()) throw std::invalid_argument("WeightSchedule: empty slot list");
  if (!(mesh > 0.0)) throw std::invalid_argument("WeightSchedule: mesh must be positive");
  for (const auto& m : slots) {
    m.validate();
    if (m.n() != slots.front().n())
      throw std::invalid_argument("WeightSchedule: inconsistent slot sizes");
  }
  WeightSchedule s;
  s.kind_ = Kind::PiecewisePeriodic;
  s.n_ = slots.front().n();
  s.mesh_ = mesh;
  s.slots_ = std::move(slots);
  return s;
}

WeightSchedule WeightSchedule::bernoulli(WeightMatrix base, double p, double mesh,
                                         std::uint64_t seed, double horizon) {
  base.validate();
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("WeightSchedule: p outside [0,1]");
  if (!(mesh > 0.0)) throw std::invalid_argument("WeightSchedule: mesh must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("WeightSchedule: horizon must be positive");
  WeightSchedule s;
  s.kind_ = Kind::Bernoulli;
  s.n_ = base.n();
  s.mesh_ = mesh;
  s.horizon_ = horizon;
  s.base_ = std::move(base);
  s.p_ = p;
  s.seed_ = seed;
  return s;
}

WeightSchedule WeightSchedule::table(std::vector<double> t_starts,
                                     std::vector<WeightMatrix> matrices, double horizon) {
  if (t_starts.size() != matrices.size() || t_starts.empty())
    throw std::invalid_argument("WeightSchedule: table size mismatch");
  if (t_starts.front() != 0.0)
    throw std::invalid_argument("WeightSchedule: table must start at t = 0");
  for (std::size_t k = 1; k < t_starts.size(); ++k)
    if (!(t_starts[k] > t_starts[k - 1]))
      throw std::invalid_argument("WeightSchedule: table times must increase");
  if (!(horizon > t_starts.back()))
    throw std::invalid_argument("WeightSchedule: horizon must exceed the last block start");
  for (const auto& m : matrices) {
    m.validate();
    if (m.n() != matrices.front().n())
      throw std::invalid_argument("WeightSchedule: inconsistent table sizes");
  }
  WeightSchedule s;
  s.kind_ = Kind::Table;
  s.n_ = matrices.front().n();
  s.horizon_ = horizon;
  s.slots_ = std::move(matrices);
  s.t_starts_ = std::move(t_starts);
  return s;
}

WeightSchedule WeightSchedule::example_n4(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("example_n4: tau must be positive");
  std::vector<WeightMatrix> slots(6, WeightMatrix::zero(4));
  auto edge = [](WeightMatrix& w, int i, int j) { w.entries(i, j) = w.entries(j, i) = 1.0; };
  edge(slots[1], 0, 3);
  edge(slots[3], 2, 3);
  edge(slots[5], 1, 2);
  edge(slots[5], 1, 3);
  return periodic(std::move(slots), tau / 6.0);
}

WeightMatrix WeightSchedule::sample(double t) const {
  if (t < 0.0) throw std::invalid_argument("WeightSchedule: negative time");
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::PiecewisePeriodic: {
      const auto slot = cell_of(t, mesh_) % static_cast<std::int64_t>(slots_.size());
      return slots_[static_cast<std::size_t>(slot)];
    }
    case Kind::Bernoulli: {
      const auto cell = cell_of(t, mesh_);
      WeightMatrix w = WeightMatrix::zero(n_);
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) {
          if (base_.entries(i, j) == 0.0) continue;
          if (edge_uniform(seed_, cell, i, j) < p_)
            w.entries(i, j) = w.entries(j, i) = base_.entries(i, j);
        }
      return w;
    }
    case Kind::Table: {
      if (t >= horizon_) throw std::out_of_range("WeightSchedule: time beyond table horizon");
      const auto it = std::upper_bound(t_starts_.begin(), t_starts_.end(), t);
      return slots_[static_cast<std::size_t>(it - t_starts_.begin()) - 1];
    }
  }
  return constant_;
}

std::vector<double> WeightSchedule::breakpoints(double t0, double t1) const {
  if (t0 > t1) throw std::invalid_argument("WeightSchedule: t0 > t1");
  std::vector<double> out;
  if (kind_ == Kind::Constant) return out;
  if (kind_ == Kind::Table) {
    for (double b : t_starts_)
      if (b > t0 && b < t1) out.push_back(b);
    return out;
  }
  for (auto k = cell_of(t0, mesh_) + 1;; ++k) {
    const double b = static_cast<double>(k) * mesh_;
    if (b >= t1) break;
    if (b > t0) out.push_back(b);
  }
  return out;
}

double WeightSchedule::period() const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;  // time-invariant
    case Kind::PiecewisePeriodic:
      return mesh_ * static_cast<double>(slots_.size());
    default:
      throw std::logic_error("WeightSchedule: aperiodic schedule has no period");
  }
}

WeightSchedule schedule_from_csv(const std::string& path, int n_agents, double horizon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("schedule_from_csv: cannot open " + path);
  std::map<double, WeightMatrix> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, w;
    int i, j;
    if (!(row >> t >> i >> j >> w))
      throw std::runtime_error("schedule_from_csv: malformed row: " + line);
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents || i == j)
      throw std::runtime_error("schedule_from_csv: bad agent pair in row: " + line);
    auto [it, inserted] = blocks.try_emplace(t, WeightMatrix::zero(n_agents));
    it->second.entries(i, j) = it->second.entries(j, i) = w;
  }
  if (blocks.empty()) throw std::runtime_error("schedule_from_csv: no rows in " + path);
  std::vector<double> t_starts;
  std::vector<WeightMatrix> mats;
  for (auto& [t, m] : blocks) {
    t_starts.push_back(t);
    mats.push_back(std::move(m));
  }
  return WeightSchedule::table(std::move(t_starts), std::move(mats), horizon);
}

WeightMatrix window_average_weights(const WeightSchedule& schedule, double t, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("window_average: tau must be positive");
  if (t < 0.0) throw std::invalid_argument("window_average: negative window start");
  if (t + tau > schedule.horizon() * (1.0 + 1e-12))
    throw std::out_of_range("window_average: window exceeds schedule horizon");
  std::vector<double> nodes = schedule.breakpoints(t, t + tau);
  nodes.insert(nodes.begin(), t);
  nodes.push_back(t + tau);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(schedule.n_agents(), schedule.n_agents());
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
    acc += (nodes[k + 1] - nodes[k]) * schedule.sample(nodes[k]).entries;
  // entries stay in [0,1]; clamp rounding residue so validation holds
  acc = (acc / tau).cwiseMax(0.0).cwiseMin(1.0);
  acc.diagonal().setZero();
  return {std::move(acc)};
}

LaplacianOperator window_average_laplacian(const WeightSchedule& schedule, double t,
                                           double tau) {
  return laplacian_from_weights(window_average_weights(schedule, t, tau));
}

}  // namespace flockyap
