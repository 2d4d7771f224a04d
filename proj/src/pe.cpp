#include "flockyap/pe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace flockyap {

namespace {

double window_lambda2(const WeightSchedule& s, double t, double tau,
                      LaplacianConvention conv) {
  return algebraic_connectivity(window_average_laplacian(s, t, tau), conv);
}

// Window starts for the exhaustive periodic reduction: every residue where
// either window edge crosses a breakpoint, plus segment midpoints.
std::vector<double> periodic_offsets(const WeightSchedule& s, double tau) {
  const double period = s.period();
  if (period == 0.0) return {0.0};  // constant schedule
  std::set<double> residues{0.0};
  std::vector<double> bps = s.breakpoints(0.0, period);
  bps.push_back(period);
  for (double b : bps) {
    double r0 = std::fmod(b, period);
    double r1 = std::fmod(b - tau, period);
    if (r0 < 0.0) r0 += period;
    if (r1 < 0.0) r1 += period;
    residues.insert(r0);
    residues.insert(r1);
  }
  std::vector<double> offsets(residues.begin(), residues.end());
  const std::size_t n_end = offsets.size();
  for (std::size_t k = 0; k + 1 < n_end; ++k)
    offsets.push_back(0.5 * (offsets[k] + offsets[k + 1]));
  offsets.push_back(0.5 * (offsets[n_end - 1] + period));
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

std::vector<double> sampled_offsets(const WeightSchedule& s, double tau, double horizon,
                                    int n_samples) {
  const double t_max = horizon - tau;
  if (t_max < 0.0) throw std::invalid_argument("pe: horizon shorter than tau");
  std::vector<double> offsets;
  for (int k = 0; k < n_samples; ++k)
    offsets.push_back(t_max * static_cast<double>(k) / std::max(1, n_samples - 1));
  for (double b : s.breakpoints(0.0, t_max)) offsets.push_back(b);
  offsets.push_back(t_max);
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
  return offsets;
}

}  // namespace

PeCertificate check_pe(const WeightSchedule& schedule, double tau, double mu,
                       double horizon, int offset_samples, LaplacianConvention convention) {
  if (!(tau > 0.0)) throw std::invalid_argument("check_pe: tau must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("check_pe: mu must lie in (0,1]");
  if (horizon < tau) throw std::invalid_argument("check_pe: horizon shorter than tau");

  PeCertificate cert;
  cert.tau = tau;
  cert.mu = mu;
  cert.convention = convention;
  cert.horizon = std::min(horizon, schedule.horizon());

  std::vector<double> offsets;
  std::ostringstream spec;
  if (schedule.is_periodic()) {
    offsets = periodic_offsets(schedule, tau);
    cert.exact = true;
    spec << "exhaustive breakpoint residues + segment midpoints over one period ("
         << offsets.size() << " offsets)";
  } else {
    if (cert.horizon < tau) throw std::invalid_argument("check_pe: horizon shorter than tau");
    offsets = sampled_offsets(schedule, tau, cert.horizon, offset_samples);
    cert.exact = false;
    spec << "uniform grid + breakpoints on [0, " << cert.horizon - tau << "] ("
         << offsets.size() << " offsets)";
  }
  cert.t_grid_spec = spec.str();

  double worst = std::numeric_limits<double>::infinity();
  double worst_at = 0.0;
  for (double t : offsets) {
    const double l2 = window_lambda2(schedule, t, tau, convention);
    if (l2 < worst) {
      worst = l2;
      worst_at = t;
    }
  }

  // Concavity safeguard: in the periodic case the midpoints were already part
  // of the sweep; a midpoint strictly below both endpoints of its segment
  // would contradict concavity, and we then refuse to call the check exact.
  if (cert.exact && offsets.size() >= 3) {
    for (std::size_t k = 1; k + 1 < offsets.size(); k += 2) {
      const double mid = window_lambda2(schedule, offsets[k], tau, convention);
      const double ends = std::min(window_lambda2(schedule, offsets[k - 1], tau, convention),
                                   window_lambda2(schedule, offsets[k + 1], tau, convention));
      if (mid < ends - 1e-9) {
        cert.exact = false;
        break;
      }
    }
  }

  cert.worst_lambda2 = worst;
  cert.worst_offset = worst_at;
  // relative slack of 1e-12 absorbs eigensolver rounding at exact equality
  cert.holds = worst >= mu * (1.0 - 1e-12);
  return cert;
}

std::vector<std::pair<double, double>> estimate_pe_params(
    const WeightSchedule& schedule, const std::vector<double>& tau_grid, double horizon,
    LaplacianConvention convention) {
  if (tau_grid.empty()) throw std::invalid_argument("estimate_pe_params: empty tau grid");
  std::vector<std::pair<double, double>> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    std::vector<double> offsets = schedule.is_periodic()
                                      ? periodic_offsets(schedule, tau)
                                      : sampled_offsets(schedule, tau,
                                                        std::min(horizon, schedule.horizon()),
                                                        256);
    double worst = std::numeric_limits<double>::infinity();
    for (double t : offsets)
      worst = std::min(worst, window_lambda2(schedule, t, tau, convention));
    out.emplace_back(tau, std::clamp(worst, 0.0, 1.0));
  }
  return out;
}

SlotAverageReport check_slot_averages(const WeightSchedule& schedule, double tau, int n_slots,
                           double mu, LaplacianConvention convention) {
  if (!(tau > 0.0) || n_slots < 1)
    throw std::invalid_argument("check_slot_averages: need tau > 0 and n_slots >= 1");
  const double mesh = tau / static_cast<double>(n_slots);
  if (schedule.kind() != WeightSchedule::Kind::Constant &&
      std::abs(schedule.mesh() - mesh) > 1e-12 * tau)
    throw std::invalid_argument("check_slot_averages: schedule mesh does not equal tau/n");

  SlotAverageReport rep;
  rep.tau = tau;
  rep.n_slots = n_slots;
  rep.convention = convention;

  // One period for periodic schedules, the whole horizon otherwise.
  std::int64_t m_count;
  if (schedule.is_periodic()) {
    const double period = schedule.period();
    m_count = period == 0.0
                  ? 1
                  : static_cast<std::int64_t>(std::llround(period / mesh));
  } else {
    m_count = static_cast<std::int64_t>(std::floor(schedule.horizon() / mesh + 1e-9)) -
              n_slots + 1;
    if (m_count < 1)
      throw std::invalid_argument("check_slot_averages: horizon shorter than one window");
  }

  double min_l2 = std::numeric_limits<double>::infinity();
  std::int64_t worst_m = 0;
  for (std::int64_t m = 0; m < m_count; ++m) {
    Eigen::MatrixXd acc =
        Eigen::MatrixXd::Zero(schedule.n_agents(), schedule.n_agents());
    for (int k = 0; k < n_slots; ++k)
      acc += schedule.sample(static_cast<double>(m + k) * mesh).entries;
    WeightMatrix avg{acc / static_cast<double>(n_slots)};
    const double l2 = algebraic_connectivity(laplacian_from_weights(avg), convention);
    if (l2 < min_l2) {
      min_l2 = l2;
      worst_m = m;
    }
  }

  rep.min_lambda2 = min_l2;
  rep.hypothesis_holds = min_l2 > 0.0 && min_l2 >= mu;
  rep.implied_mu = rep.hypothesis_holds ? 0.5 * mu : 0.0;
  std::ostringstream os;
  os << "min lambda2 over " << m_count << " slot averages = " << min_l2 << " at m = "
     << worst_m;
  rep.detail = os.str();
  return rep;
}

}  // namespace flockyap
