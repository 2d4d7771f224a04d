#include "flockyap/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <thread>

namespace flockyap {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json rate_fit_json(const Trajectory& traj, bool use_v) {
  std::vector<double> vals;
  vals.reserve(traj.stats.size());
  for (const auto& st : traj.stats) vals.push_back(use_v ? st.V.value_or(0.0) : st.X);
  try {
    const RateFit fit = fit_exponential_rate(traj.times, vals);
    return {{"rate", fit.rate}, {"r_squared", fit.r_squared}};
  } catch (const std::exception& e) {
    return {{"error", e.what()}};
  }
}

json certificate_json(const PeCertificate& c) {
  return {{"tau", c.tau},
          {"mu", c.mu},
          {"convention",
           c.convention == LaplacianConvention::Normalized ? "normalized" : "unnormalized"},
          {"holds", c.holds},
          {"worst_offset", c.worst_offset},
          {"worst_lambda2", c.worst_lambda2},
          {"t_grid_spec", c.t_grid_spec},
          {"exact", c.exact},
          {"horizon", c.horizon}};
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "# flockyap-trajectory v1\n";
  out << "t,X,V,mean_drift,v_monotone_residual\n";
  for (int k = 0; k < traj.n_samples(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    out << fmt(traj.times[i]) << ',' << fmt(traj.stats[i].X) << ','
        << fmt(traj.stats[i].V.value_or(0.0)) << ',' << fmt(traj.monitors[i].mean_drift)
        << ',' << fmt(traj.monitors[i].v_monotone_residual) << '\n';
  }
}

void write_states_csv(const Trajectory& traj, const std::filesystem::path& path) {
  if (!traj.states_recorded)
    throw std::invalid_argument("write_states_csv: trajectory has no recorded states");
  std::ofstream out(path);
  out << "# flockyap-states v1\n";
  const bool second = traj.order == SystemOrder::Second;
  const int d = static_cast<int>(traj.positions.front().cols());
  out << "t,agent";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  if (second)
    for (int j = 0; j < d; ++j) out << ",v" << j;
  out << '\n';
  for (int k = 0; k < traj.n_samples(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const auto& x = traj.positions[i];
    for (Eigen::Index a = 0; a < x.rows(); ++a) {
      out << fmt(traj.times[i]) << ',' << a;
      for (Eigen::Index j = 0; j < x.cols(); ++j) out << ',' << fmt(x(a, j));
      if (second)
        for (Eigen::Index j = 0; j < x.cols(); ++j) out << ',' << fmt(traj.velocities[i](a, j));
      out << '\n';
    }
  }
}

SimulateResult run_simulate(const Scenario& scenario, const std::filesystem::path& out_dir,
                            bool dump_states) {
  SimulateResult res;
  Trajectory traj;
  Kernel kernel = Kernel::constant(1.0);
  try {
    kernel = kernel_from_json(scenario.kernel_spec);
    const WeightSchedule schedule = schedule_from_json(scenario.schedule_spec, scenario.n_agents);
    auto [x0, v0] = make_initial_state(scenario);
    IntegrateOptions opt;
    opt.t_end = scenario.t_end;
    opt.step = scenario.step;
    opt.record_stride = scenario.record_stride;
    opt.record_states = scenario.record_states;
    opt.v_floor = scenario.v_floor;
    traj = integrate(scenario.order, x0, v0, schedule, kernel, opt);
  } catch (const IntegrationError& e) {
    res.exit_code = kExitNumericalBlowup;
    res.message = e.what();
    return res;
  } catch (const std::exception& e) {
    res.exit_code = kExitBadConfig;
    res.message = e.what();
    return res;
  }

  std::filesystem::create_directories(out_dir);
  write_trajectory_csv(traj, out_dir / "trajectory.csv");
  if (dump_states && traj.states_recorded) write_states_csv(traj, out_dir / "states.csv");

  json rep;
  rep["scenario"] = scenario.name;
  rep["t_final"] = traj.t_final();
  rep["stopped_early"] = traj.stopped_early;
  rep["X0"] = traj.stats.front().X;
  rep["X_end"] = traj.stats.back().X;
  if (scenario.order == SystemOrder::Second) {
    rep["V0"] = traj.stats.front().V.value_or(0.0);
    rep["V_end"] = traj.stats.back().V.value_or(0.0);
    const FlockingReport fr = detect_flocking(traj, scenario.flocking_vtol);
    rep["flocking"] = {{"v_tol", scenario.flocking_vtol},
                       {"x_sup", fr.x_sup},
                       {"v_time", fr.v_time ? json(*fr.v_time) : json(nullptr)}};
    rep["rate_fit_V"] = rate_fit_json(traj, true);
  } else {
    const auto t = detect_consensus(traj, scenario.consensus_tol);
    rep["consensus"] = {{"tol", scenario.consensus_tol},
                        {"time", t ? json(*t) : json(nullptr)}};
    rep["rate_fit_X"] = rate_fit_json(traj, false);
  }
  double max_mean_drift = 0.0, max_v_up = 0.0;
  for (const auto& m : traj.monitors) {
    max_mean_drift = std::max(max_mean_drift, m.mean_drift);
    max_v_up = std::max(max_v_up, m.v_monotone_residual);
  }
  rep["monitors"] = {{"max_mean_drift", max_mean_drift},
                     {"max_v_monotone_residual", max_v_up}};
  write_json(rep, out_dir / "report.json");
  res.report = std::move(rep);
  return res;
}

VerifyPeResult run_verify_pe(const Scenario& scenario, const std::vector<double>& tau_grid,
                             const std::filesystem::path& out_dir) {
  VerifyPeResult res;
  try {
    const WeightSchedule schedule = schedule_from_json(scenario.schedule_spec, scenario.n_agents);
    std::vector<double> taus = tau_grid.empty() ? std::vector<double>{scenario.tau} : tau_grid;
    const double tau_max = *std::max_element(taus.begin(), taus.end());
    const double horizon =
        std::min(schedule.horizon(), std::max(scenario.t_end, tau_max));
    json certs = json::array();
    bool all_hold = true;
    for (double tau : taus) {
      const PeCertificate c = check_pe(schedule, tau, scenario.mu, horizon);
      all_hold = all_hold && c.holds;
      certs.push_back(certificate_json(c));
    }
    res.report = {{"scenario", scenario.name}, {"certificates", std::move(certs)},
                  {"all_hold", all_hold}};
    res.exit_code = all_hold ? kExitOk : kExitCertificateFailed;
  } catch (const std::exception& e) {
    res.exit_code = kExitBadConfig;
    res.report = {{"error", e.what()}};
  }
  std::filesystem::create_directories(out_dir);
  write_json(res.report, out_dir / "pe_certificates.json");
  return res;
}

MonitorResult run_monitor_lyapunov(const Scenario& scenario,
                                   const std::filesystem::path& out_dir) {
  MonitorResult res;
  try {
    const Kernel kernel = kernel_from_json(scenario.kernel_spec);
    const WeightSchedule schedule = schedule_from_json(scenario.schedule_spec, scenario.n_agents);
    auto [x0, v0] = make_initial_state(scenario);
    IntegrateOptions opt;
    opt.t_end = scenario.t_end;
    opt.step = scenario.step;
    Trajectory traj = integrate(scenario.order, x0, v0, schedule, kernel, opt);

    const LyapunovConstants consts =
        compute_constants(traj, kernel, scenario.tau, scenario.mu);
    LyapunovMonitor mon(traj, schedule, kernel, consts);
    json rep;
    rep["scenario"] = scenario.name;
    rep["constants"] = {{"R", consts.R},         {"C_R", consts.C_R},
                        {"C0", consts.C0},       {"c", consts.c},
                        {"tau", consts.tau},     {"mu", consts.mu},
                        {"eps", consts.eps_const}, {"lambda", consts.lambda_const},
                        {"alpha", consts.alpha}};
    if (scenario.order == SystemOrder::First) {
      const ResidualReport rr = mon.check_consensus_dissipation();
      rep["consensus_dissipation"] = {{"max_residual", rr.max_residual},
                                      {"at_time", rr.at_time},
                                      {"tolerance", rr.tolerance},
                                      {"n_samples", rr.n_samples},
                                      {"ok", rr.ok}};
    } else {
      const FlockingTuning tuning =
          FlockingTuning::from(consts.c, consts.tau, scenario.monitor_eps0);
      const ResidualReport rr = mon.check_flocking_dissipation(tuning);
      const WindowInequalityReport lem = mon.check_window_inequality(1000, 2024);
      const FlockingBound bound = mon.flocking_bound(tuning);
      rep["flocking_dissipation"] = {{"max_residual", rr.max_residual},
                                     {"at_time", rr.at_time},
                                     {"tolerance", rr.tolerance},
                                     {"n_samples", rr.n_samples},
                                     {"note", rr.note},
                                     {"ok", rr.ok}};
      rep["window_inequality"] = {{"worst_margin", lem.worst_margin},
                                  {"at_time", lem.at_time},
                                  {"n_vectors", lem.n_vectors},
                                  {"ok", lem.ok}};
      rep["flocking_bound"] = {{"eps0", bound.eps0},
                               {"T", bound.T},
                               {"x_m", bound.x_m},
                               {"v_bound_at_T", bound.v_bound_at_T},
                               {"prefactor", bound.prefactor},
                               {"exponent", bound.exponent},
                               {"A", {bound.A1, bound.A2, bound.A3, bound.A4}},
                               {"C", {bound.C1, bound.C2, bound.C3, bound.C4}},
                               {"asymptotic_power", bound.asymptotic_power},
                               {"asymptotic_bound", bound.asymptotic_bound}};
      rep["tuning"] = {{"eps0", tuning.eps0},     {"T_eps0", tuning.T_eps0},
                       {"alpha1", tuning.alpha1}, {"beta1", tuning.beta1},
                       {"alpha2", tuning.alpha2}, {"beta2", tuning.beta2},
                       {"alpha3", tuning.alpha3}, {"beta3", tuning.beta3}};
    }
    res.report = std::move(rep);
  } catch (const IntegrationError& e) {
    res.exit_code = kExitNumericalBlowup;
    res.report = {{"error", e.what()}};
  } catch (const std::exception& e) {
    res.exit_code = kExitBadConfig;
    res.report = {{"error", e.what()}};
  }
  std::filesystem::create_directories(out_dir);
  write_json(res.report, out_dir / "lyapunov_report.json");
  return res;
}

SweepResult run_sweep(const Scenario& base, const std::string& field_pointer,
                      const std::vector<double>& values, int threads,
                      const std::filesystem::path& out_dir) {
  SweepResult res;
  json base_doc = scenario_to_json(base);
  std::vector<json> rows(values.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= values.size()) return;
      json row;
      row["value"] = values[k];
      try {
        json doc = base_doc;
        doc[json::json_pointer(field_pointer)] = values[k];
        const Scenario sc = scenario_from_json(doc);
        const Kernel kernel = kernel_from_json(sc.kernel_spec);
        const WeightSchedule schedule = schedule_from_json(sc.schedule_spec, sc.n_agents);
        auto [x0, v0] = make_initial_state(sc);
        IntegrateOptions opt;
        opt.t_end = sc.t_end;
        opt.step = sc.step;
        opt.record_stride = sc.record_stride;
        opt.record_states = sc.record_states;
        opt.v_floor = sc.v_floor;
        const Trajectory traj = integrate(sc.order, x0, v0, schedule, kernel, opt);
        row["X_end"] = traj.stats.back().X;
        if (sc.order == SystemOrder::Second) {
          row["V_end"] = traj.stats.back().V.value_or(0.0);
          const FlockingReport fr = detect_flocking(traj, sc.flocking_vtol);
          row["x_sup"] = fr.x_sup;
          row["v_time"] = fr.v_time ? json(*fr.v_time) : json(nullptr);
          if (traj.states_recorded) {
            const LyapunovConstants consts = compute_constants(traj, kernel, sc.tau, sc.mu);
            const LyapunovMonitor mon(traj, schedule, kernel, consts);
            const FlockingTuning tuning =
                FlockingTuning::from(consts.c, consts.tau, sc.monitor_eps0);
            const FlockingBound b = mon.flocking_bound(tuning);
            row["v_bound_at_T"] = b.v_bound_at_T;
            row["T_eps0"] = b.T;
            row["x_m"] = b.x_m;
          }
        } else {
          const auto t = detect_consensus(traj, sc.consensus_tol);
          row["consensus_time"] = t ? json(*t) : json(nullptr);
          std::vector<double> xs;
          for (const auto& st : traj.stats) xs.push_back(st.X);
          try {
            const RateFit fit = fit_exponential_rate(traj.times, xs);
            row["rate"] = fit.rate;
            row["r_squared"] = fit.r_squared;
          } catch (const std::exception&) {
          }
        }
        row["ok"] = true;
      } catch (const std::exception& e) {
        row["ok"] = false;
        row["error"] = e.what();
      }
      rows[k] = std::move(row);
    }
  };

  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  res.table = {{"scenario", base.name},
               {"axis", field_pointer},
               {"rows", json(rows)}};
  std::filesystem::create_directories(out_dir);
  write_json(res.table, out_dir / "sweep.json");
  return res;
}

}  // namespace flockyap
