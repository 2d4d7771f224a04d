#ifndef FLOCKYAP_RUNNER_HPP
#define FLOCKYAP_RUNNER_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "flockyap/lyapunov.hpp"
#include "flockyap/pe.hpp"
#include "flockyap/scenario.hpp"

namespace flockyap {

// Exit codes shared by the library entry points and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCertificateFailed = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitNumericalBlowup = 3;

struct SimulateResult {
  int exit_code = kExitOk;
  std::string message;
  json report;
};

// Integrates the scenario and writes trajectory.csv, report.json and
// (optionally) states.csv under out_dir. Convergence verdicts are report
// content; only config errors (2) and numerical blow-up (3) are failures.
SimulateResult run_simulate(const Scenario& scenario, const std::filesystem::path& out_dir,
                            bool dump_states = false);

// Emits pe_certificates.json; exit 0 iff every requested certificate holds.
struct VerifyPeResult {
  int exit_code = kExitOk;
  json report;
};
VerifyPeResult run_verify_pe(const Scenario& scenario, const std::vector<double>& tau_grid,
                             const std::filesystem::path& out_dir);

// Recomputes the Lyapunov monitors for a scenario (re-running the
// integration) and writes lyapunov_report.json.
struct MonitorResult {
  int exit_code = kExitOk;
  json report;
};
MonitorResult run_monitor_lyapunov(const Scenario& scenario,
                                   const std::filesystem::path& out_dir);

// Sweeps one numeric scenario field (JSON pointer, e.g. "/kernel/beta" or
// "/monitor_eps0") over the given values. Rows run in a worker pool and are
// reported in axis order; a failed row is recorded, not fatal.
struct SweepResult {
  int exit_code = kExitOk;
  json table;
};
SweepResult run_sweep(const Scenario& base, const std::string& field_pointer,
                      const std::vector<double>& values, int threads,
                      const std::filesystem::path& out_dir);

// Trajectory CSV ("# flockyap-trajectory v1"): t, X, V, mean_drift,
// v_monotone_residual.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
// Full-state dump ("# flockyap-states v1"): one row per agent per sample.
void write_states_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace flockyap

#endif
