#ifndef FLOCKYAP_SCENARIO_HPP
#define FLOCKYAP_SCENARIO_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "flockyap/kernel.hpp"
#include "flockyap/schedule.hpp"
#include "flockyap/simulate.hpp"

namespace flockyap {

using json = nlohmann::json;

// One simulation scenario, serialized as a single JSON document. Random
// initial data is drawn from a uniform box with a mandatory seed, then
// centered, and optionally rescaled to exact X(0) / V(0) targets.
struct InitialSpec {
  enum class Kind { Inline, Random };
  Kind kind = Kind::Random;
  // inline
  AgentMatrix positions;
  std::optional<AgentMatrix> velocities;
  // random
  std::uint64_t seed = 1;
  double pos_halfwidth = 1.0;
  double vel_halfwidth = 1.0;
  std::optional<double> normalize_X;
  std::optional<double> normalize_V;
};

struct Scenario {
  std::string name = "scenario";
  SystemOrder order = SystemOrder::First;
  int n_agents = 2;
  int dim = 1;
  InitialSpec initial;
  json kernel_spec;
  json schedule_spec;
  double tau = 1.0;
  double mu = 0.1;
  double t_end = 1.0;
  double step = 1e-3;
  double consensus_tol = 1e-6;
  double flocking_vtol = 1e-4;
  double monitor_eps0 = 0.1;
  int record_stride = 1;
  bool record_states = true;
  double v_floor = 0.0;
};

Scenario scenario_from_json(const json& doc);
json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

Kernel kernel_from_json(const json& spec);
json kernel_to_json(const Kernel& k);
WeightSchedule schedule_from_json(const json& spec, int n_agents);

// Draws / returns the (centered) initial data for a scenario.
std::pair<AgentMatrix, std::optional<AgentMatrix>> make_initial_state(const Scenario& s);

}  // namespace flockyap

#endif
