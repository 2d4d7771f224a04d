#include "flockyap/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace flockyap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic uniform stream independent of the standard library's
// distribution implementations, so identical configs give identical bytes.
struct UniformStream {
  std::uint64_t state;
  explicit UniformStream(std::uint64_t seed) : state(seed) {}
  double next() {  // [0, 1)
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
};

AgentMatrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument("scenario: expected a non-empty array of rows");
  const auto n = rows.size();
  const auto d = rows.front().size();
  AgentMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != d) throw std::invalid_argument("scenario: ragged matrix rows");
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

json matrix_to_json(const AgentMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Kernel kernel_from_json(const json& spec) {
  const std::string kind = spec.at("kind");
  if (kind == "constant") return Kernel::constant(spec.at("value"));
  if (kind == "power_law")
    return Kernel::power_law(spec.at("K"), spec.at("sigma"), spec.at("beta"));
  if (kind == "tabulated")
    return Kernel::tabulated(spec.at("grid").get<std::vector<double>>(),
                             spec.at("values").get<std::vector<double>>(),
                             spec.value("lipschitz", 0.0));
  throw std::invalid_argument("scenario: unknown kernel kind '" + kind + "'");
}

json kernel_to_json(const Kernel& k) {
  switch (k.kind()) {
    case Kernel::Kind::Constant:
      return {{"kind", "constant"}, {"value", k.constant_value()}};
    case Kernel::Kind::PowerLaw:
      return {{"kind", "power_law"}, {"K", k.K()}, {"sigma", k.sigma()}, {"beta", k.beta()}};
    case Kernel::Kind::Tabulated:
      throw std::invalid_argument("kernel_to_json: tabulated kernels round-trip via files");
  }
  return {};
}

WeightSchedule schedule_from_json(const json& spec, int n_agents) {
  const std::string kind = spec.at("kind");
  if (kind == "constant") {
    if (spec.contains("weights"))
      return WeightSchedule::constant(WeightMatrix{matrix_from_json(spec.at("weights"))});
    return WeightSchedule::constant(WeightMatrix::complete(n_agents));
  }
  if (kind == "example_n4") return WeightSchedule::example_n4(spec.at("tau"));
  if (kind == "bernoulli") {
    WeightMatrix base = spec.contains("base")
                            ? WeightMatrix{matrix_from_json(spec.at("base"))}
                            : WeightMatrix::complete(n_agents);
    return WeightSchedule::bernoulli(std::move(base), spec.at("p"), spec.at("mesh"),
                                     spec.at("seed").get<std::uint64_t>(),
                                     spec.at("horizon"));
  }
  if (kind == "periodic") {
    std::vector<WeightMatrix> slots;
    for (const auto& s : spec.at("slots")) slots.push_back(WeightMatrix{matrix_from_json(s)});
    return WeightSchedule::periodic(std::move(slots), spec.at("mesh"));
  }
  if (kind == "table_csv")
    return schedule_from_csv(spec.at("path"), n_agents, spec.at("horizon"));
  throw std::invalid_argument("scenario: unknown schedule kind '" + kind + "'");
}

Scenario scenario_from_json(const json& doc) {
  Scenario s;
  s.name = doc.value("name", "scenario");
  const std::string order = doc.at("order");
  if (order == "first")
    s.order = SystemOrder::First;
  else if (order == "second")
    s.order = SystemOrder::Second;
  else
    throw std::invalid_argument("scenario: order must be 'first' or 'second'");
  s.n_agents = doc.at("n_agents");
  s.dim = doc.at("dim");
  if (s.n_agents < 2 || s.dim < 1)
    throw std::invalid_argument("scenario: need n_agents >= 2 and dim >= 1");

  const json& init = doc.at("initial_state");
  const std::string ikind = init.at("kind");
  if (ikind == "inline") {
    s.initial.kind = InitialSpec::Kind::Inline;
    s.initial.positions = matrix_from_json(init.at("positions"));
    if (init.contains("velocities"))
      s.initial.velocities = matrix_from_json(init.at("velocities"));
  } else if (ikind == "random") {
    s.initial.kind = InitialSpec::Kind::Random;
    s.initial.seed = init.at("seed").get<std::uint64_t>();  // seeds are mandatory
    s.initial.pos_halfwidth = init.value("pos_halfwidth", 1.0);
    s.initial.vel_halfwidth = init.value("vel_halfwidth", 1.0);
    if (init.contains("normalize_X")) s.initial.normalize_X = init.at("normalize_X").get<double>();
    if (init.contains("normalize_V")) s.initial.normalize_V = init.at("normalize_V").get<double>();
  } else {
    throw std::invalid_argument("scenario: initial_state.kind must be 'inline' or 'random'");
  }

  s.kernel_spec = doc.at("kernel");
  s.schedule_spec = doc.at("schedule");
  kernel_from_json(s.kernel_spec);                 // validate eagerly
  schedule_from_json(s.schedule_spec, s.n_agents);
  s.tau = doc.at("tau");
  s.mu = doc.at("mu");
  s.t_end = doc.at("t_end");
  s.step = doc.at("step");
  if (doc.contains("tolerances")) {
    s.consensus_tol = doc["tolerances"].value("consensus", 1e-6);
    s.flocking_vtol = doc["tolerances"].value("flocking_v", 1e-4);
  }
  s.monitor_eps0 = doc.value("monitor_eps0", 0.1);
  s.record_stride = doc.value("record_stride", 1);
  s.record_states = doc.value("record_states", true);
  s.v_floor = doc.value("v_floor", 0.0);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["order"] = s.order == SystemOrder::First ? "first" : "second";
  doc["n_agents"] = s.n_agents;
  doc["dim"] = s.dim;
  json init;
  if (s.initial.kind == InitialSpec::Kind::Inline) {
    init["kind"] = "inline";
    init["positions"] = matrix_to_json(s.initial.positions);
    if (s.initial.velocities) init["velocities"] = matrix_to_json(*s.initial.velocities);
  } else {
    init["kind"] = "random";
    init["seed"] = s.initial.seed;
    init["pos_halfwidth"] = s.initial.pos_halfwidth;
    init["vel_halfwidth"] = s.initial.vel_halfwidth;
    if (s.initial.normalize_X) init["normalize_X"] = *s.initial.normalize_X;
    if (s.initial.normalize_V) init["normalize_V"] = *s.initial.normalize_V;
  }
  doc["initial_state"] = std::move(init);
  doc["kernel"] = s.kernel_spec;
  doc["schedule"] = s.schedule_spec;
  doc["tau"] = s.tau;
  doc["mu"] = s.mu;
  doc["t_end"] = s.t_end;
  doc["step"] = s.step;
  doc["tolerances"] = {{"consensus", s.consensus_tol}, {"flocking_v", s.flocking_vtol}};
  doc["monitor_eps0"] = s.monitor_eps0;
  doc["record_stride"] = s.record_stride;
  doc["record_states"] = s.record_states;
  doc["v_floor"] = s.v_floor;
  return doc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open " + path);
  json doc;
  in >> doc;
  return scenario_from_json(doc);
}

std::pair<AgentMatrix, std::optional<AgentMatrix>> make_initial_state(const Scenario& s) {
  AgentMatrix x;
  std::optional<AgentMatrix> v;
  if (s.initial.kind == InitialSpec::Kind::Inline) {
    x = s.initial.positions;
    v = s.initial.velocities;
    if (x.rows() != s.n_agents || x.cols() != s.dim)
      throw std::invalid_argument("scenario: inline positions shape mismatch");
  } else {
    UniformStream rng(s.initial.seed);
    x = AgentMatrix(s.n_agents, s.dim);
    for (int i = 0; i < s.n_agents; ++i)
      for (int j = 0; j < s.dim; ++j)
        x(i, j) = s.initial.pos_halfwidth * (2.0 * rng.next() - 1.0);
    if (s.order == SystemOrder::Second) {
      AgentMatrix vv(s.n_agents, s.dim);
      for (int i = 0; i < s.n_agents; ++i)
        for (int j = 0; j < s.dim; ++j)
          vv(i, j) = s.initial.vel_halfwidth * (2.0 * rng.next() - 1.0);
      v = std::move(vv);
    }
  }
  if (s.order == SystemOrder::Second && !v)
    throw std::invalid_argument("scenario: second-order run needs velocities");
  if (s.order == SystemOrder::First) v.reset();

  x.rowwise() -= mean(x);
  if (v) v->rowwise() -= mean(*v);
  if (s.initial.normalize_X) {
    const double X = std::sqrt(std::max(0.0, variance_form(x, x)));
    if (X > 0.0) x *= *s.initial.normalize_X / X;
  }
  if (v && s.initial.normalize_V) {
    const double V = std::sqrt(std::max(0.0, variance_form(*v, *v)));
    if (V > 0.0) *v *= *s.initial.normalize_V / V;
  }
  return {std::move(x), std::move(v)};
}

}  // namespace flockyap
