#include "coopmatch/scenario_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coopmatch/errors.hpp"

namespace coopmatch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Cursor into the document that remembers its field path for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path, const std::string& origin) : j_(j), path_(std::move(path)), origin_(origin) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node at(const std::string& key) const {
    if (!j_.is_object()) fail("must be an object");
    if (!j_.contains(key)) throw ParseError(origin_ + ": missing field '" + join(key) + "'");
    return {j_.at(key), join(key), origin_};
  }

  Node at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]", origin_}; }

  std::size_t size() const {
    if (!j_.is_array()) fail("must be an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("must be a number");
    return j_.get<double>();
  }
  std::uint64_t unsigned_int() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0)) {
      fail("must be a non-negative integer");
    }
    return j_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("must be a string");
    return j_.get<std::string>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("must be a boolean");
    return j_.get<bool>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }
  Vector vector() const {
    const auto v = numbers();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  Matrix matrix() const {
    const std::size_t rows = size();
    if (rows == 0) return Matrix(0, 0);
    std::size_t cols = at(0).size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = at(r).numbers();
      if (row.size() != cols) at(r).fail("all matrix rows must have the same length");
      for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    return m;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(origin_ + ": field '" + (path_.empty() ? "<root>" : path_) + "' " + what);
  }
  [[noreturn]] void invalid(const std::string& what) const {
    throw ValidationError(origin_ + ": field '" + (path_.empty() ? "<root>" : path_) + "': " + what);
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  const std::string& origin_;
};

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Digraph parse_graph(const Node& node) {
  const auto n = node.at("nodes").unsigned_int();
  if (n < 2) node.at("nodes").invalid("need the leader and at least one follower");
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Node edges = node.at("edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Node e = edges.at(k);
    const auto from = e.at("from").unsigned_int();
    const auto to = e.at("to").unsigned_int();
    const double weight = e.has("weight") ? e.at("weight").number() : 1.0;
    if (from >= n || to >= n) e.invalid("edge endpoint out of range");
    a(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = weight;
    if (e.has("undirected") && e.at("undirected").boolean()) {
      a(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = weight;
    }
  }
  try {
    return Digraph(std::move(a));
  } catch (const InvalidParameter& ex) {
    node.invalid(ex.what());
  }
}

LeaderInputPolicy parse_policy(const Node& node) {
  LeaderInputPolicy p;
  try {
    p.kind = policy_kind_from_string(node.at("kind").string());
  } catch (const InvalidParameter& ex) {
    node.at("kind").fail(ex.what());
  }
  switch (p.kind) {
    case LeaderInputPolicy::Kind::zero:
      break;
    case LeaderInputPolicy::Kind::state_feedback:
      p.feedback = node.at("gain").vector().transpose();
      break;
    case LeaderInputPolicy::Kind::sine:
      p.amplitude = node.at("amplitude").number();
      p.omega = node.at("omega").number();
      p.phase = node.has("phase") ? node.at("phase").number() : 0.0;
      break;
    case LeaderInputPolicy::Kind::table:
      try {
        p = LeaderInputPolicy::table(node.at("t").numbers(), node.at("v").numbers());
      } catch (const InvalidParameter& ex) {
        node.invalid(ex.what());
      }
      break;
  }
  if (node.has("bound_check")) p.bound_check = node.at("bound_check").boolean();
  if (node.has("private")) p.private_input = node.at("private").boolean();
  return p;
}

AgentModel parse_agent(const Node& node) {
  try {
    if (node.has("builtin")) {
      std::map<std::string, double> params;
      if (node.has("params")) {
        const Node pn = node.at("params");
        if (!pn.raw().is_object()) pn.fail("must be an object");
        for (const auto& [key, value] : pn.raw().items()) params[key] = pn.at(key).number();
      }
      return make_builtin(node.at("builtin").string(), params);
    }
    const auto nx = node.at("nx").unsigned_int();
    Matrix a0 = node.has("A0") ? node.at("A0").matrix() : Matrix(0, 0);
    std::vector<Polynomial> f;
    if (node.has("f")) {
      const Node fn = node.at("f");
      for (std::size_t k = 0; k < fn.size(); ++k) {
        try {
          f.push_back(Polynomial::parse(fn.at(k).string()));
        } catch (const ParseError& ex) {
          fn.at(k).fail(ex.what());
        }
      }
    }
    Polynomial g;
    try {
      g = Polynomial::parse(node.at("g").string());
    } catch (const ParseError& ex) {
      node.at("g").fail(ex.what());
    }
    const std::string name = node.has("name") ? node.at("name").string() : "custom";
    return AgentModel(name, nx, std::move(a0), std::move(f), std::move(g));
  } catch (const InvalidParameter& ex) {
    node.invalid(ex.what());
  }
}

Matrix parse_weight(const Node& node) {
  if (node.raw().is_number()) return Matrix();  // placeholder, sized by caller
  return node.matrix();
}

ControllerConfig parse_controller(const Node& node, std::size_t leader_dim) {
  ControllerConfig c;
  try {
    c.law = control_law_from_string(node.at("law").string());
  } catch (const InvalidParameter& ex) {
    node.at("law").fail(ex.what());
  }
  const auto n = static_cast<Eigen::Index>(leader_dim);
  const auto weight = [&](const std::string& key) -> Matrix {
    if (!node.has(key)) return Matrix();
    const Node w = node.at(key);
    if (w.raw().is_number()) return w.number() * Matrix::Identity(n, n);
    Matrix m = parse_weight(w);
    if (m.rows() != n || m.cols() != n) w.invalid("must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    return m;
  };
  c.synthesis.q_weight = weight("Q");
  c.synthesis.observer_q_weight = weight("observer_Q");
  if (node.has("safety_factor")) c.synthesis.safety_factor = node.at("safety_factor").number();
  if (node.has("poles")) c.synthesis.poles = node.at("poles").numbers();
  if (node.has("mu_max_factor")) c.synthesis.mu_max_factor = node.at("mu_max_factor").number();
  if (node.has("epsilon")) c.epsilon = node.at("epsilon").number();
  if (node.has("sigma")) c.sigma = node.at("sigma").number();
  if (c.synthesis.safety_factor < 1.0) node.at("safety_factor").invalid("must be >= 1");
  if (!c.synthesis.poles.empty() && c.synthesis.poles.size() != leader_dim) {
    node.at("poles").invalid("need one pole per leader coordinate");
  }
  for (double p : c.synthesis.poles) {
    if (!(p < 0.0)) node.at("poles").invalid("poles must be negative reals");
  }
  return c;
}

InitialConditions parse_initial(const Node& node) {
  InitialConditions ic;
  const std::string mode = node.has("mode") ? node.at("mode").string() : "random";
  if (mode == "random") {
    ic.mode = InitialConditions::Mode::random;
  } else if (mode == "perfect_start") {
    ic.mode = InitialConditions::Mode::perfect_start;
  } else if (mode == "explicit") {
    ic.mode = InitialConditions::Mode::explicit_values;
  } else {
    node.at("mode").fail("must be one of random, perfect_start, explicit");
  }
  if (node.has("seed")) ic.seed = node.at("seed").unsigned_int();
  if (node.has("box")) ic.box = node.at("box").number();
  if (ic.mode == InitialConditions::Mode::explicit_values) {
    ic.w0 = node.at("w0").vector();
    const Node agents = node.at("agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const Node a = agents.at(i);
      AgentInit init;
      init.z = a.has("z") ? a.at("z").vector() : Vector();
      init.x = a.at("x").vector();
      init.chain_ext = a.has("chain_ext") ? a.at("chain_ext").vector() : Vector();
      init.xi = a.has("xi") ? a.at("xi").vector() : Vector();
      if (a.has("eta")) init.eta = a.at("eta").vector();
      if (a.has("theta")) init.theta = a.at("theta").number();
      ic.agents.push_back(std::move(init));
    }
  }
  return ic;
}

}  // namespace

ScenarioFile parse_scenario(const json& doc, const std::string& origin) {
  const Node root(doc, "", origin);
  if (!doc.is_object()) root.fail("must be an object");
  ScenarioFile file;
  Scenario& scn = file.scenario;
  if (root.has("name")) scn.name = root.at("name").string();

  scn.graph = parse_graph(root.at("graph"));

  const Node leader = root.at("leader");
  try {
    scn.leader = LeaderModel(leader.at("bottom_row").numbers(),
                             leader.has("d_last") ? leader.at("d_last").number() : 1.0,
                             leader.has("input_bound") ? leader.at("input_bound").number() : 0.0);
  } catch (const InvalidParameter& ex) {
    leader.invalid(ex.what());
  }
  scn.input_policy = leader.has("input") ? parse_policy(leader.at("input")) : LeaderInputPolicy::zero();
  if (scn.input_policy.kind == LeaderInputPolicy::Kind::state_feedback &&
      static_cast<std::size_t>(scn.input_policy.feedback.size()) != scn.leader.dim()) {
    leader.at("input").at("gain").invalid("must have one entry per leader coordinate");
  }

  const Node agents = root.at("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) scn.agents.push_back(parse_agent(agents.at(i)));

  scn.controller = parse_controller(root.at("controller"), scn.leader.dim());

  const Node sim = root.at("sim");
  if (sim.has("dt")) scn.dt = sim.at("dt").number();
  if (sim.has("t_final")) scn.t_final = sim.at("t_final").number();
  if (sim.has("initial")) scn.initial = parse_initial(sim.at("initial"));

  if (root.has("output")) {
    const Node out = root.at("output");
    if (out.has("dir")) file.output.dir = out.at("dir").string();
    if (out.has("trace")) file.output.trace = out.at("trace").string();
    if (out.has("summary")) file.output.summary = out.at("summary").string();
  }

  try {
    validate_scenario(scn);
  } catch (const ValidationError& ex) {
    throw ValidationError(origin + ": " + ex.what());
  }
  return file;
}

ScenarioFile parse_scenario_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ParseError(origin + ": " + ex.what());
  }
  return parse_scenario(doc, origin);
}

ScenarioFile load_scenario_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

Scenario load_scenario(const fs::path& path) { return load_scenario_file(path).scenario; }

json scenario_to_json(const Scenario& scn, const OutputSpec& output) {
  json doc;
  doc["name"] = scn.name;

  json edges = json::array();
  const auto n = scn.graph.node_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : scn.graph.neighbors(i)) {
      edges.push_back({{"from", nb.node}, {"to", i}, {"weight", nb.weight}});
    }
  }
  doc["graph"] = {{"nodes", n}, {"edges", edges}};

  json input = {{"kind", to_string(scn.input_policy.kind)},
                {"bound_check", scn.input_policy.bound_check},
                {"private", scn.input_policy.private_input}};
  switch (scn.input_policy.kind) {
    case LeaderInputPolicy::Kind::zero:
      break;
    case LeaderInputPolicy::Kind::state_feedback:
      input["gain"] = to_json(Vector(scn.input_policy.feedback.transpose()));
      break;
    case LeaderInputPolicy::Kind::sine:
      input["amplitude"] = scn.input_policy.amplitude;
      input["omega"] = scn.input_policy.omega;
      input["phase"] = scn.input_policy.phase;
      break;
    case LeaderInputPolicy::Kind::table:
      input["t"] = scn.input_policy.table_t;
      input["v"] = scn.input_policy.table_v;
      break;
  }
  doc["leader"] = {{"bottom_row", scn.leader.bottom_row()},
                   {"d_last", scn.leader.d_last()},
                   {"input_bound", scn.leader.input_bound()},
                   {"input", input}};

  const auto builtins = builtin_names();
  json agents = json::array();
  for (const auto& a : scn.agents) {
    if (std::find(builtins.begin(), builtins.end(), a.name()) != builtins.end() &&
        make_builtin(a.name(), a.params()) == a) {
      json entry = {{"builtin", a.name()}};
      if (!a.params().empty()) entry["params"] = a.params();
      agents.push_back(entry);
      continue;
    }
    json f = json::array();
    for (const auto& fi : a.f_terms()) f.push_back(fi.to_string());
    json entry = {{"name", a.name()}, {"nx", a.nx()}, {"f", f}, {"g", a.g_term().to_string()}};
    entry["A0"] = to_json(a.A0());
    agents.push_back(entry);
  }
  doc["agents"] = agents;

  const auto& c = scn.controller;
  json ctrl = {{"law", to_string(c.law)},
               {"safety_factor", c.synthesis.safety_factor},
               {"mu_max_factor", c.synthesis.mu_max_factor},
               {"epsilon", c.epsilon},
               {"sigma", c.sigma}};
  if (c.synthesis.q_weight.size()) ctrl["Q"] = to_json(c.synthesis.q_weight);
  if (c.synthesis.observer_q_weight.size()) ctrl["observer_Q"] = to_json(c.synthesis.observer_q_weight);
  if (!c.synthesis.poles.empty()) ctrl["poles"] = c.synthesis.poles;
  doc["controller"] = ctrl;

  json initial = {{"mode", to_string(scn.initial.mode)}, {"seed", scn.initial.seed}, {"box", scn.initial.box}};
  if (scn.initial.mode == InitialConditions::Mode::explicit_values) {
    initial["w0"] = to_json(scn.initial.w0);
    json list = json::array();
    for (const auto& a : scn.initial.agents) {
      json entry = {{"z", to_json(a.z)}, {"x", to_json(a.x)}, {"chain_ext", to_json(a.chain_ext)}, {"xi", to_json(a.xi)}};
      if (a.eta) entry["eta"] = to_json(*a.eta);
      if (a.theta) entry["theta"] = *a.theta;
      list.push_back(entry);
    }
    initial["agents"] = list;
  }
  doc["sim"] = {{"dt", scn.dt}, {"t_final", scn.t_final}, {"initial", initial}};
  doc["output"] = {{"dir", output.dir}, {"trace", output.trace}, {"summary", output.summary}};
  return doc;
}

bool operator==(const Scenario& a, const Scenario& b) {
  const auto& ca = a.controller;
  const auto& cb = b.controller;
  return a.name == b.name && a.graph == b.graph && a.leader == b.leader && a.input_policy == b.input_policy &&
         a.agents == b.agents && ca.law == cb.law && same(ca.synthesis.q_weight, cb.synthesis.q_weight) &&
         same(ca.synthesis.observer_q_weight, cb.synthesis.observer_q_weight) &&
         ca.synthesis.safety_factor == cb.synthesis.safety_factor && ca.synthesis.poles == cb.synthesis.poles &&
         ca.synthesis.mu_max_factor == cb.synthesis.mu_max_factor && ca.epsilon == cb.epsilon &&
         ca.sigma == cb.sigma && a.initial == b.initial && a.dt == b.dt && a.t_final == b.t_final;
}

Digraph paper_graph() {
  return Digraph::empty(4).with_edge(0, 1, 1.0).with_edge(1, 2, 1.0).with_edge(2, 1, 1.0).with_edge(0, 3, 1.0);
}

Scenario paper_scenario(PaperInput input, ControlLaw law, std::uint64_t seed) {
  Scenario scn;
  scn.name = input == PaperInput::ramp ? "paper_fig2a" : "paper_fig2b";
  scn.graph = paper_graph();
  // |w_1| <= 3 sqrt(2) on the sinusoid generated from the [-3, 3] box.
  scn.leader = LeaderModel({0.0, 0.0}, 1.0, 5.0);
  if (input == PaperInput::ramp) {
    scn.input_policy = LeaderInputPolicy::zero();
  } else {
    RowVector f(2);
    f << -1.0, 0.0;
    scn.input_policy = LeaderInputPolicy::state_feedback(f);
  }
  scn.input_policy.bound_check = true;
  scn.agents = builtin_agents();
  scn.controller.law = law;
  scn.initial.mode = InitialConditions::Mode::random;
  scn.initial.seed = seed;
  scn.initial.box = 3.0;
  scn.dt = 1e-3;
  scn.t_final = 30.0;
  return scn;
}

namespace {

void append(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string trace_header(const SimTrace& trace) {
  std::string h = "t";
  for (Eigen::Index k = 0; k < trace.w.cols(); ++k) h += ",w" + std::to_string(k + 1);
  h += ",v,y_r";
  for (std::size_t i = 0; i < trace.agents.size(); ++i) {
    const auto& a = trace.agents[i];
    const std::string p = ",a" + std::to_string(i + 1) + "_";
    for (Eigen::Index k = 0; k < a.z.cols(); ++k) h += p + "z" + std::to_string(k + 1);
    for (Eigen::Index k = 0; k < a.x.cols(); ++k) h += p + "x" + std::to_string(k + 1);
    for (Eigen::Index k = 0; k < a.chain_ext.cols(); ++k) h += p + "chain" + std::to_string(a.x.cols() + k + 1);
    for (Eigen::Index k = 0; k < a.xi.cols(); ++k) h += p + "xi" + std::to_string(k + 1);
    for (Eigen::Index k = 0; k < a.eta.cols(); ++k) h += p + "eta" + std::to_string(k + 1);
    h += p + "u" + p + "e";
    if (a.theta.size() > 0) h += p + "theta";
  }
  return h;
}

void write_trace_csv(const SimTrace& trace, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  out << trace_header(trace) << '\n';
  std::string row;
  const auto put_row = [&](const Matrix& m, Eigen::Index r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row += ',';
      append(row, m(r, c));
    }
  };
  for (Eigen::Index r = 0; r < trace.times.size(); ++r) {
    row.clear();
    append(row, trace.times(r));
    put_row(trace.w, r);
    row += ',';
    append(row, trace.v(r));
    row += ',';
    append(row, trace.y_r(r));
    for (const auto& a : trace.agents) {
      put_row(a.z, r);
      put_row(a.x, r);
      put_row(a.chain_ext, r);
      put_row(a.xi, r);
      put_row(a.eta, r);
      row += ',';
      append(row, a.u(r));
      row += ',';
      append(row, a.e(r));
      if (a.theta.size() > 0) {
        row += ',';
        append(row, a.theta(r));
      }
    }
    row += '\n';
    out << row;
  }
  if (!out) throw std::runtime_error("failed writing trace file " + path.string());
}

namespace {

json report_to_json(const HurwitzReport& r) {
  json eig = json::array();
  for (const auto& e : r.eigenvalues) eig.push_back({e.real(), e.imag()});
  return {{"hurwitz", r.hurwitz}, {"margin", r.margin}, {"eigenvalues", eig}};
}

}  // namespace

json synthesis_to_json(const SynthesisResult& result) {
  const auto& c = result.certificates;
  json cert = {{"riccati_residual", c.riccati_residual},
               {"riccati_margin", c.riccati_margin},
               {"h_eigenvalues", c.h_eigenvalues}};
  if (c.lambda_min) cert["lambda_min"] = *c.lambda_min;
  if (!c.feedback_modes.empty()) {
    json modes = json::array();
    for (const auto& m : c.feedback_modes) modes.push_back(report_to_json(m));
    cert["feedback_modes"] = modes;
  }
  if (c.coupled_closed_loop) cert["coupled_closed_loop"] = report_to_json(*c.coupled_closed_loop);
  if (c.observer_closed_loop) cert["observer_closed_loop"] = report_to_json(*c.observer_closed_loop);
  if (c.chain_polynomial) cert["chain_polynomial"] = report_to_json(*c.chain_polynomial);
  if (c.chain_closed_loop) cert["chain_closed_loop"] = report_to_json(*c.chain_closed_loop);

  json out = {{"P", to_json(result.P)}, {"certificates", cert}};
  if (result.K.size()) {
    out["K"] = to_json(Vector(result.K.transpose()));
    out["gamma"] = result.gamma;
  }
  if (result.l0.size()) {
    out["l0"] = to_json(result.l0);
    out["mu"] = result.mu;
    out["k0"] = result.k0;
  }
  return out;
}

ExitReport run_and_export(const Scenario& scn, const fs::path& out_dir, const ExportOptions& options,
                          const OutputSpec& names) {
  fs::create_directories(out_dir);
  ExitReport report;
  report.trace_path = out_dir / names.trace;
  report.summary_path = out_dir / names.summary;

  json summary = {{"scenario", scn.name},
                  {"controller", to_string(scn.controller.law)},
                  {"dt", scn.dt},
                  {"t_final", scn.t_final},
                  {"initial_mode", to_string(scn.initial.mode)},
                  {"seed", scn.initial.seed}};
  {
    json lip = json::array();
    for (const auto& a : scn.agents) lip.push_back(estimate_lipschitz_z(a, scn.initial.box));
    summary["lipschitz_z_estimates"] = lip;
  }

  {
    std::ofstream sc(out_dir / "scenario.json");
    sc << scenario_to_json(scn, names).dump(2) << '\n';
  }

  try {
    const SimTrace trace = run(scn);
    write_trace_csv(trace, report.trace_path);
    summary["synthesis"] = synthesis_to_json(trace.synthesis);

    const auto tracking = tracking_report(trace, options.tail_fraction);
    json agents = json::array();
    for (const auto& a : tracking.agents) {
      json entry = {{"tail_max_error", a.tail_max_error}};
      if (a.final_theta) entry["final_theta"] = *a.final_theta;
      if (a.theta_tail_delta) entry["theta_tail_delta"] = *a.theta_tail_delta;
      agents.push_back(entry);
    }
    const bool passed = tracking.max_tail_error() < options.tolerance;
    summary["tracking"] = {{"tail_fraction", tracking.tail_fraction},
                           {"tail_start", tracking.tail_start},
                           {"tolerance", options.tolerance},
                           {"max_tail_error", tracking.max_tail_error()},
                           {"passed", passed},
                           {"agents", agents}};
    if (needs_observer_gain(scn.controller.law)) {
      json fits = json::array();
      for (const auto& f : observer_convergence(trace)) {
        fits.push_back({{"c0", f.c0},
                        {"lambda0", f.lambda0},
                        {"r_squared", f.r_squared},
                        {"samples", f.samples},
                        {"converged_at_start", f.converged_at_start}});
      }
      summary["observer_fits"] = fits;
    }
    report.tracking = tracking;
    report.exit_code = passed ? 0 : 1;
    report.status = passed ? "ok" : "tolerance_exceeded";
    report.message = "max tail |e| = " + std::to_string(tracking.max_tail_error());
  } catch (const NumericBlowup& ex) {
    report.exit_code = 2;
    report.status = "blowup";
    report.divergence_time = ex.time();
    report.message = ex.what();
    summary["divergence_time"] = ex.time();
  } catch (const Error& ex) {
    report.exit_code = 3;
    report.status = "error";
    report.message = ex.what();
  }
  summary["status"] = report.status;
  summary["message"] = report.message;

  std::ofstream out(report.summary_path);
  if (!out) throw std::runtime_error("cannot write summary " + report.summary_path.string());
  out << summary.dump(2) << '\n';
  return report;
}

}  // namespace coopmatch
