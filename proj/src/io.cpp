#include "trajq/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajq/errors.hpp"

namespace trajq {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  // Write-then-rename so an interrupted run never leaves a truncated artifact.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("error writing " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const json& doc) { return content_hash(doc.dump()); }

namespace {

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid ") + what + ": " + e.what());
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json matrix_json(const Eigen::MatrixXi& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from(const json& j, int rows, int cols, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ShapeError(std::string(name) + " must have " + std::to_string(rows) + " rows");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw ShapeError(std::string(name) + " row " + std::to_string(i) + " must have " + std::to_string(cols) +
                       " entries");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<Scalar>();
  }
  return m;
}

json vector_json(const Eigen::VectorXi& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXi vector_from(const json& j, int n, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ShapeError(std::string(name) + " must have length " + std::to_string(n));
  Eigen::VectorXi v(n);
  for (int i = 0; i < n; ++i) v[i] = j[i].get<int>();
  return v;
}

template <class T>
void read_opt(const json& doc, const char* key, T& field) {
  if (doc.contains(key) && !doc.at(key).is_null()) field = doc.at(key).get<T>();
}

}  // namespace

json to_json(const ProblemSpec& s) {
  json doc;
  doc["n_assets"] = s.n_assets;
  doc["n_steps"] = s.n_steps;
  doc["budget"] = s.budget;
  doc["max_holding"] = s.max_holding;
  doc["returns"] = matrix_json(s.returns);
  doc["risk_aversion"] = s.risk_aversion;
  json cov = json::array();
  for (const auto& page : s.covariance) cov.push_back(matrix_json(page));
  doc["covariance"] = std::move(cov);
  doc["temp_cost"] = matrix_json(s.temp_cost);
  doc["perm_cost"] = matrix_json(s.perm_cost);
  doc["initial_holdings"] = vector_json(s.initial_holdings);
  doc["final_holdings"] = s.final_holdings ? vector_json(*s.final_holdings) : json(nullptr);
  doc["penalty_strength"] = s.penalty_strength;
  doc["risk_mode"] = to_string(s.risk_mode);
  doc["trade_mode"] = to_string(s.trade_mode);
  return doc;
}

ProblemSpec problem_from_json(const json& doc) {
  return guarded("problem", [&] {
    ProblemSpec s;
    s.n_assets = doc.at("n_assets").get<int>();
    s.n_steps = doc.at("n_steps").get<int>();
    if (s.n_assets < 1 || s.n_steps < 1) throw ValidationError("n_assets and n_steps must be positive");
    s.budget = doc.at("budget").get<int>();
    s.max_holding = doc.at("max_holding").get<int>();
    s.returns = matrix_from<double>(doc.at("returns"), s.n_assets, s.n_steps, "returns");
    s.risk_aversion = doc.at("risk_aversion").get<double>();
    const auto& cov = doc.at("covariance");
    if (!cov.is_array() || static_cast<int>(cov.size()) != s.n_steps)
      throw ShapeError("covariance must have one page per step");
    for (const auto& page : cov) s.covariance.push_back(matrix_from<double>(page, s.n_assets, s.n_assets, "covariance"));
    s.temp_cost = matrix_from<double>(doc.at("temp_cost"), s.n_assets, s.n_steps, "temp_cost");
    s.perm_cost = matrix_from<double>(doc.at("perm_cost"), s.n_assets, s.n_steps, "perm_cost");
    s.initial_holdings = vector_from(doc.at("initial_holdings"), s.n_assets, "initial_holdings");
    if (doc.contains("final_holdings") && !doc.at("final_holdings").is_null())
      s.final_holdings = vector_from(doc.at("final_holdings"), s.n_assets, "final_holdings");
    s.penalty_strength = doc.at("penalty_strength").get<double>();
    if (doc.contains("risk_mode")) s.risk_mode = parse_risk_mode(doc.at("risk_mode").get<std::string>());
    if (doc.contains("trade_mode")) s.trade_mode = parse_trade_mode(doc.at("trade_mode").get<std::string>());
    validate(s);
    return s;
  });
}

json to_json(const Trajectory& t) { return matrix_json(t.holdings); }

Trajectory trajectory_from_json(const json& doc) {
  return guarded("trajectory", [&] {
    if (!doc.is_array() || doc.empty() || !doc[0].is_array()) throw ShapeError("trajectory must be a nested array");
    return Trajectory(matrix_from<int>(doc, static_cast<int>(doc.size()), static_cast<int>(doc[0].size()), "holdings"));
  });
}

json to_json(const GeneratorParams& p) {
  json d;
  d["n_assets"] = p.n_assets;
  d["n_steps"] = p.n_steps;
  d["budget"] = p.budget;
  d["max_holding"] = p.max_holding;
  d["returns_min"] = p.returns_min;
  d["returns_max"] = p.returns_max;
  d["risk_aversion"] = p.risk_aversion;
  d["covariance_mode"] = p.covariance_mode == CovarianceMode::factor ? "factor" : "raw";
  d["factors"] = p.factors;
  d["factor_scale"] = p.factor_scale;
  d["idio_min"] = p.idio_min;
  d["idio_max"] = p.idio_max;
  d["raw_scale"] = p.raw_scale;
  d["temp_cost_min"] = p.temp_cost_min;
  d["temp_cost_max"] = p.temp_cost_max;
  d["perm_cost_min"] = p.perm_cost_min;
  d["perm_cost_max"] = p.perm_cost_max;
  d["random_initial"] = p.random_initial;
  d["risk_mode"] = to_string(p.risk_mode);
  d["trade_mode"] = to_string(p.trade_mode);
  d["penalty_rule"] = p.penalty_rule == PenaltyRule::bound ? "bound" : "fixed";
  d["penalty_value"] = p.penalty_value;
  d["penalty_scale"] = p.penalty_scale;
  d["penalty_holding_bound"] = p.penalty_holding_bound;
  return d;
}

GeneratorParams generator_from_json(const json& d, GeneratorParams p) {
  return guarded("generator parameters", [&] {
    read_opt(d, "n_assets", p.n_assets);
    read_opt(d, "n_steps", p.n_steps);
    read_opt(d, "budget", p.budget);
    read_opt(d, "max_holding", p.max_holding);
    read_opt(d, "returns_min", p.returns_min);
    read_opt(d, "returns_max", p.returns_max);
    read_opt(d, "risk_aversion", p.risk_aversion);
    if (d.contains("covariance_mode")) {
      const auto m = d.at("covariance_mode").get<std::string>();
      if (m != "factor" && m != "raw") throw ValidationError("covariance_mode must be factor or raw");
      p.covariance_mode = m == "factor" ? CovarianceMode::factor : CovarianceMode::raw;
    }
    read_opt(d, "factors", p.factors);
    read_opt(d, "factor_scale", p.factor_scale);
    read_opt(d, "idio_min", p.idio_min);
    read_opt(d, "idio_max", p.idio_max);
    read_opt(d, "raw_scale", p.raw_scale);
    read_opt(d, "temp_cost_min", p.temp_cost_min);
    read_opt(d, "temp_cost_max", p.temp_cost_max);
    read_opt(d, "perm_cost_min", p.perm_cost_min);
    read_opt(d, "perm_cost_max", p.perm_cost_max);
    read_opt(d, "random_initial", p.random_initial);
    if (d.contains("risk_mode")) p.risk_mode = parse_risk_mode(d.at("risk_mode").get<std::string>());
    if (d.contains("trade_mode")) p.trade_mode = parse_trade_mode(d.at("trade_mode").get<std::string>());
    if (d.contains("penalty_rule")) {
      const auto r = d.at("penalty_rule").get<std::string>();
      if (r != "bound" && r != "fixed") throw ValidationError("penalty_rule must be bound or fixed");
      p.penalty_rule = r == "bound" ? PenaltyRule::bound : PenaltyRule::fixed;
    }
    read_opt(d, "penalty_value", p.penalty_value);
    read_opt(d, "penalty_scale", p.penalty_scale);
    read_opt(d, "penalty_holding_bound", p.penalty_holding_bound);
    return p;
  });
}

json to_json(const EncodingScheme& s) {
  json d;
  d["kind"] = to_string(s.kind);
  d["max_holding"] = s.max_holding;
  d["bit_depth"] = s.bit_depth;
  d["weights"] = s.weights;
  if (s.kind == EncodingKind::partition) {
    d["budget"] = s.budget;
    d["n_assets"] = s.n_assets;
    d["partitions"] = s.partitions;
  }
  return d;
}

EncodingScheme encoding_from_json(const json& d) {
  return guarded("encoding", [&] {
    const auto kind = parse_encoding(d.at("kind").get<std::string>());
    EncodingScheme s = build_encoding(kind, d.at("max_holding").get<int>(), d.value("budget", 0), d.value("n_assets", 0));
    // Stored weights win so artifacts decode exactly as they were compiled.
    if (d.contains("weights") && kind != EncodingKind::partition) {
      s.weights = d.at("weights").get<std::vector<int>>();
      s.bit_depth = static_cast<int>(s.weights.size());
    }
    if (d.contains("partitions") && kind == EncodingKind::partition) {
      s.partitions = d.at("partitions").get<std::vector<std::vector<int>>>();
      s.bit_depth = static_cast<int>(s.partitions.size());
    }
    return s;
  });
}

json to_json(const QuadraticProgram& qp) {
  const int n = qp.dimension();
  json d;
  d["format"] = "trajq-qubo/1";
  d["dimension"] = n;
  d["offset"] = qp.offset;
  json terms = json::array();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = i == j ? qp.matrix(i, i) : qp.matrix(i, j) + qp.matrix(j, i);
      if (v != 0.0) terms.push_back(json::array({i, j, v}));
    }
  d["terms"] = std::move(terms);
  json vmap = json::array();
  for (const auto& r : qp.variable_map)
    vmap.push_back({{"kind", to_string(r.kind)}, {"asset", r.asset}, {"step", r.step}, {"bit", r.bit}, {"weight", r.weight}});
  d["variable_map"] = std::move(vmap);
  if (qp.layout) {
    const auto& L = *qp.layout;
    d["layout"] = {{"n_assets", L.n_assets},
                   {"n_steps", L.n_steps},
                   {"budget", L.budget},
                   {"max_holding", L.max_holding},
                   {"trade_mode", to_string(L.trade_mode)},
                   {"encoding", to_json(L.scheme)},
                   {"slack_encoding", to_string(L.slack_encoding)},
                   {"slack_weights", L.slack_weights}};
  } else {
    d["layout"] = nullptr;
  }
  d["provenance"] = {{"source_hash", qp.source_hash}, {"seed", qp.seed}};
  return d;
}

QuadraticProgram qubo_from_json(const json& d) {
  return guarded("QUBO artifact", [&] {
    const int n = d.at("dimension").get<int>();
    if (n < 0) throw ValidationError("dimension must be non-negative");
    QuadraticProgram qp;
    qp.matrix = Eigen::MatrixXd::Zero(n, n);
    qp.offset = d.at("offset").get<double>();
    for (const auto& t : d.at("terms")) {
      const int i = t.at(0).get<int>(), j = t.at(1).get<int>();
      const double v = t.at(2).get<double>();
      if (i < 0 || j < 0 || i >= n || j >= n) throw ValidationError("QUBO term index out of range");
      if (i == j) {
        qp.matrix(i, i) += v;
      } else {
        qp.matrix(i, j) += 0.5 * v;
        qp.matrix(j, i) += 0.5 * v;
      }
    }
    if (d.contains("variable_map")) {
      for (const auto& r : d.at("variable_map")) {
        VariableRole role;
        const auto kind = r.at("kind").get<std::string>();
        if (kind == "holding") role.kind = VariableKind::holding;
        else if (kind == "partition") role.kind = VariableKind::partition;
        else if (kind == "slack") role.kind = VariableKind::slack;
        else throw ValidationError("unknown variable kind '" + kind + "'");
        role.asset = r.at("asset").get<int>();
        role.step = r.at("step").get<int>();
        role.bit = r.at("bit").get<int>();
        role.weight = r.at("weight").get<int>();
        qp.variable_map.push_back(role);
      }
    }
    if (d.contains("layout") && !d.at("layout").is_null()) {
      const auto& l = d.at("layout");
      ProblemLayout L;
      L.n_assets = l.at("n_assets").get<int>();
      L.n_steps = l.at("n_steps").get<int>();
      L.budget = l.at("budget").get<int>();
      L.max_holding = l.at("max_holding").get<int>();
      L.trade_mode = parse_trade_mode(l.at("trade_mode").get<std::string>());
      L.scheme = encoding_from_json(l.at("encoding"));
      L.slack_encoding = parse_slack_encoding(l.at("slack_encoding").get<std::string>());
      L.slack_weights = l.at("slack_weights").get<std::vector<int>>();
      if (static_cast<int>(qp.variable_map.size()) != n)
        throw ValidationError("variable_map must cover every variable when a layout is present");
      for (const auto& r : qp.variable_map)
        if (r.step < 0 || r.step >= L.n_steps || (r.kind == VariableKind::holding && (r.asset < 0 || r.asset >= L.n_assets)) ||
            (r.kind == VariableKind::partition && (r.bit < 0 || r.bit >= L.scheme.bit_depth)))
          throw ValidationError("variable_map entry outside the layout");
      qp.layout = std::move(L);
    }
    if (d.contains("provenance")) {
      const auto& p = d.at("provenance");
      qp.source_hash = p.value("source_hash", "");
      qp.seed = p.value("seed", std::uint64_t{0});
    }
    return qp;
  });
}

json to_json(const Embedding& e) { return {{"chains", e.chains}}; }

Embedding embedding_from_json(const json& d) {
  return guarded("embedding", [&] { return Embedding{d.at("chains").get<std::vector<std::vector<int>>>()}; });
}

json to_json(const ChimeraGraph& g) {
  json couplers = json::array();
  for (auto [a, b] : g.inactive_couplers()) couplers.push_back({a, b});
  return {{"side", g.side()},
          {"inactive_qubits", std::vector<int>(g.inactive_qubits().begin(), g.inactive_qubits().end())},
          {"inactive_couplers", couplers}};
}

ChimeraGraph hardware_from_json(const json& d) {
  return guarded("hardware description", [&] {
    std::set<int> qubits;
    std::set<Edge> couplers;
    if (d.contains("inactive_qubits"))
      for (const auto& q : d.at("inactive_qubits")) qubits.insert(q.get<int>());
    if (d.contains("inactive_couplers"))
      for (const auto& c : d.at("inactive_couplers")) couplers.insert({c.at(0).get<int>(), c.at(1).get<int>()});
    return ChimeraGraph(d.at("side").get<int>(), qubits, couplers);
  });
}

json to_json(const Sample& s, Vartype vt) {
  json d;
  if (vt == Vartype::binary) {
    std::string bits;
    for (auto v : s.state) bits += v ? '1' : '0';
    d["state"] = bits;
  } else {
    std::vector<int> spins(s.state.begin(), s.state.end());
    d["state"] = spins;
  }
  d["energy"] = s.energy;
  d["count"] = s.count;
  d["gauge"] = s.gauge;
  d["feasible"] = s.feasible;
  return d;
}

std::string to_jsonl(const SampleSet& samples) {
  std::string out;
  for (const auto& r : samples.aggregated().records) out += to_json(r, samples.vartype).dump() + "\n";
  return out;
}

json to_json(const AnnealConfig& c) {
  return {{"reads", c.reads},
          {"sweeps", c.sweeps},
          {"seed", c.seed},
          {"beta_min", c.schedule.beta_min},
          {"beta_max", c.schedule.beta_max},
          {"initial_acceptance", c.schedule.initial_acceptance},
          {"final_acceptance", c.schedule.final_acceptance}};
}

AnnealConfig anneal_from_json(const json& d, AnnealConfig c) {
  return guarded("annealing config", [&] {
    read_opt(d, "reads", c.reads);
    read_opt(d, "sweeps", c.sweeps);
    read_opt(d, "seed", c.seed);
    read_opt(d, "beta_min", c.schedule.beta_min);
    read_opt(d, "beta_max", c.schedule.beta_max);
    read_opt(d, "initial_acceptance", c.schedule.initial_acceptance);
    read_opt(d, "final_acceptance", c.schedule.final_acceptance);
    return c;
  });
}

json to_json(const PipelineConfig& c) {
  return {{"reads", c.reads},
          {"gauges", c.gauges},
          {"sweeps", c.sweeps},
          {"seed", c.seed},
          {"chain_strengths", c.chain_strengths},
          {"epsilon", c.noise.epsilon},
          {"coupler_range", {c.noise.coupler_lo, c.noise.coupler_hi}},
          {"field_range", {c.noise.field_lo, c.noise.field_hi}},
          {"noise", c.noise.gaussian ? "gaussian" : "uniform"},
          {"embedding_candidates", c.embedding_candidates},
          {"clique_candidate", c.clique_candidate},
          {"embedding_top", c.embedding_top},
          {"pilot_reads", c.pilot_reads},
          {"elite_fraction", c.elite_fraction},
          {"greedy_tries", c.greedy.tries},
          {"greedy_rounds", c.greedy.rounds}};
}

PipelineConfig pipeline_from_json(const json& d, PipelineConfig c) {
  return guarded("pipeline config", [&] {
    read_opt(d, "reads", c.reads);
    read_opt(d, "gauges", c.gauges);
    read_opt(d, "sweeps", c.sweeps);
    read_opt(d, "seed", c.seed);
    if (d.contains("chain_strengths")) c.chain_strengths = d.at("chain_strengths").get<std::vector<double>>();
    if (d.contains("chain_strength")) c.chain_strengths = {d.at("chain_strength").get<double>()};
    read_opt(d, "epsilon", c.noise.epsilon);
    if (d.contains("coupler_range")) {
      c.noise.coupler_lo = d.at("coupler_range").at(0).get<double>();
      c.noise.coupler_hi = d.at("coupler_range").at(1).get<double>();
    }
    if (d.contains("field_range")) {
      c.noise.field_lo = d.at("field_range").at(0).get<double>();
      c.noise.field_hi = d.at("field_range").at(1).get<double>();
    }
    if (d.contains("noise")) {
      const auto n = d.at("noise").get<std::string>();
      if (n != "uniform" && n != "gaussian") throw ValidationError("noise must be uniform or gaussian");
      c.noise.gaussian = n == "gaussian";
    }
    read_opt(d, "embedding_candidates", c.embedding_candidates);
    read_opt(d, "clique_candidate", c.clique_candidate);
    read_opt(d, "embedding_top", c.embedding_top);
    read_opt(d, "pilot_reads", c.pilot_reads);
    read_opt(d, "elite_fraction", c.elite_fraction);
    read_opt(d, "greedy_tries", c.greedy.tries);
    read_opt(d, "greedy_rounds", c.greedy.rounds);
    return c;
  });
}

json to_json(const ExperimentRow& r) {
  json s = json::array();
  for (const auto& [a, v] : r.s_values) s.push_back({a, v});
  return {{"n_assets", r.n_assets}, {"n_steps", r.n_steps},   {"budget", r.budget},
          {"encoding", to_string(r.encoding)}, {"vars", r.variables}, {"density", r.density},
          {"qubits", r.qubits},      {"chain", r.chain},        {"s_values", s},
          {"instances", r.instances}};
}

ExperimentRow row_from_json(const json& d) {
  return guarded("experiment row", [&] {
    ExperimentRow r;
    r.n_assets = d.at("n_assets").get<int>();
    r.n_steps = d.at("n_steps").get<int>();
    r.budget = d.at("budget").get<int>();
    r.encoding = parse_encoding(d.at("encoding").get<std::string>());
    r.variables = d.at("vars").get<long long>();
    r.density = d.at("density").get<double>();
    r.qubits = d.at("qubits").get<int>();
    r.chain = d.at("chain").get<int>();
    for (const auto& p : d.at("s_values")) r.s_values.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    r.instances = d.value("instances", 0);
    return r;
  });
}

}  // namespace trajq
