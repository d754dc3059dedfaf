#include "trajq/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "trajq/errors.hpp"

namespace trajq {

namespace fs = std::filesystem;

std::string GridCell::key() const {
  std::ostringstream os;
  os << "N" << n_assets << "_T" << n_steps << "_K" << budget;
  if (max_holding >= 0 && max_holding != budget) os << "_Kp" << max_holding;
  os << "_" << to_string(encoding);
  return os.str();
}

namespace {

json cell_json(const GridCell& c) {
  return {{"n_assets", c.n_assets},
          {"n_steps", c.n_steps},
          {"budget", c.budget},
          {"max_holding", c.max_holding},
          {"encoding", to_string(c.encoding)}};
}

GridCell cell_from_json(const json& d) {
  GridCell c;
  c.n_assets = d.at("n_assets").get<int>();
  c.n_steps = d.at("n_steps").get<int>();
  c.budget = d.at("budget").get<int>();
  c.max_holding = d.value("max_holding", -1);
  c.encoding = parse_encoding(d.at("encoding").get<std::string>());
  return c;
}

template <class T>
std::vector<T> list_of(const json& grid, const char* key) {
  const auto& v = grid.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

ChimeraGraph load_hardware(const json& d, const fs::path& base) {
  if (d.is_string()) {
    fs::path p = d.get<std::string>();
    if (p.is_relative()) p = base / p;
    return hardware_from_json(read_json_file(p));
  }
  return hardware_from_json(d);
}

void dedupe(std::vector<GridCell>& cells) {
  std::vector<GridCell> out;
  for (const auto& c : cells)
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  cells = std::move(out);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string bit_string(const Bits& b) {
  std::string s;
  for (auto v : b) s += v ? '1' : '0';
  return s;
}

fs::path samples_path(const fs::path& out_file) {
  fs::path p = out_file;
  p.replace_extension(".samples.jsonl");
  return p;
}

}  // namespace

ExperimentManifest manifest_from_json(const json& doc, const fs::path& base) {
  try {
    ExperimentManifest m;
    if (!doc.contains("seed") || doc.at("seed").is_null())
      throw ValidationError("manifest needs an explicit integer seed");
    m.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("generator")) m.generator = generator_from_json(doc.at("generator"));
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      const auto ns = list_of<int>(g, "n_assets");
      const auto ts = list_of<int>(g, "n_steps");
      const auto ks = list_of<int>(g, "budget");
      const auto kps = g.contains("max_holding") ? list_of<int>(g, "max_holding") : std::vector<int>{-1};
      const auto encs = list_of<std::string>(g, "encodings");
      for (int n : ns)
        for (int t : ts)
          for (int k : ks)
            for (int kp : kps)
              for (const auto& e : encs) m.cells.push_back({n, t, k, kp, parse_encoding(e)});
    }
    if (doc.contains("cells"))
      for (const auto& c : doc.at("cells")) m.cells.push_back(cell_from_json(c));
    dedupe(m.cells);
    if (doc.contains("compile"))
      m.compile.slack = parse_slack_encoding(doc.at("compile").value("slack", std::string("binary")));
    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      m.solver.name = s.value("name", std::string("oracle"));
      m.solver.anneal = anneal_from_json(s);
      m.solver.pipeline = pipeline_from_json(s);
    }
    if (doc.contains("hardware")) m.hardware = load_hardware(doc.at("hardware"), base);
    if (doc.contains("alphas")) m.alphas = doc.at("alphas").get<std::vector<double>>();
    m.instances = doc.value("instances", m.instances);
    m.perturbations = doc.value("perturbations", m.perturbations);
    if (doc.contains("mode")) m.mode = parse_perturbation_mode(doc.at("mode").get<std::string>());
    m.nested = doc.value("nested", m.nested);
    m.reference_reads = doc.value("reference_reads", m.reference_reads);
    m.source_hash = content_hash(doc);
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid manifest: ") + e.what());
  }
}

ExperimentManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

void validate(const ExperimentManifest& m) {
  if (m.cells.empty()) throw ValidationError("manifest grid is empty");
  if (m.instances < 1) throw ValidationError("instances must be positive");
  if (m.perturbations < 1) throw ValidationError("perturbations must be positive");
  if (m.alphas.empty()) throw ValidationError("at least one alpha is required");
  for (double a : m.alphas)
    if (!(a >= 0.0)) throw ValidationError("alpha must be non-negative");
  const auto& n = m.solver.name;
  if (n != "oracle" && n != "exhaustive" && n != "sa" && n != "pipeline")
    throw ValidationError("unknown solver '" + n + "' (expected oracle, exhaustive, sa or pipeline)");
  for (const auto& c : m.cells) {
    GeneratorParams g = m.generator;
    g.n_assets = c.n_assets;
    g.n_steps = c.n_steps;
    g.budget = c.budget;
    g.max_holding = c.max_holding;
    validate(g);
    if (c.encoding == EncodingKind::partition && g.trade_mode == TradeMode::liquidate)
      throw ValidationError("partition encoding supports rebalance mode only");
  }
  if (n == "pipeline") validate(m.solver.pipeline);
}

void apply_overrides(ExperimentManifest& m, const Overrides& o) {
  if (o.seed) m.seed = *o.seed;
  if (o.reads) m.solver.anneal.reads = m.solver.pipeline.reads = *o.reads;
  if (o.sweeps) m.solver.anneal.sweeps = m.solver.pipeline.sweeps = *o.sweeps;
  if (o.gauges) m.solver.pipeline.gauges = *o.gauges;
  if (o.chain_strength) m.solver.pipeline.chain_strengths = {*o.chain_strength};
  if (o.epsilon) m.solver.pipeline.noise.epsilon = *o.epsilon;
  if (!o.alphas.empty()) m.alphas = o.alphas;
  if (o.hardware) m.hardware = hardware_from_json(read_json_file(*o.hardware));
  if (o.encoding) {
    const auto e = parse_encoding(*o.encoding);
    for (auto& c : m.cells) c.encoding = e;
    dedupe(m.cells);
  }
  validate(m);
}

std::uint64_t cell_seed(std::uint64_t master, const GridCell& cell) {
  const std::string h = content_hash(cell.key());
  return derive_seed(master, std::stoull(h, nullptr, 16));
}

ProblemFamily family_for(const ExperimentManifest& m, const GridCell& c) {
  ProblemFamily f;
  f.generator = m.generator;
  f.generator.n_assets = c.n_assets;
  f.generator.n_steps = c.n_steps;
  f.generator.budget = c.budget;
  f.generator.max_holding = c.max_holding;
  f.encoding = c.encoding;
  f.compile = m.compile;
  return f;
}

QuboSolver make_solver(const SolverSettings& s, const ChimeraGraph& hw) {
  if (s.name == "oracle" || s.name == "exhaustive") return oracle_solver();
  if (s.name == "sa") {
    const AnnealConfig base = s.anneal;
    return [base](const QuadraticProgram& qp, std::uint64_t seed) {
      AnnealConfig cfg = base;
      cfg.seed = seed;
      const SampleSet set = simulated_annealing(qp, cfg);
      const Sample& b = set.best_feasible();
      SolverOutcome o;
      o.bits.assign(b.state.begin(), b.state.end());
      o.energy = b.energy;
      o.feasible = b.feasible;
      return o;
    };
  }
  if (s.name == "pipeline") {
    const PipelineConfig base = s.pipeline;
    return [base, hw](const QuadraticProgram& qp, std::uint64_t seed) {
      PipelineConfig cfg = base;
      cfg.seed = seed;
      const PipelineResult r = annealer_pipeline(qp, hw, cfg);
      SolverOutcome o;
      o.bits = r.bits;
      o.energy = r.energy;
      o.feasible = r.feasible;
      o.qubits = r.diagnostics.qubits;
      o.max_chain = r.diagnostics.max_chain;
      return o;
    };
  }
  throw ValidationError("unknown solver '" + s.name + "'");
}

std::vector<fs::path> cmd_gen(const ExperimentManifest& m, const fs::path& out_dir) {
  validate(m);
  std::vector<fs::path> files;
  for (const auto& c : m.cells) {
    const ProblemFamily fam = family_for(m, c);
    const std::uint64_t cs = cell_seed(m.seed, c);
    for (int i = 0; i < m.instances; ++i) {
      const std::uint64_t s = instance_seed(cs, i);
      json doc = to_json(random_instance(fam.generator, s));
      doc["encoding"] = to_string(c.encoding);
      doc["provenance"] = {{"source_hash", m.source_hash}, {"cell", c.key()}, {"instance", i}, {"seed", s}};
      char name[32];
      std::snprintf(name, sizeof name, "_i%03d.json", i);
      const fs::path p = out_dir / (c.key() + name);
      write_json_file(p, doc);
      files.push_back(p);
    }
  }
  return files;
}

json cmd_compile(const fs::path& spec_file, EncodingKind enc, const fs::path& out_file, std::ostream& log,
                 const CompileOptions& options) {
  const std::string text = read_text_file(spec_file);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(spec_file.string() + ": malformed JSON: " + e.what());
  }
  const ProblemSpec spec = problem_from_json(doc);
  const EncodingScheme scheme = build_encoding(enc, spec.max_holding, spec.budget, spec.n_assets);
  QuadraticProgram qp = compile(spec, scheme, options);
  qp.source_hash = content_hash(text);
  if (doc.contains("provenance")) qp.seed = doc.at("provenance").value("seed", std::uint64_t{0});
  const json art = to_json(qp);
  write_json_file(out_file, art);
  char buf[96];
  std::snprintf(buf, sizeof buf, "vars=%d density=%.2f\n", qp.dimension(), qp.dimension() >= 2 ? density(qp) : 0.0);
  log << buf;
  return art;
}

namespace {

json diagnostics_json(const PipelineDiagnostics& d) {
  return {{"qubits", d.qubits},
          {"max_chain", d.max_chain},
          {"chain_strength", d.chain_strength},
          {"range_scale", d.range_scale},
          {"reads_per_gauge", d.reads_per_gauge},
          {"gauge_best", d.gauge_best},
          {"broken_chains", d.broken_chains},
          {"tie_breaks", d.tie_breaks},
          {"candidates", d.candidates},
          {"pilot_scores", d.pilot_scores}};
}

}  // namespace

json cmd_solve(const fs::path& qubo_file, const std::string& solver, const SolveOptions& opt, const fs::path& out_file,
               std::ostream& log) {
  const std::string text = read_text_file(qubo_file);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(qubo_file.string() + ": malformed JSON: " + e.what());
  }
  const QuadraticProgram qp = qubo_from_json(doc);

  Bits bits;
  double energy = 0.0;
  bool feasible = true;
  SampleSet samples;
  json diag = json::object();
  if (solver == "exhaustive") {
    const QuboOptimum o = exhaustive_qubo(qp);
    bits = o.bits;
    energy = o.energy;
    feasible = qp.layout ? is_feasible_bits(qp, bits) : true;
    samples.reads = 1;
    samples.seed = opt.seed;
    samples.records.push_back({std::vector<std::int8_t>(bits.begin(), bits.end()), energy, 1, 0, feasible});
  } else if (solver == "sa") {
    AnnealConfig cfg = opt.anneal;
    cfg.seed = opt.seed;
    samples = simulated_annealing(qp, cfg);
    const Sample& b = samples.best_feasible();
    bits.assign(b.state.begin(), b.state.end());
    energy = b.energy;
    feasible = b.feasible;
    const auto [bmin, bmax] = beta_range(qubo_to_ising(qp), cfg.schedule);
    diag = {{"reads", cfg.reads}, {"sweeps", cfg.sweeps}, {"beta_min", bmin}, {"beta_max", bmax}};
  } else if (solver == "pipeline") {
    PipelineConfig cfg = opt.pipeline;
    cfg.seed = opt.seed;
    const PipelineResult r = annealer_pipeline(qp, opt.hardware, cfg);
    bits = r.bits;
    energy = r.energy;
    feasible = r.feasible;
    samples = r.samples;
    diag = diagnostics_json(r.diagnostics);
    diag["embedding"] = to_json(r.embedding);
  } else {
    throw ValidationError("unknown solver '" + solver + "' (expected exhaustive, sa or pipeline)");
  }

  const fs::path sp = samples_path(out_file);
  write_text_file(sp, to_jsonl(samples));
  json out;
  out["solver"] = solver;
  out["bits"] = bit_string(bits);
  out["energy"] = energy;
  out["value"] = -energy;
  out["feasible"] = feasible;
  out["trajectory"] = qp.layout ? to_json(decode_solution(qp, bits)) : json(nullptr);
  out["diagnostics"] = diag;
  out["samples"] = sp.filename().string();
  out["provenance"] = {{"source_hash", content_hash(text)}, {"seed", opt.seed}};
  write_json_file(out_file, out);
  char buf[128];
  std::snprintf(buf, sizeof buf, "energy=%.10g feasible=%s\n", energy, feasible ? "true" : "false");
  log << buf;
  return out;
}

namespace {

json cell_config(const ExperimentManifest& m, const GridCell& c) {
  json s = {{"name", m.solver.name}};
  if (m.solver.name == "sa") s["anneal"] = to_json(m.solver.anneal);
  if (m.solver.name == "pipeline") {
    s["pipeline"] = to_json(m.solver.pipeline);
    s["hardware"] = to_json(m.hardware);
  }
  return {{"cell", cell_json(c)},
          {"generator", to_json(m.generator)},
          {"slack", to_string(m.compile.slack)},
          {"solver", s},
          {"alphas", m.alphas},
          {"instances", m.instances},
          {"perturbations", m.perturbations},
          {"mode", to_string(m.mode)},
          {"nested", m.nested},
          {"reference_reads", m.reference_reads},
          {"seed", m.seed}};
}

}  // namespace

std::vector<CellResult> cmd_benchmark(const ExperimentManifest& m, const fs::path& out_dir, int jobs,
                                      std::ostream& log) {
  validate(m);
  if (jobs < 1) throw ValidationError("--jobs must be at least 1");
  const fs::path cells_dir = out_dir / "cells";
  std::error_code ec;
  fs::create_directories(cells_dir, ec);
  if (ec) throw IoError("cannot create " + cells_dir.string() + ": " + ec.message());

  std::vector<CellResult> results(m.cells.size());
  std::mutex log_mu;
  std::string timeline;
  auto note = [&](const std::string& line) {
    std::lock_guard lock(log_mu);
    log << line << "\n";
    timeline += timestamp() + " " + line + "\n";
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < m.cells.size(); i = next++) {
      const GridCell& c = m.cells[i];
      CellResult& res = results[i];
      res.cell = c;
      const json cfg = cell_config(m, c);
      const std::string hash = content_hash(cfg);
      const fs::path cell_file = cells_dir / (hash + ".json");
      if (fs::exists(cell_file)) {
        try {
          const json done = read_json_file(cell_file);
          if (done.value("status", "") == "ok" && done.value("hash", "") == hash) {
            res.status = "ok";
            res.row = row_from_json(done.at("row"));
            note(c.key() + " cached " + hash);
            continue;
          }
        } catch (const std::exception&) {
          // unreadable cache entries are recomputed
        }
      }
      note(c.key() + " start");
      json rec = {{"hash", hash}, {"config", cfg}, {"source_hash", m.source_hash}};
      try {
        SuccessOptions so;
        so.n_perturbations = m.perturbations;
        so.mode = m.mode;
        so.nested = m.nested;
        so.oracle = default_oracle(m.reference_reads, 1000, derive_seed(m.seed, 0x53000000ULL));
        const ExperimentRow row =
            success_rate(family_for(m, c), make_solver(m.solver, m.hardware), m.alphas, m.instances,
                         cell_seed(m.seed, c), so);
        res.status = "ok";
        res.row = row;
        rec["status"] = "ok";
        rec["row"] = to_json(row);
        note(c.key() + " done");
      } catch (const std::exception& e) {
        res.status = "failed";
        res.error = e.what();
        rec["status"] = "failed";
        rec["error"] = e.what();
        note(c.key() + " failed: " + e.what());
      }
      write_json_file(cell_file, rec);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(jobs, static_cast<int>(m.cells.size()));
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<ExperimentRow> rows;
  json status = json::array();
  for (const auto& r : results) {
    if (r.row) rows.push_back(*r.row);
    json s = {{"cell", r.cell.key()}, {"status", r.status}};
    if (!r.error.empty()) s["error"] = r.error;
    status.push_back(std::move(s));
  }
  const Report rep = build_report(rows);
  write_text_file(out_dir / "results.csv", rep.csv);
  write_text_file(out_dir / "results.txt", rep.text);
  write_text_file(out_dir / "results.dat", rep.dat);
  write_json_file(out_dir / "status.json", {{"source_hash", m.source_hash}, {"cells", status}});
  {
    std::ofstream lf(out_dir / "benchmark.log", std::ios::app);
    if (!lf) throw IoError("cannot write " + (out_dir / "benchmark.log").string());
    lf << timeline;
  }
  return results;
}

Report cmd_report(const fs::path& results_csv, const fs::path& out_dir) {
  const Report rep = build_report(parse_report_csv(read_text_file(results_csv)));
  write_text_file(out_dir / "results.txt", rep.text);
  write_text_file(out_dir / "results.dat", rep.dat);
  return rep;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const GuardError*>(&e) || dynamic_cast<const EmbeddingError*>(&e)) return kExitGuard;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const json::exception*>(&e))
    return kExitValidation;
  return 1;
}

}  // namespace trajq
