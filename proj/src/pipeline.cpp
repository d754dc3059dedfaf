#include <algorithm>
#include <chrono>

#include "trajq/errors.hpp"
#include "trajq/rng.hpp"
#include "trajq/solvers.hpp"

namespace trajq {

namespace {

enum Stream : std::uint64_t {
  kGaugeSpins = 0x100,
  kNoise = 0x200,
  kTies = 0x300,
  kGreedy = 0x400,
  kPilot = 0x500,
  kAnneal = 0x600,
};

struct GaugeRun {
  SampleSet samples;  // logical bits
  int broken = 0;
  int ties = 0;
};

// One gauge: transform, perturb, anneal, undo the gauge, majority-vote.
GaugeRun run_gauge(const QuadraticProgram& qp, const EmbeddedProblem& ep, const Spins& gauge,
                   const NoiseModel& noise, const AnnealConfig& anneal, int gauge_id, std::uint64_t tie_seed) {
  const IsingModel noisy = apply_noise(gauge_transform(ep.model, gauge), noise);
  const SampleSet raw = simulated_annealing(noisy, anneal, gauge_id);
  GaugeRun out;
  out.samples.vartype = Vartype::binary;
  out.samples.reads = raw.reads;
  out.samples.sweeps = raw.sweeps;
  out.samples.seed = raw.seed;
  out.samples.wall_time_ms = raw.wall_time_ms;
  for (std::size_t r = 0; r < raw.records.size(); ++r) {
    const Spins physical = apply_gauge(raw.records[r].state, gauge);
    const UnembedResult u = unembed(physical, ep.chains, derive_seed(tie_seed, r));
    out.broken += u.broken_chains;
    out.ties += static_cast<int>(u.tie_variables.size());
    Sample s;
    s.state.assign(u.bits.begin(), u.bits.end());
    s.energy = evaluate(qp, u.bits);
    s.gauge = gauge_id;
    s.feasible = qp.layout ? is_feasible_bits(qp, u.bits) : true;
    out.samples.records.push_back(std::move(s));
  }
  return out;
}

Spins gauge_for(int n, std::uint64_t seed, int g) {
  if (g == 0) return Spins(n, 1);
  return random_gauge(n, derive_seed(seed, kGaugeSpins + g));
}

}  // namespace

void validate(const PipelineConfig& c) {
  if (c.reads < 1 || c.sweeps < 1) throw ValidationError("reads and sweeps must be positive");
  if (c.gauges < 1 || c.gauges > c.reads) throw ValidationError("gauges must lie in 1..reads");
  if (c.chain_strengths.empty()) throw ValidationError("at least one chain strength is required");
  for (double s : c.chain_strengths)
    if (!(s > 0)) throw ValidationError("chain strengths must be positive");
  if (c.embedding_candidates < 0 || c.embedding_top < 1 || c.pilot_reads < 1)
    throw ValidationError("invalid embedding search settings");
  if (!(c.elite_fraction > 0 && c.elite_fraction <= 1)) throw ValidationError("elite fraction must lie in (0, 1]");
  validate(c.noise);
}

std::uint64_t pipeline_gauge_seed(std::uint64_t seed, int gauge) {
  return derive_seed(seed, kAnneal + static_cast<std::uint64_t>(gauge));
}

std::vector<Embedding> candidate_embeddings(const IsingModel& logical, const ChimeraGraph& graph,
                                            const PipelineConfig& c) {
  const int n = logical.size();
  const auto edges = logical_edges(logical);
  std::vector<Embedding> out;
  if (c.clique_candidate && n <= max_clique_size(graph.side())) {
    try {
      out.push_back(clique_embedding(n, graph));
    } catch (const EmbeddingError&) {
    }
  }
  for (int k = 0; k < c.embedding_candidates; ++k) {
    GreedyEmbeddingOptions opt = c.greedy;
    opt.seed = derive_seed(c.seed, kGreedy + static_cast<std::uint64_t>(k));
    try {
      out.push_back(greedy_embedding(n, edges, graph, opt));
    } catch (const EmbeddingError&) {
    }
  }
  if (out.empty()) throw EmbeddingError("no embedding found for " + std::to_string(n) + " variables");
  return out;
}

PipelineResult annealer_pipeline(const QuadraticProgram& qp, const ChimeraGraph& graph, const PipelineConfig& c) {
  validate(c);
  const auto start = std::chrono::steady_clock::now();
  const IsingModel logical = qubo_to_ising(qp);
  const auto cands = candidate_embeddings(logical, graph, c);
  const auto order = rank_embeddings(cands);
  double coef = max_abs_coefficient(logical);
  if (coef == 0.0) coef = 1.0;

  PipelineResult res;
  auto& diag = res.diagnostics;
  diag.candidates = cands.size();

  // Pilot runs choose among the top-ranked embeddings and chain strengths.
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(c.embedding_top), cands.size());
  std::size_t pick_emb = order.front();
  double pick_strength = c.chain_strengths.front();
  if (top * c.chain_strengths.size() > 1) {
    double best_score = 0.0;
    std::uint64_t pilot = 0;
    for (std::size_t e = 0; e < top; ++e)
      for (double strength : c.chain_strengths) {
        const auto ep = embed_problem(logical, cands[order[e]], graph, strength * coef);
        const std::uint64_t ps = derive_seed(c.seed, kPilot + pilot++);
        NoiseModel noise = c.noise;
        noise.seed = derive_seed(ps, kNoise);
        AnnealConfig anneal{c.pilot_reads, c.sweeps, derive_seed(ps, kAnneal), {}};
        const auto run = run_gauge(qp, ep, gauge_for(static_cast<int>(ep.qubits.size()), ps, 1), noise, anneal, 0,
                                   derive_seed(ps, kTies));
        const auto energies = run.samples.energies();
        const double score = pi_elite_score(energies, c.elite_fraction);
        diag.pilot_scores.push_back(score);
        if (diag.pilot_scores.size() == 1 || score < best_score) {
          best_score = score;
          pick_emb = order[e];
          pick_strength = strength;
        }
      }
  }

  res.embedding = cands[pick_emb];
  const auto ep = embed_problem(logical, res.embedding, graph, pick_strength * coef);
  const int nq = static_cast<int>(ep.qubits.size());
  diag.qubits = res.embedding.qubit_count();
  diag.max_chain = res.embedding.max_chain_length();
  diag.chain_strength = pick_strength * coef;
  diag.range_scale = range_scale(ep.model, c.noise);

  res.samples.vartype = Vartype::binary;
  res.samples.sweeps = c.sweeps;
  res.samples.seed = c.seed;
  for (int g = 0; g < c.gauges; ++g) {
    const int reads = c.reads / c.gauges + (g < c.reads % c.gauges ? 1 : 0);
    diag.reads_per_gauge.push_back(reads);
    NoiseModel noise = c.noise;
    noise.seed = derive_seed(c.seed, kNoise + static_cast<std::uint64_t>(g));
    AnnealConfig anneal{reads, c.sweeps, pipeline_gauge_seed(c.seed, g), {}};
    auto run = run_gauge(qp, ep, gauge_for(nq, c.seed, g), noise, anneal, g,
                         derive_seed(c.seed, kTies + static_cast<std::uint64_t>(g)));
    diag.broken_chains += run.broken;
    diag.tie_breaks += run.ties;
    diag.gauge_best.push_back(run.samples.best().energy);
    res.samples.records.insert(res.samples.records.end(), run.samples.records.begin(), run.samples.records.end());
    res.samples.reads += reads;
  }

  const Sample& best = res.samples.best_feasible();
  res.bits.assign(best.state.begin(), best.state.end());
  res.energy = best.energy;
  res.feasible = best.feasible;
  if (qp.layout) res.trajectory = decode_solution(qp, res.bits);
  res.samples.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace trajq
