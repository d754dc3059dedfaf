#include "trajq/solvers.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "trajq/errors.hpp"
#include "trajq/rng.hpp"

namespace trajq {

const Sample& SampleSet::best() const {
  if (records.empty()) throw ValidationError("empty sample set");
  const Sample* b = &records.front();
  for (const auto& r : records)
    if (r.energy < b->energy) b = &r;
  return *b;
}

const Sample& SampleSet::best_feasible() const {
  const Sample* b = nullptr;
  for (const auto& r : records)
    if (r.feasible && (!b || r.energy < b->energy)) b = &r;
  return b ? *b : best();
}

std::vector<double> SampleSet::energies() const {
  std::vector<double> e;
  for (const auto& r : records) e.insert(e.end(), r.count, r.energy);
  return e;
}

SampleSet SampleSet::aggregated() const {
  SampleSet out = *this;
  out.records.clear();
  std::map<std::pair<std::vector<std::int8_t>, int>, std::size_t> index;
  for (const auto& r : records) {
    auto [it, fresh] = index.try_emplace({r.state, r.gauge}, out.records.size());
    if (fresh)
      out.records.push_back(r);
    else
      out.records[it->second].count += r.count;
  }
  std::stable_sort(out.records.begin(), out.records.end(), [](const Sample& a, const Sample& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.state != b.state) return a.state < b.state;
    return a.gauge < b.gauge;
  });
  return out;
}

bool SampleSet::same_samples(const SampleSet& o) const {
  return vartype == o.vartype && reads == o.reads && sweeps == o.sweeps && seed == o.seed &&
         records == o.records;
}

SampleSet merge(const SampleSet& a, const SampleSet& b) {
  if (a.vartype != b.vartype) throw ValidationError("cannot merge binary and spin sample sets");
  SampleSet out = a;
  out.records.insert(out.records.end(), b.records.begin(), b.records.end());
  out.reads = a.reads + b.reads;
  out.wall_time_ms = a.wall_time_ms + b.wall_time_ms;
  return out.aggregated();
}

bool guard_override() {
  const char* v = std::getenv("TRAJQ_GUARD_OVERRIDE");
  return v && *v && std::string(v) != "0";
}

std::vector<std::vector<int>> feasible_columns(const ProblemSpec& spec) {
  if (spec.trade_mode == TradeMode::rebalance)
    return enumerate_partitions(spec.budget, spec.n_assets, spec.max_holding);
  std::vector<std::vector<int>> cols;
  std::vector<int> cur(spec.n_assets, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == spec.n_assets) {
      cols.push_back(cur);
      return;
    }
    for (int v = 0; v <= std::min(left, spec.max_holding); ++v) {
      cur[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, spec.budget);
  return cols;
}

namespace {

bool lex_less_rowmajor(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
  for (int n = 0; n < a.rows(); ++n)
    for (int t = 0; t < a.cols(); ++t)
      if (a(n, t) != b(n, t)) return a(n, t) < b(n, t);
  return false;
}

}  // namespace

IntegerOptimum exhaustive_integer(const ProblemSpec& spec) {
  validate(spec);
  const auto cols = feasible_columns(spec);
  const int T = spec.n_steps;
  if (cols.empty()) throw ValidationError("no feasible trajectory: n_assets * max_holding < budget");
  long long space = 1;
  for (int t = 0; t < T; ++t) {
    if (space > kIntegerGuard / static_cast<long long>(cols.size()) && !guard_override())
      throw GuardError("feasible space " + std::to_string(cols.size()) + "^" + std::to_string(T) +
                       " exceeds the exhaustive limit of 1e7 trajectories; use a heuristic solver or set "
                       "TRAJQ_GUARD_OVERRIDE=1");
    space *= static_cast<long long>(cols.size());
  }
  IntegerOptimum best;
  bool have = false;
  std::vector<std::size_t> idx(T, 0);
  Trajectory traj(spec.n_assets, T);
  while (true) {
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < spec.n_assets; ++n) traj.holdings(n, t) = cols[idx[t]][n];
    const double v = objective(spec, traj);
    ++best.enumerated;
    if (!have || v > best.value || (v == best.value && lex_less_rowmajor(traj.holdings, best.trajectory.holdings))) {
      best.value = v;
      best.trajectory = traj;
      have = true;
    }
    int t = T - 1;
    while (t >= 0 && ++idx[t] == cols.size()) idx[t--] = 0;
    if (t < 0) break;
  }
  return best;
}

QuboOptimum exhaustive_qubo(const QuadraticProgram& qp) {
  const int n = qp.dimension();
  if (n > kQuboGuard && !guard_override())
    throw GuardError("QUBO has " + std::to_string(n) + " variables; exhaustive search is limited to " +
                     std::to_string(kQuboGuard) + " (set TRAJQ_GUARD_OVERRIDE=1 to force)");
  if (n > 62) throw GuardError("exhaustive search cannot exceed 62 variables");
  check_symmetric(qp);
  // Gray-code walk with incremental local fields f_i = sum_{j != i} Q_ij x_j.
  std::vector<double> cols(static_cast<std::size_t>(n) * n), field(n, 0.0), diag(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = qp.matrix(i, i);
    for (int j = 0; j < n; ++j) cols[static_cast<std::size_t>(i) * n + j] = j == i ? 0.0 : qp.matrix(j, i);
  }
  const double scale = std::max(1.0, n ? qp.matrix.cwiseAbs().maxCoeff() : 0.0) * std::max(1, n * n);
  const double tol = 1e-12 * scale;
  std::uint64_t x = 0, best = 0;
  double e = 0.0, best_e = 0.0;
  const std::uint64_t total = n ? (std::uint64_t{1} << n) : 1;
  double* f = field.data();
  for (std::uint64_t k = 1; k < total; ++k) {
    const int i = std::countr_zero(k);
    const double sign = ((x >> i) & 1) ? -1.0 : 1.0;
    e += sign * (diag[i] + 2.0 * f[i]);
    x ^= std::uint64_t{1} << i;
    const double* col = cols.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) f[j] += sign * col[j];
    if (e < best_e + tol) {
      if (e < best_e - tol) {
        best_e = e;
        best = x;
      } else {
        // Lexicographic on (x_0, x_1, ...): the first differing bit decides.
        const std::uint64_t diff = x ^ best;
        if (!((x >> std::countr_zero(diff)) & 1)) best = x;
        best_e = std::min(best_e, e);
      }
    }
  }
  QuboOptimum out;
  out.bits.resize(n);
  for (int i = 0; i < n; ++i) out.bits[i] = (best >> i) & 1;
  out.energy = evaluate(qp, out.bits);
  return out;
}

std::pair<double, double> beta_range(const IsingModel& m, const AnnealSchedule& sch) {
  const int n = m.size();
  double hot = 0.0, cold = std::numeric_limits<double>::infinity();
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    double sum = std::abs(m.h[i]);
    double smallest = m.h[i] != 0.0 ? std::abs(m.h[i]) : std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i || m.J(i, j) == 0.0) continue;
      sum += std::abs(m.J(i, j));
      smallest = std::min(smallest, std::abs(m.J(i, j)));
    }
    if (sum == 0.0) continue;
    hot += 2.0 * sum;
    ++counted;
    cold = std::min(cold, 2.0 * smallest);
  }
  double bmin = sch.beta_min, bmax = sch.beta_max;
  if (counted == 0) {
    if (bmin <= 0) bmin = 1.0;
    if (bmax <= 0) bmax = std::max(bmin, 1.0);
    return {bmin, bmax};
  }
  // Typical uphill move from a random state is about half the largest one.
  hot = 0.5 * hot / counted;
  if (bmin <= 0) bmin = std::log(1.0 / sch.initial_acceptance) / hot;
  if (bmax <= 0) bmax = std::log(1.0 / sch.final_acceptance) / cold;
  bmax = std::max(bmax, bmin);
  return {bmin, bmax};
}

SampleSet simulated_annealing(const IsingModel& m, const AnnealConfig& cfg, int gauge) {
  if (cfg.reads < 1 || cfg.sweeps < 1) throw ValidationError("reads and sweeps must be positive");
  const auto start = std::chrono::steady_clock::now();
  const int n = m.size();
  std::vector<int> row(n + 1, 0), col;
  std::vector<double> val;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (j != i && m.J(i, j) != 0.0) {
        col.push_back(j);
        val.push_back(m.J(i, j));
      }
    row[i + 1] = static_cast<int>(col.size());
  }
  const auto [bmin, bmax] = beta_range(m, cfg.schedule);
  std::vector<double> betas(cfg.sweeps);
  for (int k = 0; k < cfg.sweeps; ++k)
    betas[k] = cfg.sweeps == 1 ? bmax : bmin * std::pow(bmax / bmin, static_cast<double>(k) / (cfg.sweeps - 1));

  SampleSet out;
  out.vartype = Vartype::spin;
  out.reads = cfg.reads;
  out.sweeps = cfg.sweeps;
  out.seed = cfg.seed;
  out.records.reserve(cfg.reads);
  std::vector<std::int8_t> s(n);
  std::vector<double> f(n);
  for (int r = 0; r < cfg.reads; ++r) {
    Rng rng = make_rng(cfg.seed ^ static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) s[i] = (rng() >> 63) ? 1 : -1;
    for (int i = 0; i < n; ++i) {
      double acc = m.h[i];
      for (int k = row[i]; k < row[i + 1]; ++k) acc += val[k] * s[col[k]];
      f[i] = acc;
    }
    for (double beta : betas)
      for (int i = 0; i < n; ++i) {
        const double de = -2.0 * s[i] * f[i];
        if (de > 0.0 && unit(rng) >= std::exp(-beta * de)) continue;
        s[i] = static_cast<std::int8_t>(-s[i]);
        const double d = 2.0 * s[i];
        for (int k = row[i]; k < row[i + 1]; ++k) f[col[k]] += d * val[k];
      }
    Sample smp;
    smp.state = s;
    smp.energy = ising_energy(m, s);
    smp.gauge = gauge;
    out.records.push_back(std::move(smp));
  }
  out.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

SampleSet simulated_annealing(const QuadraticProgram& qp, const AnnealConfig& cfg) {
  SampleSet s = simulated_annealing(qubo_to_ising(qp), cfg);
  s.vartype = Vartype::binary;
  for (auto& r : s.records) {
    const Bits b = spins_to_bits(r.state);
    r.state.assign(b.begin(), b.end());
    r.energy = evaluate(qp, b);
    r.feasible = qp.layout ? is_feasible_bits(qp, b) : true;
  }
  return s;
}

}  // namespace trajq
