#include "trajq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "trajq/errors.hpp"
#include "trajq/solvers.hpp"

namespace trajq {

std::string to_string(PerturbationMode m) { return m == PerturbationMode::eigen ? "eigen" : "entrywise"; }

PerturbationMode parse_perturbation_mode(const std::string& s) {
  if (s == "eigen") return PerturbationMode::eigen;
  if (s == "entrywise") return PerturbationMode::entrywise;
  throw ValidationError("unknown perturbation mode '" + s + "'");
}

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::VectorXd normal_draws(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

void check_finite(const QuadraticProgram& qp) {
  if (!qp.matrix.allFinite()) throw ValidationError("cannot perturb a matrix with non-finite entries");
}

Eigen::MatrixXd entrywise(const Eigen::MatrixXd& q, const Eigen::VectorXd& z, double alpha) {
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd out = symmetrized(q);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j, ++k) {
      out(i, j) += alpha / 100.0 * std::abs(out(i, j)) * z[k];
      out(j, i) = out(i, j);
    }
  return out;
}

}  // namespace

QuadraticProgram perturb_spectrum(const QuadraticProgram& qp, double alpha, Rng& rng, PerturbationMode mode) {
  if (!(alpha >= 0)) throw ValidationError("alpha must be non-negative");
  if (alpha == 0.0) return qp;
  check_finite(qp);
  QuadraticProgram out = qp;
  const Eigen::Index n = qp.matrix.rows();
  if (mode == PerturbationMode::entrywise) {
    out.matrix = entrywise(qp.matrix, normal_draws(rng, n * (n + 1) / 2), alpha);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(qp.matrix));
  if (es.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");
  const Eigen::VectorXd z = normal_draws(rng, n);
  const Eigen::VectorXd lam = es.eigenvalues() + (alpha / 100.0) * es.eigenvalues().cwiseAbs().cwiseProduct(z);
  out.matrix = symmetrized(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
  return out;
}

SpectrumPerturber::SpectrumPerturber(const QuadraticProgram& qp, int n, std::uint64_t seed, PerturbationMode mode)
    : qp_(qp), mode_(mode) {
  if (n < 1) throw ValidationError("n_perturbations must be positive");
  check_finite(qp);
  const Eigen::Index dim = qp.matrix.rows();
  if (mode == PerturbationMode::eigen) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(qp.matrix));
    if (es.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }
  Rng rng = make_rng(seed);
  for (int k = 0; k < n; ++k)
    draws_.push_back(normal_draws(rng, mode == PerturbationMode::eigen ? dim : dim * (dim + 1) / 2));
}

QuadraticProgram SpectrumPerturber::perturbed(int k, double alpha) const {
  if (!(alpha >= 0)) throw ValidationError("alpha must be non-negative");
  if (k < 0 || k >= size()) throw RangeError("perturbation index out of range");
  if (alpha == 0.0) return qp_;
  QuadraticProgram out = qp_;
  if (mode_ == PerturbationMode::entrywise) {
    out.matrix = entrywise(qp_.matrix, draws_[k], alpha);
  } else {
    const Eigen::VectorXd lam = eigenvalues_ + (alpha / 100.0) * eigenvalues_.cwiseAbs().cwiseProduct(draws_[k]);
    out.matrix = symmetrized(eigenvectors_ * lam.asDiagonal() * eigenvectors_.transpose());
  }
  return out;
}

QuboOracle default_oracle(int reference_reads, int sweeps, std::uint64_t seed) {
  return [=](const QuadraticProgram& qp) {
    if (qp.dimension() <= kQuboGuard || guard_override()) return exhaustive_qubo(qp).energy;
    AnnealConfig cfg;
    cfg.reads = reference_reads;
    cfg.sweeps = sweeps;
    cfg.seed = seed;
    return simulated_annealing(qp, cfg).best().energy;
  };
}

bool EnergyRange::contains(double v) const {
  const double tol = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return v >= lo - tol && v <= hi + tol;
}

EnergyRange optimal_range(const SpectrumPerturber& p, double alpha, const QuboOracle& oracle) {
  EnergyRange r;
  for (int k = 0; k < p.size(); ++k) {
    const double e = oracle(p.perturbed(k, alpha));
    if (k == 0 || e < r.lo) r.lo = e;
    if (k == 0 || e > r.hi) r.hi = e;
    if (alpha == 0.0) break;
  }
  return r;
}

bool success_within_alpha(const QuadraticProgram& qp, double candidate, double alpha, int n, const QuboOracle& oracle,
                          std::uint64_t seed, PerturbationMode mode) {
  const SpectrumPerturber p(qp, n, seed, mode);
  return optimal_range(p, alpha, oracle).contains(candidate);
}

QuboSolver oracle_solver() {
  return [](const QuadraticProgram& qp, std::uint64_t) {
    const auto opt = exhaustive_qubo(qp);
    SolverOutcome o;
    o.bits = opt.bits;
    o.energy = opt.energy;
    o.feasible = qp.layout ? is_feasible_bits(qp, opt.bits) : true;
    return o;
  };
}

std::uint64_t instance_seed(std::uint64_t seed, int instance) {
  return derive_seed(seed, static_cast<std::uint64_t>(instance));
}

SuccessDetail success_rate_detail(const ProblemFamily& fam, const QuboSolver& solver, const std::vector<double>& alphas,
                                  int n_instances, std::uint64_t seed, const SuccessOptions& opt) {
  if (n_instances < 1) throw ValidationError("n_instances must be positive");
  if (alphas.empty()) throw ValidationError("at least one alpha is required");
  for (double a : alphas)
    if (!(a >= 0)) throw ValidationError("alpha must be non-negative");
  const QuboOracle oracle = opt.oracle ? opt.oracle : default_oracle();
  const auto& g = fam.generator;
  SuccessDetail d;
  auto& row = d.row;
  row.n_assets = g.n_assets;
  row.n_steps = g.n_steps;
  row.budget = g.budget;
  row.encoding = fam.encoding;
  row.instances = n_instances;
  const int kp = g.max_holding < 0 ? g.budget : g.max_holding;
  const EncodingScheme scheme = build_encoding(fam.encoding, kp, g.budget, g.n_assets);
  std::vector<int> hits(alphas.size(), 0);
  double density_sum = 0.0;
  int density_count = 0;
  for (int i = 0; i < n_instances; ++i) {
    const ProblemSpec spec = random_instance(g, instance_seed(seed, i));
    const QuadraticProgram qp = compile(spec, scheme, fam.compile);
    row.variables = qp.dimension();
    if (qp.dimension() >= 2) {
      density_sum += density(qp);
      ++density_count;
    }
    const SolverOutcome out = solver(qp, derive_seed(seed, 0x51000000ULL + static_cast<std::uint64_t>(i)));
    row.qubits = std::max(row.qubits, out.qubits);
    row.chain = std::max(row.chain, out.max_chain);
    const double optimum = oracle(qp);
    d.candidate_energies.push_back(out.energy);
    d.optimal_energies.push_back(optimum);

    const std::uint64_t pseed = derive_seed(seed, 0x52000000ULL + static_cast<std::uint64_t>(i));
    std::optional<SpectrumPerturber> shared;
    if (opt.nested) shared.emplace(qp, opt.n_perturbations, pseed, opt.mode);
    std::vector<char> ok(alphas.size(), 0);
    std::vector<std::size_t> by_alpha(alphas.size());
    std::iota(by_alpha.begin(), by_alpha.end(), 0);
    std::stable_sort(by_alpha.begin(), by_alpha.end(), [&](auto x, auto y) { return alphas[x] < alphas[y]; });
    EnergyRange hull{optimum, optimum};
    for (std::size_t a : by_alpha) {
      EnergyRange r{optimum, optimum};
      if (alphas[a] > 0.0) {
        if (opt.nested) {
          r = optimal_range(*shared, alphas[a], oracle);
          // A magnitude of alpha percent admits every smaller magnitude too.
          hull.lo = std::min(hull.lo, r.lo);
          hull.hi = std::max(hull.hi, r.hi);
          r = hull;
        } else {
          const SpectrumPerturber own(qp, opt.n_perturbations, derive_seed(pseed, a + 1), opt.mode);
          r = optimal_range(own, alphas[a], oracle);
        }
      }
      ok[a] = r.contains(out.energy) ? 1 : 0;
      hits[a] += ok[a];
    }
    d.success.push_back(std::move(ok));
  }
  row.density = density_count ? density_sum / density_count : 0.0;
  for (std::size_t a = 0; a < alphas.size(); ++a)
    row.s_values.emplace_back(alphas[a], 100.0 * hits[a] / n_instances);
  return d;
}

ExperimentRow success_rate(const ProblemFamily& fam, const QuboSolver& solver, const std::vector<double>& alphas,
                           int n_instances, std::uint64_t seed, const SuccessOptions& opt) {
  return success_rate_detail(fam, solver, alphas, n_instances, seed, opt).row;
}

std::string alpha_label(double alpha) {
  std::ostringstream os;
  os << "S(" << std::setprecision(6) << alpha << ")";
  return os.str();
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<double> alpha_columns(const std::vector<ExperimentRow>& rows) {
  std::set<double> a;
  for (const auto& r : rows)
    for (const auto& [alpha, s] : r.s_values) a.insert(alpha);
  if (rows.empty()) return {0.0, 1.0, 2.0};
  return {a.begin(), a.end()};
}

std::string s_cell(const ExperimentRow& r, double alpha) {
  for (const auto& [a, s] : r.s_values)
    if (a == alpha) return fixed(s, 2);
  return "";
}

}  // namespace

Report build_report(std::vector<ExperimentRow> rows) {
  const auto alphas = alpha_columns(rows);
  const double key = std::find(alphas.begin(), alphas.end(), 0.0) != alphas.end() ? 0.0 : alphas.front();
  auto s_of = [&](const ExperimentRow& r) {
    for (const auto& [a, s] : r.s_values)
      if (a == key) return s;
    return -1.0;
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ExperimentRow& a, const ExperimentRow& b) {
    if (s_of(a) != s_of(b)) return s_of(a) > s_of(b);
    return a.variables < b.variables;
  });

  std::vector<std::string> header{"N", "T", "K", "encoding", "vars", "density", "qubits", "chain"};
  for (double a : alphas) header.push_back(alpha_label(a));
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.n_assets), std::to_string(r.n_steps), std::to_string(r.budget),
                                   to_string(r.encoding),      std::to_string(r.variables), fixed(r.density, 2),
                                   std::to_string(r.qubits),   std::to_string(r.chain)};
    for (double a : alphas) cells.push_back(s_cell(r, a));
    table.push_back(std::move(cells));
  }

  Report rep;
  auto join = [](const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
  };
  rep.csv = join(header, ",") + "\n";
  for (const auto& row : table) rep.csv += join(row, ",") + "\n";

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : table) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (c) s += "  ";
      const std::string pad(width[c] - v[c].size(), ' ');
      s += c == 3 ? v[c] + pad : pad + v[c];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  rep.text = line(header);
  for (const auto& row : table) rep.text += line(row);

  rep.dat = "# " + join(header, " ") + "\n";
  for (auto row : table) {
    for (auto& cell : row)
      if (cell.empty()) cell = "NaN";
    rep.dat += join(row, " ") + "\n";
  }
  return rep;
}

std::vector<ExperimentRow> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(in, line)) throw ValidationError("empty report");
  const auto header = split(line);
  if (header.size() < 8 || header[0] != "N" || header[3] != "encoding") throw ValidationError("not a report CSV");
  std::vector<double> alphas;
  for (std::size_t c = 8; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.size() < 4 || h.rfind("S(", 0) != 0 || h.back() != ')') throw ValidationError("bad S column '" + h + "'");
    alphas.push_back(std::stod(h.substr(2, h.size() - 3)));
  }
  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw ValidationError("report row has the wrong number of fields");
    ExperimentRow r;
    r.n_assets = std::stoi(f[0]);
    r.n_steps = std::stoi(f[1]);
    r.budget = std::stoi(f[2]);
    r.encoding = parse_encoding(f[3]);
    r.variables = std::stoll(f[4]);
    r.density = std::stod(f[5]);
    r.qubits = std::stoi(f[6]);
    r.chain = std::stoi(f[7]);
    for (std::size_t a = 0; a < alphas.size(); ++a)
      if (!f[8 + a].empty()) r.s_values.emplace_back(alphas[a], std::stod(f[8 + a]));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace trajq
