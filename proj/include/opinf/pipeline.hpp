#pragma once

// Offline/online workflows behind the command-line tool: snapshot archives,
// training, evaluation with timing, benchmark runs, training-size sweeps and
// the intrusive comparison. Every output directory gets a JSON manifest with
// seeds, problem hash, tool version and the tolerances in effect.

#include "opinf/benchmarks.hpp"
#include "opinf/intrusive.hpp"
#include "opinf/io.hpp"
#include "opinf/sampling.hpp"

#include <chrono>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace opinf::pipeline {

using io::json;
namespace fs = std::filesystem;

enum class SamplingKind { Default, LogSpaced, UniformGrid, Explicit, SeededRandom };

inline std::string to_string(SamplingKind k) {
  switch (k) {
    case SamplingKind::Default: return "default";
    case SamplingKind::LogSpaced: return "log-spaced";
    case SamplingKind::UniformGrid: return "uniform-grid";
    case SamplingKind::Explicit: return "explicit";
    case SamplingKind::SeededRandom: return "seeded-random";
  }
  return "unknown";
}

inline SamplingKind parse_sampling(const std::string& name) {
  for (auto k : {SamplingKind::Default, SamplingKind::LogSpaced, SamplingKind::UniformGrid, SamplingKind::Explicit,
                 SamplingKind::SeededRandom})
    if (to_string(k) == name) return k;
  throw FormatError("unknown sampling '" + name + "'");
}

struct SamplingSpec {
  SamplingKind kind = SamplingKind::Default;
  std::size_t count = 0;
  std::vector<Parameter> points;  // Explicit only
};

struct BenchmarkConfig {
  std::string problem;  // problem-definition JSON, or a benchmark family name
  std::optional<Eigen::Index> n;
  SamplingSpec training{SamplingKind::Default, 200, {}};
  SamplingSpec test{SamplingKind::SeededRandom, 1000, {}};
  std::optional<Eigen::Index> r;
  std::optional<double> energy;
  std::vector<double> grid_lambda1;  // empty: default grid
  std::vector<double> grid_lambda2;
  fs::path out;
  std::uint64_t seed = 0;
  bool reference = false;
  bool allow_overlap = false;
  std::size_t workers = 0;
  RomOptions rom;
};

/// Desk-scale default orders for the benchmark families.
inline Eigen::Index desk_n(const std::string& family) {
  if (family == "pale-ct") return 128;
  if (family == "pale-dt" || family == "pare-ct") return 64;
  if (family == "pale-coupled") return 16;
  throw FormatError("unknown benchmark family '" + family + "'");
}

inline bool is_family(const std::string& name) {
  const auto& names = benchmarks::family_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

inline ProblemDefinition resolve_problem(const BenchmarkConfig& c) {
  if (c.problem.empty()) throw FormatError("no problem given");
  if (fs::exists(c.problem)) {
    ProblemDefinition p = io::load_problem(c.problem);
    if (c.n && *c.n != p.n)
      throw FormatError("--n " + std::to_string(*c.n) + " does not match the problem file order " + std::to_string(p.n));
    return p;
  }
  if (is_family(c.problem)) return benchmarks::make_family(c.problem, c.n.value_or(desk_n(c.problem)));
  throw FormatError("'" + c.problem + "' is neither a readable problem file nor a benchmark family");
}

/// Test draws use a stream separate from the training seed.
inline std::uint64_t test_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ull; }

inline std::vector<Parameter> sample(const ProblemDefinition& p, const SamplingSpec& spec, std::uint64_t seed) {
  std::vector<Parameter> out;
  switch (spec.kind) {
    case SamplingKind::Default:
      out = default_training_set(p, spec.count);
      break;
    case SamplingKind::LogSpaced:
      if (p.d != 1) throw FormatError("log-spaced sampling needs a one-dimensional domain");
      out = log_spaced(p.domain[0], spec.count);
      break;
    case SamplingKind::UniformGrid: {
      auto per_axis = static_cast<std::size_t>(
          std::floor(std::pow(static_cast<double>(spec.count), 1.0 / static_cast<double>(p.d)) + 1e-9));
      out = tensor_grid(p.domain, std::max<std::size_t>(per_axis, 1));
      break;
    }
    case SamplingKind::Explicit:
      out = spec.points;
      break;
    case SamplingKind::SeededRandom:
      out = seeded_uniform(p.domain, spec.count, seed);
      break;
  }
  if (out.empty()) throw DomainError("parameter set is empty");
  for (const auto& mu : out)
    if (!p.contains(mu)) throw DomainError("parameter " + format_parameter(mu) + " outside the problem domain");
  return out;
}

inline std::vector<Parameter> training_parameters(const ProblemDefinition& p, const BenchmarkConfig& c) {
  return sample(p, c.training, c.seed);
}

inline std::vector<Parameter> test_parameters(const ProblemDefinition& p, const BenchmarkConfig& c) {
  return sample(p, c.test, test_seed(c.seed));
}

inline void check_disjoint(const std::vector<Parameter>& train, const std::vector<Parameter>& test, bool allow_overlap) {
  if (allow_overlap) return;
  const std::set<Parameter> seen(train.begin(), train.end());
  for (const auto& mu : test)
    if (seen.count(mu)) throw DomainError("test parameter " + format_parameter(mu) + " also appears in the training set");
}

inline json sampling_json(const SamplingSpec& s, std::uint64_t seed) {
  json j{{"kind", to_string(s.kind)}, {"count", s.count}};
  if (s.kind == SamplingKind::SeededRandom) j["seed"] = seed;
  return j;
}

inline json tolerances_json(const RomOptions& rom = {}) {
  const RiccatiOptions ric;
  const CoupledOptions cpl;
  return json{{"rom_newton_tolerance", rom.tolerance},
              {"rom_max_iterations", rom.max_iterations},
              {"rom_max_halvings", rom.max_halvings},
              {"riccati_tolerance", ric.tolerance},
              {"riccati_acceptance", ric.acceptance},
              {"riccati_max_iterations", ric.max_iterations},
              {"coupled_tolerance", cpl.tolerance},
              {"coupled_max_sweeps", cpl.max_sweeps},
              {"rank_tolerance", kRankTolerance},
              {"merge_tolerance", kMergeTolerance}};
}

inline json common_manifest(const ProblemDefinition& p, const BenchmarkConfig& c) {
  return json{{"tool_version", io::kToolVersion},
              {"problem_hash", io::problem_hash(p)},
              {"problem_name", p.name},
              {"seeds", {{"training", c.seed}, {"test", test_seed(c.seed)}}},
              {"tolerances", tolerances_json(c.rom)},
              {"threads", c.workers ? c.workers : worker_count()}};
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct TimingReport {
  double T_off = 0.0;
  double T_on = 0.0;
  double T_tot = 0.0;
  double T_avg = 0.0;
  std::optional<double> reference_total;
  std::optional<double> reference_avg;
  std::size_t test_count = 0;

  json to_json() const {
    json j{{"T_off", T_off}, {"T_on", T_on}, {"T_tot", T_tot}, {"T_avg", T_avg}};
    j["reference_total"] = reference_total ? json(*reference_total) : json(nullptr);
    j["reference_avg"] = reference_avg ? json(*reference_avg) : json(nullptr);
    j["test_count"] = test_count;
    return j;
  }
};

inline TimingReport make_timing(double t_off, double t_on, std::size_t count, std::optional<double> reference_total) {
  if (count == 0) throw DomainError("timing needs at least one test sample");
  TimingReport t;
  t.T_off = t_off;
  t.T_on = t_on;
  t.T_tot = t.T_off + t.T_on;
  t.T_avg = t.T_on / static_cast<double>(count);
  t.test_count = count;
  if (reference_total) {
    t.reference_total = *reference_total;
    t.reference_avg = *reference_total / static_cast<double>(count);
  }
  return t;
}

// ------------------------------------------------------------- stages

struct SnapshotStage {
  ProblemDefinition problem;
  SnapshotSet snapshots;
  double seconds = 0.0;
};

inline SnapshotStage run_snapshots(const ProblemDefinition& p, const std::vector<Parameter>& params, std::size_t workers = 0) {
  SnapshotStage s;
  s.problem = p;
  Stopwatch clock;
  s.snapshots = build_snapshots(p, params, workers);
  s.seconds = clock.seconds();
  return s;
}

struct TrainStage {
  PodBasis basis;
  TrainingOutcome outcome;
  double snapshot_seconds = 0.0;
  double basis_seconds = 0.0;
  double training_seconds = 0.0;
  double training_scale = 0.0;  // mean squared norm of the reduced training states

  double T_off() const { return snapshot_seconds + basis_seconds + training_seconds; }
};

inline Truncation truncation_of(const BenchmarkConfig& c) {
  if (c.r && c.energy) throw FormatError("give either --r or --energy, not both");
  if (c.r) return Truncation::rank(*c.r);
  if (c.energy) return Truncation::energy(*c.energy);
  throw FormatError("a basis size is required: --r or --energy");
}

inline TrainingOptions training_options(const BenchmarkConfig& c) {
  TrainingOptions o;
  if (!c.grid_lambda1.empty()) o.grid_lambda1 = c.grid_lambda1;
  if (!c.grid_lambda2.empty()) o.grid_lambda2 = c.grid_lambda2;
  o.rom = c.rom;
  o.workers = c.workers;
  return o;
}

inline TrainStage run_train(const ProblemDefinition& p, const SnapshotSet& snapshots, double snapshot_seconds,
                            const Truncation& mode, const TrainingOptions& options) {
  TrainStage t;
  t.snapshot_seconds = snapshot_seconds;
  Stopwatch basis_clock;
  t.basis = pod_basis(snapshots, mode);
  t.basis_seconds = basis_clock.seconds();
  Stopwatch train_clock;
  const TrainingData td = assemble_training(p, t.basis.V, snapshots);
  t.outcome = train_with_report(td, options);
  t.training_seconds = train_clock.seconds();
  t.outcome.model.basis_ref = t.basis.method_name() + ":r=" + std::to_string(t.basis.rank());
  t.training_scale = td.Xhat.squaredNorm() / static_cast<double>(td.samples());
  return t;
}

struct ReferenceStates {
  Matrix states;
  std::optional<double> total_seconds;  // set when timed
};

/// FOM solutions at the test parameters; timed runs are sequential after one
/// untimed warm-up solve.
inline ReferenceStates reference_states(const ProblemDefinition& p, const std::vector<Parameter>& params, bool timed,
                                        std::size_t workers = 0) {
  ReferenceStates out;
  if (!timed) {
    out.states = build_snapshots(p, params, workers).states;
    return out;
  }
  out.states.resize(p.state_dimension(), static_cast<Eigen::Index>(params.size()));
  (void)fom_solve(p, params.front());
  Stopwatch clock;
  for (std::size_t i = 0; i < params.size(); ++i) out.states.col(static_cast<Eigen::Index>(i)) = fom_solve(p, params[i]);
  out.total_seconds = clock.seconds();
  return out;
}

/// Wall time of the reduced solves alone, sequential, after one warm-up solve.
/// Failures are left to the error pass.
inline double time_rom_solves(const ReducedModel& m, const std::vector<Parameter>& params, const RomOptions& options) {
  auto solve = [&](const Parameter& mu) {
    try {
      return rom_solve(m, mu, options).xhat.size();
    } catch (const SolverError&) {
      return Eigen::Index{0};
    }
  };
  volatile Eigen::Index sink = solve(params.front());
  Stopwatch clock;
  for (const auto& mu : params) sink = sink + solve(mu);
  return clock.seconds();
}

struct EvalStage {
  std::vector<Parameter> params;
  ErrorReport errors;
  TimingReport timing;
};

inline EvalStage run_eval(const ReducedModel& m, const Matrix& v, const std::vector<Parameter>& params,
                          const ReferenceStates& reference, double t_off, const RomOptions& options) {
  EvalStage e;
  e.params = params;
  const double t_on = time_rom_solves(m, params, options);
  e.errors = relative_errors(m, v, params, reference.states, options);
  e.timing = make_timing(t_off, t_on, params.size(), reference.total_seconds);
  return e;
}

// ------------------------------------------------------------- CSV output

inline std::string parameter_header(std::size_t d) {
  std::string h;
  for (std::size_t j = 0; j < d; ++j) h += "mu_" + std::to_string(j + 1) + ",";
  return h;
}

inline std::string parameter_cells(const Parameter& mu) {
  std::string s;
  for (double v : mu) s += io::format_double(v) + ",";
  return s;
}

inline std::string results_csv(const EvalStage& e, std::size_t d) {
  std::ostringstream out;
  out << parameter_header(d) << "rel_error,rom_iterations,converged\n";
  for (std::size_t i = 0; i < e.params.size(); ++i)
    out << parameter_cells(e.params[i]) << io::format_double(e.errors.errors[i]) << ',' << e.errors.iterations[i] << ','
        << (e.errors.converged[i] ? 1 : 0) << '\n';
  return out.str();
}

inline json selection_json(const Selection& s) {
  json cands = json::array();
  for (const auto& c : s.candidates) {
    json j{{"lambda1", c.lambda1}, {"lambda2", c.lambda2}};
    j["mse"] = std::isfinite(c.mse) ? json(c.mse) : json(nullptr);
    if (!c.failure.empty()) j["failure"] = c.failure;
    cands.push_back(j);
  }
  return json{{"lambda1", s.lambda1}, {"lambda2", s.lambda2}, {"mse", s.mse}, {"candidates", cands}};
}

inline json train_manifest(const TrainStage& t, const ProblemDefinition& p, const BenchmarkConfig& c,
                           const std::string& archive_hash, const std::vector<Parameter>& train_params) {
  json j = common_manifest(p, c);
  j["basis_method"] = t.basis.method_name();
  if (c.energy) j["energy"] = *c.energy;
  j["singular_values"] = std::vector<double>(t.basis.singular_values.data(),
                                             t.basis.singular_values.data() + t.basis.singular_values.size());
  j["training_count"] = c.training.count;
  j["training_parameters"] = io::parameters_to_json(train_params);  // lets eval enforce disjointness
  j["training_mse"] = t.outcome.selection.mse;
  j["training_scale"] = t.training_scale;
  j["selection"] = selection_json(t.outcome.selection);
  j["rank_diagnostics"] = io::rank_report_to_json(t.outcome.diagnostics);
  j["timing"] = json{{"snapshots", t.snapshot_seconds},
                     {"basis", t.basis_seconds},
                     {"training", t.training_seconds},
                     {"T_off", t.T_off()}};
  j["snapshot_archive_hash"] = archive_hash;
  return j;
}

// ------------------------------------------------------------- commands

struct SnapshotCommandResult {
  SnapshotStage stage;
  std::vector<Parameter> params;
};

inline SnapshotCommandResult cmd_snapshots(const BenchmarkConfig& c) {
  if (c.out.empty()) throw FormatError("--out is required");
  SnapshotCommandResult res;
  const ProblemDefinition p = resolve_problem(c);
  res.params = training_parameters(p, c);
  res.stage = run_snapshots(p, res.params, c.workers);
  json extra = common_manifest(p, c);
  extra["sampling"] = sampling_json(c.training, c.seed);
  extra["wall_time_seconds"] = res.stage.seconds;
  io::save_snapshots(c.out, res.stage.snapshots, p, extra);
  return res;
}

/// Problem taken from the archive; a --problem given as well must match it.
inline TrainStage cmd_train(const BenchmarkConfig& c, const fs::path& archive_dir) {
  if (c.out.empty()) throw FormatError("--out is required");
  const io::SnapshotArchive a = io::load_snapshots(archive_dir);
  const std::string hash = a.manifest.at("problem_hash").get<std::string>();
  if (!c.problem.empty()) {
    const std::string given = io::problem_hash(resolve_problem(c));
    if (given != hash)
      throw FormatError("snapshot archive was built for problem " + hash + ", not for the given problem " + given);
  }
  const double snapshot_seconds = a.manifest.value("wall_time_seconds", 0.0);
  TrainStage t = run_train(a.problem, a.snapshots, snapshot_seconds, truncation_of(c), training_options(c));
  BenchmarkConfig recorded = c;
  recorded.training.count = a.snapshots.parameters.size();
  if (a.manifest.contains("seeds")) recorded.seed = a.manifest["seeds"].value("training", c.seed);
  json extra = train_manifest(t, a.problem, recorded, hash, a.snapshots.parameters);
  if (a.manifest.contains("sampling")) extra["training_sampling"] = a.manifest["sampling"];
  io::save_model(c.out, t.outcome.model, t.basis.V, a.problem, extra);
  return t;
}

struct EvalCommandResult {
  EvalStage stage;
  bool all_converged = true;
};

inline void write_eval_outputs(const fs::path& dir, const EvalStage& e, const ProblemDefinition& p, const BenchmarkConfig& c,
                               const std::string& csv_name = "results.csv", const std::string& timing_name = "timing.json") {
  fs::create_directories(dir);
  io::write_text(dir / csv_name, results_csv(e, p.d));
  json timing = e.timing.to_json();
  timing["er_avg"] = e.errors.er_avg;
  io::write_json(dir / timing_name, timing);
  json m = common_manifest(p, c);
  m["test_sampling"] = sampling_json(c.test, test_seed(c.seed));
  m["er_avg"] = e.errors.er_avg;
  m["samples_used"] = e.errors.used;
  m["all_converged"] = e.errors.all_converged();
  m["warnings"] = e.errors.warnings;
  m["reference_timed"] = c.reference;
  io::write_json(dir / (fs::path(csv_name).stem().string() + "_manifest.json"), m);
}

/// Writes results.csv and timing.json into --out (default: the model directory).
inline EvalCommandResult cmd_eval(const fs::path& model_dir, const BenchmarkConfig& c) {
  const io::ModelBundle b = io::load_model(model_dir);
  const auto params = test_parameters(b.problem, c);
  if (b.manifest.contains("training_parameters"))
    check_disjoint(io::parameters_from_json(b.manifest["training_parameters"]), params, c.allow_overlap);
  const double t_off = b.manifest.contains("timing") ? b.manifest["timing"].value("T_off", 0.0) : 0.0;
  const ReferenceStates ref = reference_states(b.problem, params, c.reference, c.workers);
  EvalCommandResult res;
  res.stage = run_eval(b.model, b.V, params, ref, t_off, c.rom);
  res.all_converged = res.stage.errors.all_converged();
  write_eval_outputs(c.out.empty() ? model_dir : c.out, res.stage, b.problem, c);
  return res;
}

// ------------------------------------------------------------- bench

/// r values compared per family, mirroring the table pairs.
inline std::vector<Eigen::Index> default_bench_ranks(const std::string& family) {
  if (family == "pale-ct") return {4, 8};
  if (family == "pale-dt") return {3, 6};
  if (family == "pare-ct") return {4, 6};
  if (family == "pale-coupled") return {8};
  throw FormatError("unknown benchmark family '" + family + "'");
}

struct BenchRow {
  Eigen::Index r = 0;
  double er_avg = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  bool all_converged = true;
  std::size_t used = 0;
  TimingReport timing;
};

struct BenchResult {
  ProblemDefinition problem;
  std::vector<BenchRow> rows;
  std::size_t training_count = 0;
  std::size_t test_count = 0;
};

inline std::string bench_summary_csv(const BenchResult& b) {
  std::ostringstream out;
  out << "family,n,r,training_count,test_count,er_avg,lambda1,lambda2,samples_used,all_converged\n";
  for (const auto& row : b.rows)
    out << b.problem.name << ',' << b.problem.n << ',' << row.r << ',' << b.training_count << ',' << b.test_count << ','
        << io::format_double(row.er_avg) << ',' << io::format_double(row.lambda1) << ',' << io::format_double(row.lambda2)
        << ',' << row.used << ',' << (row.all_converged ? 1 : 0) << '\n';
  return out.str();
}

/// Human-readable table with the timing columns.
inline std::string bench_table(const BenchResult& b) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-13s %5s %3s %12s %10s %10s %10s %12s %12s %10s\n", "family", "n", "r", "er_avg",
                "T_off[s]", "T_on[s]", "T_tot[s]", "T_avg[s]", "FOM avg[s]", "speedup");
  out << line;
  for (const auto& row : b.rows) {
    const double ref = row.timing.reference_avg.value_or(std::numeric_limits<double>::quiet_NaN());
    std::snprintf(line, sizeof line, "%-13s %5ld %3ld %12.4e %10.3f %10.4f %10.3f %12.4e %12.4e %10.1f\n",
                  b.problem.name.c_str(), static_cast<long>(b.problem.n), static_cast<long>(row.r), row.er_avg,
                  row.timing.T_off, row.timing.T_on, row.timing.T_tot, row.timing.T_avg, ref, ref / row.timing.T_avg);
    out << line;
  }
  return out.str();
}

/// snapshots -> train (every r on one snapshot set) -> eval on one test set.
/// Writes snapshots/, model_r<r>/, results_r<r>.csv, timing_r<r>.json,
/// summary.csv (no timing) and summary_timing.json under c.out.
inline BenchResult cmd_bench(const std::string& family, const BenchmarkConfig& config, std::vector<Eigen::Index> ranks = {}) {
  BenchmarkConfig c = config;
  c.problem = family;
  if (!is_family(family)) throw FormatError("unknown benchmark family '" + family + "'");
  if (ranks.empty()) ranks = c.r ? std::vector<Eigen::Index>{*c.r} : default_bench_ranks(family);
  if (c.out.empty()) throw FormatError("--out is required");
  BenchResult b;
  b.problem = resolve_problem(c);
  const auto train = training_parameters(b.problem, c);
  const auto test = test_parameters(b.problem, c);
  check_disjoint(train, test, c.allow_overlap);
  b.training_count = train.size();
  b.test_count = test.size();

  const SnapshotStage snaps = run_snapshots(b.problem, train, c.workers);
  json smeta = common_manifest(b.problem, c);
  smeta["sampling"] = sampling_json(c.training, c.seed);
  smeta["wall_time_seconds"] = snaps.seconds;
  io::save_snapshots(c.out / "snapshots", snaps.snapshots, b.problem, smeta);
  const ReferenceStates ref = reference_states(b.problem, test, c.reference, c.workers);

  json timing_all = json::object();
  for (Eigen::Index r : ranks) {
    BenchmarkConfig rc = c;
    rc.r = r;
    rc.energy.reset();
    rc.training.count = train.size();
    const TrainStage t = run_train(b.problem, snaps.snapshots, snaps.seconds, Truncation::rank(r), training_options(rc));
    io::save_model(c.out / ("model_r" + std::to_string(r)), t.outcome.model, t.basis.V, b.problem,
                   train_manifest(t, b.problem, rc, io::problem_hash(b.problem), train));
    const EvalStage e = run_eval(t.outcome.model, t.basis.V, test, ref, t.T_off(), c.rom);
    const std::string tag = "_r" + std::to_string(r);
    write_eval_outputs(c.out, e, b.problem, rc, "results" + tag + ".csv", "timing" + tag + ".json");
    BenchRow row;
    row.r = r;
    row.er_avg = e.errors.er_avg;
    row.lambda1 = t.outcome.model.lambda1;
    row.lambda2 = t.outcome.model.lambda2;
    row.all_converged = e.errors.all_converged();
    row.used = e.errors.used;
    row.timing = e.timing;
    timing_all["r=" + std::to_string(r)] = e.timing.to_json();
    b.rows.push_back(row);
  }
  io::write_text(c.out / "summary.csv", bench_summary_csv(b));
  io::write_json(c.out / "summary_timing.json", timing_all);
  json m = common_manifest(b.problem, c);
  m["family"] = family;
  m["n"] = b.problem.n;
  m["ranks"] = ranks;
  m["training_sampling"] = sampling_json(c.training, c.seed);
  m["test_sampling"] = sampling_json(c.test, test_seed(c.seed));
  io::write_json(c.out / "manifest.json", m);
  return b;
}

// ------------------------------------------------------------- sweep

struct SweepRow {
  std::size_t training_count = 0;
  double er_avg = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  bool increased = false;  // er_avg above the previous row
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::vector<Parameter>> sets;
  std::vector<std::string> exceptions;
};

inline std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "training_count,er_avg,lambda1,lambda2,increased\n";
  for (const auto& row : s.rows)
    out << row.training_count << ',' << io::format_double(row.er_avg) << ',' << io::format_double(row.lambda1) << ','
        << io::format_double(row.lambda2) << ',' << (row.increased ? 1 : 0) << '\n';
  return out.str();
}

/// Nested training sets cut from one pool of size max(sizes); the pool follows
/// the training sampling spec and is shuffled with the seed.
inline SweepResult cmd_sweep(const BenchmarkConfig& config, const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw DomainError("sweep needs at least one training size");
  if (config.out.empty()) throw FormatError("--out is required");
  BenchmarkConfig c = config;
  const ProblemDefinition p = resolve_problem(c);
  c.training.count = *std::max_element(sizes.begin(), sizes.end());
  const auto pool = training_parameters(p, c);
  SweepResult s;
  s.sets = nested_sets(pool, sizes, c.seed);
  const auto test = test_parameters(p, c);
  check_disjoint(pool, test, c.allow_overlap);
  const SnapshotSet all = build_snapshots(p, pool, c.workers);
  const ReferenceStates ref = reference_states(p, test, false, c.workers);
  const Truncation mode = truncation_of(c);
  for (const auto& set : s.sets) {
    SnapshotSet sub;
    sub.parameters = set;
    sub.states.resize(all.states.rows(), static_cast<Eigen::Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto at = std::find(pool.begin(), pool.end(), set[i]) - pool.begin();
      sub.states.col(static_cast<Eigen::Index>(i)) = all.states.col(at);
    }
    const TrainStage t = run_train(p, sub, 0.0, mode, training_options(c));
    const ErrorReport e = relative_errors(t.outcome.model, t.basis.V, test, ref.states, c.rom);
    SweepRow row;
    row.training_count = set.size();
    row.er_avg = e.er_avg;
    row.lambda1 = t.outcome.model.lambda1;
    row.lambda2 = t.outcome.model.lambda2;
    if (!s.rows.empty() && row.er_avg > s.rows.back().er_avg) {
      row.increased = true;
      s.exceptions.push_back("er_avg rose from " + io::format_double(s.rows.back().er_avg) + " at k=" +
                             std::to_string(s.rows.back().training_count) + " to " + io::format_double(row.er_avg) +
                             " at k=" + std::to_string(row.training_count));
    }
    s.rows.push_back(row);
  }
  io::write_text(c.out / "sweep.csv", sweep_csv(s));
  json m = common_manifest(p, c);
  m["sizes"] = sizes;
  m["training_sampling"] = sampling_json(c.training, c.seed);
  m["test_sampling"] = sampling_json(c.test, test_seed(c.seed));
  m["exceptions"] = s.exceptions;
  io::write_json(c.out / "manifest.json", m);
  return s;
}

// ------------------------------------------------------------- intrusive comparison

struct ComparisonResult {
  ProblemDefinition problem;
  std::vector<Parameter> params;
  ErrorReport opinf;
  ErrorReport intrusive;
  TrainStage train;
};

inline std::string comparison_csv(const ComparisonResult& r) {
  std::ostringstream out;
  out << parameter_header(r.problem.d) << "opinf_rel_error,intrusive_rel_error,opinf_converged,intrusive_converged\n";
  for (std::size_t i = 0; i < r.params.size(); ++i)
    out << parameter_cells(r.params[i]) << io::format_double(r.opinf.errors[i]) << ','
        << io::format_double(r.intrusive.errors[i]) << ',' << (r.opinf.converged[i] ? 1 : 0) << ','
        << (r.intrusive.converged[i] ? 1 : 0) << '\n';
  return out.str();
}

/// OpInf and Galerkin models on one POD basis and one test set.
inline ComparisonResult cmd_compare_intrusive(const BenchmarkConfig& c) {
  if (c.out.empty()) throw FormatError("--out is required");
  ComparisonResult res;
  res.problem = resolve_problem(c);
  const auto train = training_parameters(res.problem, c);
  res.params = test_parameters(res.problem, c);
  check_disjoint(train, res.params, c.allow_overlap);
  const SnapshotStage snaps = run_snapshots(res.problem, train, c.workers);
  res.train = run_train(res.problem, snaps.snapshots, snaps.seconds, truncation_of(c), training_options(c));
  const TrainStage& t = res.train;
  const ReducedModel galerkin = intrusive_rom(res.problem, t.basis.V);
  const ReferenceStates ref = reference_states(res.problem, res.params, false, c.workers);
  res.opinf = relative_errors(t.outcome.model, t.basis.V, res.params, ref.states, c.rom);
  res.intrusive = relative_errors(galerkin, t.basis.V, res.params, ref.states, c.rom);
  io::write_text(c.out / "comparison.csv", comparison_csv(res));
  json m = common_manifest(res.problem, c);
  m["r"] = t.basis.rank();
  m["training_sampling"] = sampling_json(c.training, c.seed);
  m["test_sampling"] = sampling_json(c.test, test_seed(c.seed));
  m["er_avg_opinf"] = res.opinf.er_avg;
  m["er_avg_intrusive"] = res.intrusive.er_avg;
  m["lambda1"] = t.outcome.model.lambda1;
  m["lambda2"] = t.outcome.model.lambda2;
  m["training_mse"] = t.outcome.selection.mse;
  m["training_scale"] = t.training_scale;
  io::write_json(c.out / "comparison.json", m);
  return res;
}

}  // namespace opinf::pipeline
