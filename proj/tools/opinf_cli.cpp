// opinf: snapshots | train | eval | bench | sweep | compare-intrusive

#include "opinf/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace opinf;
using namespace opinf::pipeline;

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw FormatError("not a number in list: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

struct Flags {
  std::string problem, out, grid1, grid2, sampling = "default", snapshots, model, family;
  long n = 0, r = 0;
  double energy = -1.0;
  std::size_t train_count = 200, test_count = 1000;
  std::uint64_t seed = 0;
  bool reference = false, allow_overlap = false;
  std::vector<long> ranks;
  std::vector<std::size_t> sizes;

  BenchmarkConfig config() const {
    BenchmarkConfig c;
    c.problem = problem;
    if (n > 0) c.n = n;
    c.training = {parse_sampling(sampling), train_count, {}};
    c.test = {SamplingKind::SeededRandom, test_count, {}};
    if (r > 0) c.r = r;
    if (energy >= 0.0) c.energy = energy;
    c.grid_lambda1 = parse_list(grid1);
    c.grid_lambda2 = parse_list(grid2);
    c.out = out;
    c.seed = seed;
    c.reference = reference;
    c.allow_overlap = allow_overlap;
    return c;
  }
};

void add_problem(CLI::App* cmd, Flags& f, bool required) {
  auto* opt = cmd->add_option("--problem", f.problem, "problem-definition JSON or benchmark family (pale-ct, pale-dt, pale-coupled, pare-ct)");
  if (required) opt->required();
  cmd->add_option("--n", f.n, "matrix order for benchmark families");
}

void add_training(CLI::App* cmd, Flags& f) {
  cmd->add_option("--train-count", f.train_count, "number of training parameters")->capture_default_str();
  cmd->add_option("--train-sampling", f.sampling, "default | log-spaced | uniform-grid | seeded-random")->capture_default_str();
  cmd->add_option("--seed", f.seed, "seed for every random draw")->capture_default_str();
}

void add_basis(CLI::App* cmd, Flags& f) {
  cmd->add_option("--r", f.r, "reduced dimension");
  cmd->add_option("--energy", f.energy, "POD energy tolerance in [0, 1)");
  cmd->add_option("--grid-lambda1", f.grid1, "comma-separated lambda1 grid");
  cmd->add_option("--grid-lambda2", f.grid2, "comma-separated lambda2 grid");
}

void add_test(CLI::App* cmd, Flags& f) {
  cmd->add_option("--test-count", f.test_count, "number of seeded random test parameters")->capture_default_str();
  cmd->add_flag("--allow-overlap", f.allow_overlap, "permit test parameters that coincide with training ones");
}

void print_timing(const TimingReport& t) {
  std::cout << "T_off " << t.T_off << " s, T_on " << t.T_on << " s, T_tot " << t.T_tot << " s, T_avg " << t.T_avg << " s";
  if (t.reference_avg) std::cout << ", FOM avg " << *t.reference_avg << " s";
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator inference for parametric matrix equations"};
  app.require_subcommand(1);
  Flags f;

  auto* snaps = app.add_subcommand("snapshots", "solve the full-order equations at the training parameters");
  add_problem(snaps, f, true);
  add_training(snaps, f);
  snaps->add_option("--out", f.out, "archive directory")->required();

  auto* train = app.add_subcommand("train", "build a POD basis and infer reduced operators");
  train->add_option("--snapshots", f.snapshots, "snapshot archive directory")->required();
  add_problem(train, f, false);
  add_basis(train, f);
  train->add_option("--out", f.out, "model directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a model on seeded random test parameters");
  eval->add_option("--model", f.model, "model directory")->required();
  add_test(eval, f);
  eval->add_option("--seed", f.seed, "seed for the test draw")->capture_default_str();
  eval->add_flag("--reference", f.reference, "also time the full-order solves");
  eval->add_option("--out", f.out, "output directory (default: the model directory)");

  auto* bench = app.add_subcommand("bench", "snapshots, training and evaluation for a benchmark family");
  bench->add_option("family", f.family, "pale-ct | pale-dt | pale-coupled | pare-ct")->required();
  bench->add_option("--n", f.n, "matrix order");
  add_training(bench, f);
  add_test(bench, f);
  bench->add_option("--r", f.ranks, "reduced dimensions (comma-separated)")->delimiter(',');
  bench->add_option("--grid-lambda1", f.grid1, "comma-separated lambda1 grid");
  bench->add_option("--grid-lambda2", f.grid2, "comma-separated lambda2 grid");
  bench->add_flag("--reference", f.reference, "also time the full-order solves");
  bench->add_option("--out", f.out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "error against the number of nested training parameters");
  add_problem(sweep, f, true);
  add_training(sweep, f);
  add_test(sweep, f);
  add_basis(sweep, f);
  sweep->add_option("--sizes", f.sizes, "ascending training sizes (comma-separated)")->delimiter(',')->required();
  sweep->add_option("--out", f.out, "output directory")->required();

  auto* compare = app.add_subcommand("compare-intrusive", "OpInf against Galerkin projection on a shared basis");
  add_problem(compare, f, true);
  add_training(compare, f);
  add_test(compare, f);
  add_basis(compare, f);
  compare->add_option("--out", f.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*snaps) {
      const auto res = cmd_snapshots(f.config());
      const auto& sn = res.stage.snapshots;
      std::cout << "wrote " << sn.count() << " snapshots of dimension " << sn.states.rows() << " to " << f.out;
      if (!sn.residuals.empty())
        std::cout << " (max relative residual " << *std::max_element(sn.residuals.begin(), sn.residuals.end()) << ")";
      std::cout << '\n';
    } else if (*train) {
      const auto t = cmd_train(f.config(), f.snapshots);
      std::cout << "r = " << t.basis.rank() << ", lambda1 = " << t.outcome.model.lambda1
                << ", lambda2 = " << t.outcome.model.lambda2 << ", training mse = " << t.outcome.selection.mse
                << ", rank D = " << t.outcome.diagnostics.rank_D << "/" << t.outcome.diagnostics.cols_D << '\n';
    } else if (*eval) {
      const auto res = cmd_eval(f.model, f.config());
      std::cout << "er_avg = " << res.stage.errors.er_avg << " over " << res.stage.errors.used << " of "
                << res.stage.params.size() << " samples\n";
      print_timing(res.stage.timing);
      for (const auto& w : res.stage.errors.warnings) std::cerr << "warning: " << w << '\n';
      if (!res.all_converged) return 2;
    } else if (*bench) {
      std::vector<Eigen::Index> ranks(f.ranks.begin(), f.ranks.end());
      const auto b = cmd_bench(f.family, f.config(), ranks);
      std::cout << bench_table(b);
      for (const auto& row : b.rows)
        if (!row.all_converged) return 2;
    } else if (*sweep) {
      const auto s = cmd_sweep(f.config(), f.sizes);
      std::cout << sweep_csv(s);
      for (const auto& e : s.exceptions) std::cerr << "note: " << e << '\n';
    } else if (*compare) {
      const auto c = cmd_compare_intrusive(f.config());
      std::cout << "er_avg opinf = " << c.opinf.er_avg << ", intrusive = " << c.intrusive.er_avg << '\n';
    }
  } catch (const opinf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
