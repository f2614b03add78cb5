// Offline/online walk-through on a user-supplied problem file: snapshots,
// POD, inference, then ROM error and Galerkin comparison on random parameters.
//
//   heat_chain_demo [problem.json] [r]

#include "opinf/intrusive.hpp"
#include "opinf/io.hpp"
#include "opinf/sampling.hpp"

#include <cstdio>
#include <cstdlib>

#ifndef OPINF_DEMO_DATA
#define OPINF_DEMO_DATA "."
#endif

int main(int argc, char** argv) {
  using namespace opinf;
  const std::string path = argc > 1 ? argv[1] : OPINF_DEMO_DATA "/heat_chain.json";
  const Eigen::Index r = argc > 2 ? std::atol(argv[2]) : 4;
  try {
    const auto problem = io::load_problem(path);
    std::printf("%s: %s, n = %ld, state dimension %ld\n", problem.name.c_str(), to_string(problem.kind).c_str(),
                static_cast<long>(problem.n), static_cast<long>(problem.state_dimension()));

    const auto train_mu = default_training_set(problem, 40);
    const auto snapshots = build_snapshots(problem, train_mu);
    const auto basis = pod_basis(snapshots, r);
    std::printf("leading singular values:");
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(6, basis.singular_values.size()); ++i)
      std::printf(" %.3e", basis.singular_values[i]);
    std::printf("\n");

    const auto model = train(problem, basis, snapshots);
    const auto galerkin = intrusive_rom(problem, basis.V);
    std::printf("r = %ld, lambda1 = %g, lambda2 = %g\n", static_cast<long>(r), model.lambda1, model.lambda2);

    const auto test_mu = seeded_uniform(problem.domain, 10, 7);
    Matrix reference(problem.state_dimension(), static_cast<Eigen::Index>(test_mu.size()));
    for (std::size_t i = 0; i < test_mu.size(); ++i) reference.col(static_cast<Eigen::Index>(i)) = fom_solve(problem, test_mu[i]);
    const auto opinf_err = relative_errors(model, basis.V, test_mu, reference);
    const auto galerkin_err = relative_errors(galerkin, basis.V, test_mu, reference);

    std::printf("%10s %14s %14s\n", "mu", "opinf", "intrusive");
    for (std::size_t i = 0; i < test_mu.size(); ++i)
      std::printf("%10.4f %14.3e %14.3e\n", test_mu[i][0], opinf_err.errors[i], galerkin_err.errors[i]);
    std::printf("er_avg    %14.3e %14.3e\n", opinf_err.er_avg, galerkin_err.er_avg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
