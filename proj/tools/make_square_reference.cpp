// Reference first eigenvalue on the unit square: uniform refinement of the
// criss-cross mesh and Richardson extrapolation of the last three levels.
//
//   make_square_reference [levels=6] [out=tests/fixtures/square_reference.json]

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include <stokes_afem/assembly.hpp>
#include <stokes_afem/eigsolve.hpp>
#include <stokes_afem/mesh.hpp>
#include <stokes_afem/th_space.hpp>

using namespace stokes_afem;

int main(int argc, char** argv) {
  const int levels = argc > 1 ? std::stoi(argv[1]) : 6;
  const std::string out = argc > 2 ? argv[2] : "tests/fixtures/square_reference.json";
  if (levels < 2) {
    std::cerr << "need at least 2 refinement levels\n";
    return 2;
  }

  Mesh mesh = create_initial_mesh(DomainTag::square);
  std::vector<double> lambdas;
  std::vector<int> dofs;
  for (int l = 0; l <= levels; ++l) {
    if (l > 0) mesh = uniform_refine(mesh).first;
    const THSpace space(mesh);
    const auto ops = assemble(space);
    const auto pair = solve_evp(ops, 1, 0.0, 1e-11).front();
    lambdas.push_back(pair.lambda);
    dofs.push_back(space.n_u() + space.n_p());
    std::printf("level %d  dofs %d  lambda %.14f\n", l, dofs.back(), pair.lambda);
  }

  // h halves per level; observed order from the last three levels
  const std::size_t n = lambdas.size();
  const double d1 = lambdas[n - 2] - lambdas[n - 3];
  const double d2 = lambdas[n - 1] - lambdas[n - 2];
  const double order = std::log2(std::abs(d1 / d2));
  const double factor = std::pow(2.0, order);
  const double extrapolated = (factor * lambdas[n - 1] - lambdas[n - 2]) / (factor - 1.0);
  const double fixed4 = (16.0 * lambdas[n - 1] - lambdas[n - 2]) / 15.0;
  std::printf("observed order %.4f  extrapolated %.14f  (order-4 value %.14f)\n", order, extrapolated, fixed4);

  nlohmann::json j{{"domain", "square"},
                   {"method", "uniform refinement + Richardson extrapolation of the last three levels"},
                   {"levels", levels},
                   {"dofs", dofs},
                   {"lambdas", lambdas},
                   {"observed_order", order},
                   {"lambda_reference", extrapolated},
                   {"uncertainty", std::abs(extrapolated - fixed4) + std::abs(d2) / (factor - 1.0) * 0.1}};
  std::ofstream f(out);
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return 2;
  }
  f << j.dump(2) << '\n';
  return 0;
}
