// End-to-end run of the unit-box benchmark: u = |x|^2/2 pushes the uniform
// density onto the uniform density, so every discrete quantity is known in
// closed form and the solver's behavior is easy to eyeball.

#include <cstdio>

#include "ampere/transport.hpp"

using namespace ampere;

int main() {
  const Benchmark b = quadratic_benchmark();
  const double h = 0.125;
  const BenchmarkInstance inst = instantiate(b, h, 1);
  std::printf("%s\n", b.exact.description.c_str());
  std::printf("h = %g, %zu sites, %zu stencil directions, epsilon = %.3g\n\n",
              h, inst.grid.size(), inst.stencil.directions.size(),
              inst.data.epsilon);

  const SolveReport rep = solve(inst.grid, inst.data, inst.stencil);
  std::printf("newton: converged=%d after %d iterations, residual %.3e\n",
              rep.converged ? 1 : 0, rep.iterations, rep.final_residual_sup);
  std::printf("residual history:");
  for (double r : rep.residual_history) std::printf(" %.2e", r);
  std::printf("\n\n");

  const ResidualReport res = residual(rep.solution, inst.data, inst.stencil);
  std::printf("sum of cell masses  %.15f\n", res.total_omega);
  std::printf("image integral      %.15f\n", inst.data.target_mass);
  std::printf("sup |u_h - u|       %.3e   (benchmark is reproduced exactly;\n",
              sup_error(rep.solution, b.exact, true));
  std::printf("                               this is solver noise, not a\n");
  std::printf("                               discretization error)\n");
  std::printf("sup gradient error  %.3e   (first order: boundary cells are\n",
              sup_error_grad(rep.solution, b.exact, inst.stencil));
  std::printf("                               clipped by the image)\n\n");

  std::printf("diagonal profile (normalized to u(center) = 0):\n");
  std::printf("%8s %14s %14s %12s %12s\n", "x", "u_h", "u-exact-shift",
              "grad_x", "grad_y");
  const int n = static_cast<int>(std::lround(1.0 / h));
  const double shift = b.exact.u({0.5, 0.5});
  for (int i = 1; i < n; ++i) {
    const GridIndex s{i, i};
    const Vec2 p = inst.grid.position(s);
    const auto g = select_gradient(rep.solution, s, inst.stencil);
    std::printf("%8.3f %14.9f %14.9f %12.6f %12.6f\n", p.x,
                rep.solution.eval(s), b.exact.u(p) - shift,
                g ? g->x : 0.0, g ? g->y : 0.0);
  }
  return rep.converged ? 0 : 1;
}
