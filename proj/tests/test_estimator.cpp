#include <gtest/gtest.h>

#include <bit>
#include <numeric>
#include <random>
#include <sstream>

#include <stokes_afem/estimator.hpp>

using namespace stokes_afem;

TEST(Kernels, SingleCellAgainstSymbolicValues) {
  // u = (x^2, 0), p = 0, lambda = 1 on the reference triangle, h_T^2 = 2
  const CellGeometry g({Vertex{0, 0}, Vertex{1, 0}, Vertex{0, 1}});
  std::array<Vec2, 6> u{};
  const std::array<double, 6> ux{0, 1, 0, 0.25, 0, 0.25};
  for (int i = 0; i < 6; ++i) u[i] = {ux[i], 0.0};
  const double h = std::sqrt(2.0);
  const double vol = h * h * cell_residual_sq(g, u, {0, 0, 0}, 1.0);
  const double div = h * cell_divergence_trace_sq(g, u);
  EXPECT_NEAR(vol, 71.0 / 15.0, 1e-13);
  EXPECT_NEAR(div, 8.0 / 3.0 + 4.0 * std::sqrt(2.0) / 3.0, 1e-13);
  EXPECT_NEAR(vol + div, 9.2856180831641267317, 1e-13);
  // (div u)^2 = 4x^2 integrates to 1/3
  EXPECT_NEAR(cell_divergence_sq(g, u), 1.0 / 3.0, 1e-14);
}

TEST(Kernels, PressureGradientEntersVolumeResidual) {
  // u = 0, p = x: residual is -grad p = (-1, 0), squared integral = area
  const CellGeometry g({Vertex{0, 0}, Vertex{2, 0}, Vertex{0, 1}});
  const std::array<Vec2, 6> u{};
  EXPECT_NEAR(cell_residual_sq(g, u, {0, 2, 0}, 5.0), 1.0, 1e-14);
}

TEST(Indicators, ZeroFieldGivesZero) {
  const THSpace s(uniform_refine(create_initial_mesh(DomainTag::lshape)).first);
  const auto ind = compute_indicators(s, CoefficientVector::zero(s.n_u(), s.n_p()), 30.0);
  ASSERT_EQ(ind.size(), static_cast<std::size_t>(s.mesh().n_cells()));
  EXPECT_EQ(global_eta(ind), 0.0);
  EXPECT_TRUE(mark_dorfler(ind, 0.5).empty());
}

TEST(Indicators, ConstantPressureGivesZero) {
  const THSpace s(create_initial_mesh(DomainTag::slit));
  CoefficientVector c = CoefficientVector::zero(s.n_u(), s.n_p());
  c.p.setConstant(3.0);
  EXPECT_NEAR(global_eta(compute_indicators(s, c, 1.0)), 0.0, 1e-12);
}

TEST(Indicators, DimensionMismatchThrows) {
  const THSpace s(create_initial_mesh(DomainTag::square));
  EXPECT_THROW(compute_indicators(s, CoefficientVector::zero(s.n_u() + 1, s.n_p()), 1.0), std::invalid_argument);
}

TEST(Indicators, ComponentsAddUpAndScaleQuadratically) {
  const THSpace s(uniform_refine(create_initial_mesh(DomainTag::lshape)).first);
  const auto ops = assemble(s);
  const auto pair = solve_evp(ops, 1, 0.0, 1e-11).front();
  const auto ind = compute_indicators(s, pair);
  for (std::size_t t = 0; t < ind.size(); ++t) {
    EXPECT_GE(ind.vol[t], 0.0);
    EXPECT_GE(ind.jump[t], 0.0);
    EXPECT_GE(ind.div[t], 0.0);
    EXPECT_DOUBLE_EQ(ind.eta_sq[t], ind.vol[t] + ind.jump[t] + ind.div[t]);
  }
  EXPECT_GT(global_eta(ind), 0.0);
  const auto scaled = compute_indicators(s, 2.0 * pair.c, pair.lambda);
  EXPECT_NEAR(global_eta(scaled), 2.0 * global_eta(ind), 1e-12 * global_eta(ind));
}

TEST(Indicators, BoundaryEdgesCarryNoJump) {
  const THSpace s(uniform_refine(create_initial_mesh(DomainTag::square)).first);
  const auto pair = solve_evp(assemble(s), 1, 0.0, 1e-11).front();
  int interior = 0;
  for (int e = 0; e < s.mesh().n_edges(); ++e) {
    if (s.mesh().edge(e).n_cells != 2) EXPECT_EQ(edge_jump_sq(s, pair.c.u, e), 0.0);
    else interior += edge_jump_sq(s, pair.c.u, e) > 0.0;
  }
  EXPECT_GT(interior, 0);
}

TEST(GlobalEta, ThreeFourFive) {
  const std::vector<double> v{9.0, 16.0};
  EXPECT_DOUBLE_EQ(global_eta(v), 5.0);
  Indicators ind;
  ind.eta_sq = {9.0, 16.0, 0.0};
  EXPECT_DOUBLE_EQ(subset_eta(ind, std::vector<int>{1}), 4.0);
}

TEST(Dorfler, SmallExamples) {
  EXPECT_EQ(mark_dorfler(std::vector<double>{9, 4, 4, 1}, 0.5), std::vector<int>{0});
  EXPECT_EQ(mark_dorfler(std::vector<double>{4, 4, 1}, 0.5), (std::vector<int>{0, 1}));
  // ties broken by ascending cell id
  EXPECT_EQ(mark_dorfler(std::vector<double>{1, 1, 1, 1}, 0.5), (std::vector<int>{0, 1}));
  EXPECT_EQ(mark_dorfler(std::vector<double>{0, 0}, 0.5), std::vector<int>{});
}

TEST(Dorfler, ThetaOutsideOpenIntervalThrows) {
  const std::vector<double> v{1, 2};
  for (double theta : {0.0, 1.0, -0.1, 1.5}) EXPECT_THROW(mark_dorfler(v, theta), std::invalid_argument);
}

TEST(Dorfler, MinimalCardinalityByExhaustion) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> val(0.0, 1.0), th(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 10;
    std::vector<double> eta(n);
    for (auto& v : eta) v = val(gen) * val(gen);
    const double theta = th(gen);
    const auto marked = mark_dorfler(eta, theta);
    const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
    double got = 0.0;
    for (int c : marked) got += eta[c];
    EXPECT_GE(got, theta * total);
    std::size_t best = n;
    for (int mask = 1; mask < (1 << n); ++mask) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += (mask >> i & 1) ? eta[i] : 0.0;
      if (s >= theta * total) best = std::min<std::size_t>(best, std::popcount(static_cast<unsigned>(mask)));
    }
    EXPECT_EQ(marked.size(), best) << "trial " << trial;
    EXPECT_TRUE(std::is_sorted(marked.begin(), marked.end()));
  }
}

TEST(Equivalence, DiagnosticsArePositiveForEigenfunction) {
  const THSpace s(uniform_refine(create_initial_mesh(DomainTag::square)).first);
  const auto pair = solve_evp(assemble(s), 1, 0.0, 1e-11).front();
  const auto d = equivalence_diagnostics(s, pair.c);
  EXPECT_GT(d.div_sq, 0.0);
  EXPECT_GT(d.weighted_jump, 0.0);
  EXPECT_NEAR(d.div_jump_ratio, d.div_sq / d.weighted_jump, 1e-15);
  EXPECT_GT(d.trace_ratio_max, 0.0);
}

TEST(IndicatorCsv, HeaderAndRows) {
  Indicators ind;
  ind.eta_sq = {1.5, 2.0};
  ind.vol = {1.0, 1.0};
  ind.jump = {0.5, 0.0};
  ind.div = {0.0, 1.0};
  std::ostringstream out;
  write_indicators_csv(out, ind);
  EXPECT_EQ(out.str(), "cell_id,eta_sq,vol,jump,div\n0,1.5,1,0.5,0\n1,2,1,0,1\n");
}
