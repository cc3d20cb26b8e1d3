#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include <stokes_afem/assembly.hpp>

using namespace stokes_afem;

namespace {

double integrate_on_reference(const std::function<double(double, double)>& f) {
  const auto& rule = triangle_rule();
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.points[q][1], rule.points[q][2]);
  return s;
}

CellGeometry reference_cell() { return CellGeometry({Vertex{0, 0}, Vertex{1, 0}, Vertex{0, 1}}); }

}  // namespace

TEST(Quadrature, TriangleRuleIsExactForDegreeFour) {
  EXPECT_NEAR(integrate_on_reference([](double x, double y) { return x * x * y * y; }), 1.0 / 180.0, 1e-15);
  EXPECT_NEAR(integrate_on_reference([](double x, double) { return x * x * x * x; }), 1.0 / 30.0, 1e-15);
  EXPECT_NEAR(integrate_on_reference([](double, double) { return 1.0; }), 0.5, 1e-15);
  EXPECT_EQ(triangle_rule().degree, 4);
}

TEST(Quadrature, EdgeRuleIsExactForDegreeFive) {
  const auto& rule = edge_rule();
  double s4 = 0.0, s5 = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double t = rule.points[q][1];
    s4 += rule.weights[q] * std::pow(t, 4);
    s5 += rule.weights[q] * std::pow(t, 5);
  }
  EXPECT_NEAR(s4, 1.0 / 5.0, 1e-15);
  EXPECT_NEAR(s5, 1.0 / 6.0, 1e-15);
}

TEST(ElementMatrices, P1PressureMassOnReferenceCell) {
  const auto em = element_matrices(reference_cell());
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(em.pressure_mass(j, k), j == k ? 1.0 / 12.0 : 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(em.pressure_integral[j], 1.0 / 6.0, 1e-15);
  }
}

TEST(ElementMatrices, StiffnessAnnihilatesConstantsAndMassSumsToArea) {
  const CellGeometry g({Vertex{0.2, 0.1}, Vertex{1.3, 0.4}, Vertex{0.5, 1.7}});
  const auto em = element_matrices(g);
  const Eigen::Matrix<double, 6, 1> one = Eigen::Matrix<double, 6, 1>::Ones();
  EXPECT_LT((em.stiffness * one).norm(), 1e-13);
  EXPECT_NEAR(one.dot(em.mass * one), g.area, 1e-14);
  EXPECT_LT((em.stiffness - em.stiffness.transpose()).norm(), 1e-14);
  // -(div v, 1) = 0 for the constant vector field
  Eigen::Matrix<double, 12, 1> ex = Eigen::Matrix<double, 12, 1>::Zero();
  for (int i = 0; i < 6; ++i) ex[2 * i] = 1.0;
  EXPECT_LT((em.divergence * ex).norm(), 1e-14);
}

TEST(Assemble, StiffnessOfInterpolantOnInitialSquare) {
  // a(Iu, Iu) for u = (x(1-x)y(1-y), 0), exact value on the 4-cell mesh is 19/1024
  const THSpace s(create_initial_mesh(DomainTag::square));
  const auto ops = assemble(s);
  const auto bubble = [](double x, double y) { return Vec2{x * (1 - x) * y * (1 - y), 0.0}; };
  const auto c = interpolate(s, bubble, nullptr);
  EXPECT_NEAR(form_eval(ops, FormKind::a, c, c), 19.0 / 1024.0, 1e-15);
}

TEST(Assemble, StiffnessOfInterpolantConverges) {
  const auto bubble = [](double x, double y) { return Vec2{x * (1 - x) * y * (1 - y), 0.0}; };
  Mesh m = create_initial_mesh(DomainTag::square);
  double prev = INFINITY;
  for (int l = 0; l < 4; ++l) {
    const THSpace s(m);
    const auto ops = assemble(s);
    const auto c = interpolate(s, bubble, nullptr);
    const double err = std::abs(form_eval(ops, FormKind::a, c, c) - 1.0 / 45.0);
    EXPECT_LT(err, prev);
    prev = err;
    m = uniform_refine(m).first;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Assemble, PressureIntegralsSumToArea) {
  for (auto [tag, area] : {std::pair{DomainTag::square, 1.0}, {DomainTag::lshape, 3.0}, {DomainTag::slit, 4.0}}) {
    const auto ops = assemble(THSpace(uniform_refine(create_initial_mesh(tag)).first));
    EXPECT_NEAR(ops.m_p.sum(), area, 1e-12);
    EXPECT_NEAR(Eigen::VectorXd::Ones(ops.n_p()).dot(ops.Mp * Eigen::VectorXd::Ones(ops.n_p())), area, 1e-12);
  }
}

TEST(Assemble, MatricesAreSymmetricAndDefinite) {
  const auto ops = assemble(THSpace(uniform_refine(create_initial_mesh(DomainTag::lshape)).first));
  const SparseMatrix at = ops.A.transpose(), mt = ops.M.transpose();
  EXPECT_LT((ops.A - at).norm(), 1e-13);
  EXPECT_LT((ops.M - mt).norm(), 1e-15);
  Eigen::SimplicialLLT<SparseMatrix> a(ops.A), m(ops.M);
  EXPECT_EQ(a.info(), Eigen::Success);
  EXPECT_EQ(m.info(), Eigen::Success);
}

TEST(Assemble, ConstantPressureIsInKernelOfDivergenceTranspose) {
  // (div v, 1) = 0 for every v with zero boundary values
  for (auto tag : {DomainTag::square, DomainTag::lshape, DomainTag::slit}) {
    const auto ops = assemble(THSpace(uniform_refine(create_initial_mesh(tag)).first));
    const Eigen::VectorXd btq = ops.B.transpose() * Eigen::VectorXd::Ones(ops.n_p());
    EXPECT_LT(btq.norm(), 1e-13);
  }
}

TEST(Assemble, DivergenceFormMatchesIntegrationByParts) {
  const THSpace s(uniform_refine(create_initial_mesh(DomainTag::square)).first);
  const auto ops = assemble(s);
  const auto c = interpolate(s, [](double x, double y) { return Vec2{x * (1 - x) * y * (1 - y), x * y * (1 - y) * (1 - x)}; },
                             [](double x, double y) { return x - 2 * y; });
  // integrate by parts: -(div v, q) = (v, grad q) because v vanishes on the boundary
  const double via_b = form_eval(ops, FormKind::b, c, c);
  double direct = 0.0;
  const auto& rule = triangle_rule();
  for (int t = 0; t < s.mesh().n_cells(); ++t) {
    const auto g = s.geometry(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto v = evaluate_in_cell(s, c, t, rule.points[q]);
      direct += rule.weights[q] * 2.0 * g.area * (v.velocity[0] * 1.0 + v.velocity[1] * -2.0);
    }
  }
  EXPECT_NEAR(via_b, direct, 1e-14);
}

TEST(FormEval, GraphNormAndDimensionChecks) {
  const auto ops = assemble(THSpace(create_initial_mesh(DomainTag::lshape)));
  const auto zero = CoefficientVector::zero(ops.n_u(), ops.n_p());
  EXPECT_EQ(graph_norm(ops, zero), 0.0);
  CoefficientVector c{Eigen::VectorXd::LinSpaced(ops.n_u(), -1, 1), Eigen::VectorXd::LinSpaced(ops.n_p(), 0, 2)};
  const double g = graph_norm(ops, c);
  EXPECT_NEAR(g * g, form_eval(ops, FormKind::a, c, c) + c.p.dot(ops.Mp * c.p), 1e-12);
  EXPECT_NEAR(graph_norm(ops, 3.0 * c), 3.0 * g, 1e-12);
  const auto wrong = CoefficientVector::zero(ops.n_u() + 2, ops.n_p());
  EXPECT_THROW(form_eval(ops, FormKind::a, wrong, c), std::invalid_argument);
}

TEST(Assemble, BitReproducible) {
  const Mesh m = uniform_refine(create_initial_mesh(DomainTag::slit)).first;
  const auto a = assemble(THSpace(m)), b = assemble(THSpace(m));
  auto same = [](const SparseMatrix& x, const SparseMatrix& y) {
    if (x.nonZeros() != y.nonZeros()) return false;
    return std::equal(x.valuePtr(), x.valuePtr() + x.nonZeros(), y.valuePtr()) &&
           std::equal(x.innerIndexPtr(), x.innerIndexPtr() + x.nonZeros(), y.innerIndexPtr());
  };
  EXPECT_TRUE(same(a.A, b.A));
  EXPECT_TRUE(same(a.B, b.B));
  EXPECT_TRUE(same(a.M, b.M));
  EXPECT_TRUE(same(a.Mp, b.Mp));
  EXPECT_EQ(a.m_p, b.m_p);
}

TEST(MatrixMarket, HeaderAndEntries) {
  SparseMatrix m(2, 3);
  m.insert(0, 0) = 1.5;
  m.insert(1, 2) = -0.25;
  m.makeCompressed();
  const auto path = std::filesystem::temp_directory_path() / "stokes_afem_mm_test.mtx";
  write_matrix_market(path.string(), m);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "%%MatrixMarket matrix coordinate real general\n2 3 2\n1 1 1.5\n2 3 -0.25\n");
  std::filesystem::remove(path);
  EXPECT_THROW(write_matrix_market("/nonexistent_dir/x.mtx", m), std::runtime_error);
}
