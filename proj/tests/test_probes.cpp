#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sosfem/experiments.hpp"
#include "sosfem/probes.hpp"

using namespace sosfem;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

ScalarField plane_field() {
  return {[](const Vec3& x) { return 0.3 * x.x() - 1.1 * x.y() + 0.25; },
          [](const Vec3&) { return Vec3(0.3, -1.1, 0.0); }, "linear"};
}

}  // namespace

TEST(RitzProjection, ReproducesLinearFunctionsOnFlatMesh) {
  auto space = make_space(build_disc_mesh(2));
  const FEFunction p = ritz_projection(space, plane_field(), 4);
  const FEFunction i = interpolate(space, plane_field());
  EXPECT_LT((p.coefficients - i.coefficients).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RitzProjection, ReproducesConstantsOnSphere) {
  auto [space, forms] = sphere_setup(2);
  const FEFunction p = ritz_projection(space, ScalarField::constant(-1.75), 4);
  EXPECT_LT((p.coefficients.array() + 1.75).abs().maxCoeff(), 1e-12);
}

TEST(RitzProjection, IdempotentOnDiscreteFunctions) {
  auto [space, forms] = sphere_setup(2);
  const FEFunction p1 = ritz_projection(space, height_field(), 4);
  const FEFunction p2 = ritz_projection(p1, 4);
  EXPECT_LT((p2.coefficients - p1.coefficients).lpNorm<Eigen::Infinity>(), 1e-12);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FEFunction r{space, Vector(static_cast<Eigen::Index>(space->ndof()))};
  for (auto& x : r.coefficients) x = d(rng);
  EXPECT_LT((ritz_projection(r, 4).coefficients - r.coefficients).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RitzProjection, GalerkinOrthogonality) {
  // b(P f, v) = b(f, v) for every discrete v: compare against the load.
  auto [space, forms] = sphere_setup(3);
  const FEFunction p = ritz_projection(space, height_field(), 4);
  const Vector lhs = forms.b * p.coefficients;
  const FEFunction again = ritz_projection(p, 4);
  EXPECT_LT((forms.b * again.coefficients - lhs).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RitzProjection, HeightFieldConverges) {
  double prev = 0.0;
  for (int level = 1; level <= 4; ++level) {
    auto [space, forms] = sphere_setup(level);
    const FEFunction p = ritz_projection(space, height_field(), 4);
    const double e = fe_error_norm(p, height_field(), NormKind::l2(), 4).absolute;
    if (level > 1) {
      EXPECT_GE(prev / e, 3.0) << "level " << level;
    }
    prev = e;
  }
}

TEST(RitzProjection, RequiresGradient) {
  auto space = make_space(build_disc_mesh(0));
  ScalarField f{[](const Vec3&) { return 1.0; }, {}, "no gradient"};
  EXPECT_THROW(ritz_projection(space, f, 4), Error);
}

TEST(Coercivity, PositiveAndStableWithPointTerm) {
  const ExactFields ex = sphere_problem();
  std::vector<double> mu;
  for (int level = 1; level <= 3; ++level) {
    auto [space, forms] = sphere_setup(level);
    mu.push_back(coercivity_probe(*space, forms, point_eval_matrix(*space, ex.points), 0.01));
    EXPECT_GT(mu.back(), 0.0) << "level " << level;
  }
  EXPECT_GE(*std::min_element(mu.begin(), mu.end()),
            0.5 * *std::max_element(mu.begin(), mu.end()));
}

TEST(Coercivity, FailsWithoutPointTerm) {
  auto [space, forms] = sphere_setup(2);
  const SparseMatrix T = point_eval_matrix(*space, sphere_problem().points);
  EXPECT_LE(coercivity_probe(*space, forms, T, kInf), 0.0);
}

TEST(Coercivity, SpdFormGivesAtLeastOne) {
  // With c = b the quotient is b(u,u)/m(w,w) + 1 + (point term) >= 1.
  auto [space, forms] = sphere_setup(2);
  AssembledForms spd = forms;
  spd.c = forms.b;
  const SparseMatrix T = point_eval_matrix(*space, sphere_problem().points);
  EXPECT_GE(coercivity_probe(*space, spd, T, kInf), 1.0 - 1e-10);
  EXPECT_GE(coercivity_probe(*space, spd, T, 0.01), 1.0 - 1e-10);
}

TEST(Coercivity, QuotientIsScaleInvariantAndBoundedByMinimum) {
  auto [space, forms] = sphere_setup(1);
  const SparseMatrix T = point_eval_matrix(*space, sphere_problem().points);
  const double mu = coercivity_probe(*space, forms, T, 0.01);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector w(static_cast<Eigen::Index>(space->ndof()));
    for (auto& x : w) x = d(rng);
    const double q1 = coercivity_quotient(*space, forms, T, 0.01, w);
    const double q2 = coercivity_quotient(*space, forms, T, 0.01, 2.0 * w);
    const double q3 = coercivity_quotient(*space, forms, T, 0.01, -0.125 * w);
    EXPECT_NEAR(q1, q2, 1e-10 * std::abs(q1));
    EXPECT_NEAR(q1, q3, 1e-10 * std::abs(q1));
    EXPECT_GE(q1, mu - 1e-10 * std::abs(mu));
  }
  EXPECT_THROW(coercivity_quotient(*space, forms, T, 0.01, Vector::Zero(3)), Error);
  EXPECT_THROW(coercivity_quotient(*space, forms, T, 0.01,
                                   Vector::Zero(static_cast<Eigen::Index>(space->ndof()))),
               Error);
}

TEST(Probes, DenseSizeGuard) {
  auto [space, forms] = sphere_setup(6);
  ASSERT_GT(static_cast<Eigen::Index>(space->ndof()), kMaxProbeDofs);
  const SparseMatrix T = point_eval_matrix(*space, sphere_problem().points);
  EXPECT_THROW(coercivity_probe(*space, forms, T, 0.01), NumericalError);
  EXPECT_THROW(saddle_infsup_probe(*space, forms, sphere_problem().points, true, true),
               NumericalError);
}

TEST(InfSup, NonCoplanarPointsOnCoarseMesh) {
  auto [space, forms] = sphere_setup(0);
  const std::vector<Vec3> spread = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(-1, 0, 0)};
  EXPECT_GT(saddle_infsup_probe(*space, forms, spread, true, true), 1e-3);
}

TEST(InfSup, UniformInExperimentConfiguration) {
  const ExactFields ex = sphere_problem();
  std::vector<double> v;
  for (int level = 1; level <= 3; ++level) {
    auto [space, forms] = sphere_setup(level);
    v.push_back(saddle_infsup_probe(*space, forms, ex.points, true, true));
  }
  EXPECT_GT(*std::min_element(v.begin(), v.end()), 0.0);
  EXPECT_GE(*std::min_element(v.begin(), v.end()), 0.5 * *std::max_element(v.begin(), v.end()));
}

TEST(InfSup, EquatorPointsDegradeUnderRefinement) {
  const std::vector<Vec3> equator = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
  // Levels 1 and 2 are comparable; from there on the value drops about 4x per level.
  double prev = kInf;
  for (int level = 2; level <= 4; ++level) {
    auto [space, forms] = sphere_setup(level);
    const double v = saddle_infsup_probe(*space, forms, equator, true, true);
    EXPECT_LT(3.0 * v, prev) << "level " << level;
    prev = v;
  }
}

TEST(Residual, VanishesForZeroProblem) {
  auto [space, forms] = sphere_setup(2);
  ExactFields zero = sphere_problem();
  zero.u = zero.w = zero.f = zero.g = ScalarField::constant(0.0);
  zero.Z.setZero();
  zero.lambda->setZero();
  zero.p_bar = zero.q_bar = 0.0;
  const ResidualReport r = residual_probe(space, forms, zero, 4);
  EXPECT_DOUBLE_EQ(r.total, 0.0);
  EXPECT_DOUBLE_EQ(r.first_rows.norm(), 0.0);
}

TEST(Residual, LoadPerturbationShiftsFirstRowsByMaskedLoad) {
  auto [space, forms] = sphere_setup(3);
  const ExactFields ex = sphere_problem();
  ExactFields shifted = ex;
  shifted.f = {[f = ex.f](const Vec3& x) { return f.value(x) + 1.0; }, {}, "f + 1"};
  const ResidualReport a = residual_probe(space, forms, ex, 4);
  const ResidualReport b = residual_probe(space, forms, shifted, 4);
  const Vector ones_load = assemble_load(*space, ScalarField::constant(1.0), 4);
  const Vector diff = b.first_rows - a.first_rows;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    if (a.first_rows[i] == 0.0 && b.first_rows[i] == 0.0) continue;  // masked row
    EXPECT_NEAR(diff[i], -ones_load[i], 1e-12) << "row " << i;
  }
  EXPECT_EQ(a.second_rows, b.second_rows);
  EXPECT_NE(a.first_equation, b.first_equation);
}

TEST(Residual, DecreasesWithExclusionRadius) {
  const ExactFields ex = flat_problem();
  double prev = kInf;
  for (int level = 2; level <= 4; ++level) {
    auto space = make_space(build_disc_mesh(level), true);
    const AssembledForms forms = assemble_forms(*space, flat_membrane_weights(1.0, 0.0));
    const ResidualReport r = residual_probe(space, forms, ex, 4, 0.25);
    EXPECT_LT(r.total, prev) << "level " << level;
    EXPECT_LT(r.constraint, 1e-14);
    prev = r.total;
  }
}

TEST(Residual, OffGridSingularPointThrows) {
  auto [space, forms] = sphere_setup(1);
  ExactFields ex = sphere_problem();
  ex.points[4] = Vec3(0.6, 0.0, 0.8);
  EXPECT_THROW(residual_probe(space, forms, ex, 4), Error);
}

TEST(Probes, Deterministic) {
  auto [space, forms] = sphere_setup(2);
  const ExactFields ex = sphere_problem();
  const SparseMatrix T = point_eval_matrix(*space, ex.points);
  EXPECT_EQ(coercivity_probe(*space, forms, T, 0.01), coercivity_probe(*space, forms, T, 0.01));
  EXPECT_EQ(saddle_infsup_probe(*space, forms, ex.points, true, true),
            saddle_infsup_probe(*space, forms, ex.points, true, true));
}
