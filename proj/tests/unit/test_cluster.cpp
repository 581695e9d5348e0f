#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "expect_error.hpp"
#include "oracle.hpp"
#include "qcsum/analysis.hpp"
#include "qcsum/cluster.hpp"

using namespace qcsum;

namespace {

struct Case {
  CoarseMesh mesh;
  long r;
};

std::vector<Case> admissible_cases() {
  std::mt19937 rng(30);
  std::vector<CoarseMesh> meshes{build_mesh({MeshFamily::uniform, 4, 64}), build_mesh({MeshFamily::graded, 6, 32}),
                                 build_mesh({MeshFamily::oscillatory, 4, 60}), build_mesh({MeshFamily::smooth, 8, 256}),
                                 oracle::random_mesh(rng, 100, 7, 20), oracle::random_mesh(rng, 128, 3, 30)};
  std::vector<Case> cases;
  for (const auto& mesh : meshes)
    for (long r = 0; 2 * r + 1 <= mesh.min_step(); ++r) cases.push_back({mesh, r});
  return cases;
}

double brute_entry(const CoarseMesh& mesh, const ClusterRule& rule, long j, long k) {
  double sum = 0.0;
  for (long ell : cluster_members(mesh, rule, k)) sum += basis_value(mesh, j, ell);
  return sum;
}

}  // namespace

TEST(BuildClusters, OverlapBoundary) {
  const auto uniform = build_mesh({MeshFamily::uniform, 4, 64});
  EXPECT_EQ(build_clusters(uniform, 7).size(), 15);
  EXPECT_QC_ERROR(build_clusters(uniform, 8), ErrorCode::ClusterOverlap);
  EXPECT_QC_ERROR(build_clusters(build_mesh({MeshFamily::graded, 4, 8}), 1), ErrorCode::ClusterOverlap);
  EXPECT_QC_ERROR(build_clusters(uniform, -1), ErrorCode::InvalidArgument);
  EXPECT_QC_ERROR(build_clusters(uniform, ClusterRadii{1, 2}), ErrorCode::VariableRadius);
  EXPECT_EQ(build_clusters(uniform, ClusterRadii{2, 2}).radius, 2);
}

TEST(BuildClusters, RadiusZeroIsRepatoms) {
  const auto mesh = build_mesh({MeshFamily::graded, 5, 16});
  const auto rule = build_clusters(mesh, 0);
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k)
    EXPECT_EQ(cluster_members(mesh, rule, k), std::vector<long>{mesh.node(k)});
  EXPECT_TRUE(rule.strictly_interior);
}

TEST(WeightSystem, RadiusZeroIsIdentity) {
  const auto mesh = build_mesh({MeshFamily::graded, 6, 32});
  const auto system = assemble_weight_system(mesh, build_clusters(mesh, 0));
  for (std::size_t s = 0; s < system.size(); ++s) {
    EXPECT_EQ(system.diag[s], 1.0);
    EXPECT_EQ(system.lower[s], 0.0);
    EXPECT_EQ(system.upper[s], 0.0);
  }
}

TEST(WeightSystem, UniformClosedForm) {
  const auto mesh = build_mesh({MeshFamily::uniform, 4, 64});
  const auto system = assemble_weight_system(mesh, build_clusters(mesh, 3));
  const double eps = 1.0 / 64, h = 0.25;
  for (std::size_t s = 0; s < system.size(); ++s) {
    EXPECT_DOUBLE_EQ(system.diag[s], 7.0 - 6.0 * eps * 2.0 / h);
    EXPECT_DOUBLE_EQ(system.lower[s], 6.0 * eps / h);
    EXPECT_DOUBLE_EQ(system.rhs[s], h);
  }
}

TEST(WeightSystem, MatchesBruteForceHatSums) {
  for (const auto& [mesh, r] : admissible_cases()) {
    const auto rule = build_clusters(mesh, r);
    const auto system = assemble_weight_system(mesh, rule);
    for (long j = mesh.first_index(); j <= mesh.last_index(); ++j) {
      const auto s = mesh.slot(j);
      EXPECT_NEAR(system.diag[s], brute_entry(mesh, rule, j, j), 1e-14);
      EXPECT_NEAR(system.lower[s], brute_entry(mesh, rule, j, j - 1), 1e-14);
      EXPECT_NEAR(system.upper[s], brute_entry(mesh, rule, j, j + 1), 1e-14);
      for (long k = j + 2; k <= j + static_cast<long>(mesh.node_count()) - 2; ++k)
        EXPECT_EQ(brute_entry(mesh, rule, j, k), 0.0);
    }
  }
}

TEST(WeightSystem, DominanceMarginExceedsRadius) {
  for (const auto& [mesh, r] : admissible_cases()) {
    const auto margins = assemble_weight_system(mesh, build_clusters(mesh, r)).dominance_margins();
    for (double m : margins) EXPECT_GT(m, static_cast<double>(r));
  }
}

TEST(Weights, ExactSolveMatchesDenseOracle) {
  for (const auto& [mesh, r] : admissible_cases()) {
    if (mesh.node_count() > 64) continue;
    const auto system = assemble_weight_system(mesh, build_clusters(mesh, r));
    const std::size_t n = system.size();
    oracle::Matrix A(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      A[i][i] += system.diag[i];
      A[i][(i + n - 1) % n] += system.lower[i];
      A[i][(i + 1) % n] += system.upper[i];
    }
    EXPECT_LT(oracle::max_diff(oracle::gauss_solve(A, system.rhs), solve_weight_system(system)), 1e-14);
  }
}

TEST(Weights, InvariantsOnAllCases) {
  for (const auto& [mesh, r] : admissible_cases()) {
    const auto rule = build_clusters(mesh, r);
    const auto weights = solve_weights(mesh, rule);
    const auto system = assemble_weight_system(mesh, rule);
    const auto Mw = system.apply(weights.omega);
    for (std::size_t s = 0; s < Mw.size(); ++s) {
      EXPECT_NEAR(Mw[s], system.rhs[s], 1e-12 * system.rhs[s]);
      EXPECT_GT(weights.omega[s], 0.0);
      EXPECT_NEAR(weights.nu[s] * mesh.epsilon(), weights.omega[s], 1e-15 * weights.omega[s]);
    }
    EXPECT_LE(verify_exactness(mesh, rule, weights.omega), 1e-10);
    double gap = 0.0;
    for (std::size_t s = 0; s < Mw.size(); ++s)
      gap = std::max(gap, std::abs(weights.omega_lumped[s] - weights.omega[s]));
    EXPECT_LE(gap, linalg::max_abs(weights.residual) / std::max(1.0, double(r)) * (1 + 1e-12) + 1e-16);
  }
}

TEST(Weights, PowerOfTwoForceWeightsAreExactMultiples) {
  const auto mesh = build_mesh({MeshFamily::graded, 8, 128});
  const auto weights = solve_weights(mesh, build_clusters(mesh, 0));
  for (std::size_t s = 0; s < weights.nu.size(); ++s) EXPECT_EQ(weights.nu[s] * mesh.epsilon(), weights.omega[s]);
}

TEST(Weights, RadiusZeroIsTrapezoidal) {
  const auto mesh = build_mesh({MeshFamily::graded, 9, 256});
  const auto weights = solve_weights(mesh, build_clusters(mesh, 0));
  for (long j = mesh.first_index(); j <= mesh.last_index(); ++j) {
    const auto s = mesh.slot(j);
    EXPECT_EQ(weights.omega[s], 0.5 * (mesh.h(j) + mesh.h(j + 1)));
    EXPECT_EQ(weights.omega_lumped[s], weights.omega[s]);
    EXPECT_EQ(weights.residual[s], 0.0);
  }
}

TEST(Weights, UniformMeshExactEqualsLumped) {
  const auto mesh = build_mesh({MeshFamily::uniform, 8, 256});
  for (long r : {0L, 1L, 5L, 15L}) {
    const auto rule = build_clusters(mesh, r);
    const auto weights = solve_weights(mesh, rule, WeightMode::lumped);
    const double expected = 0.125 / (2 * r + 1);
    for (std::size_t s = 0; s < weights.omega.size(); ++s) {
      EXPECT_NEAR(weights.omega[s], expected, 1e-15);
      EXPECT_EQ(weights.omega_lumped[s], expected);
      EXPECT_EQ(weights.residual[s], 0.0);
    }
    EXPECT_LE(verify_exactness(mesh, rule, weights.omega_lumped), 1e-12);
    EXPECT_EQ(weights.energy_weights().data(), weights.omega_lumped.data());
    EXPECT_EQ(weights.force_weights().data(), weights.nu_lumped.data());
  }
}

TEST(Weights, LumpedDefectAndGapShrinkWithEpsilon) {
  const std::vector<double> fractions{-0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5, 1.0};
  const std::vector<long> Ns{64, 128, 256, 512};
  const long r = 2;
  std::vector<double> defects, residuals;
  for (long N : Ns) {
    const auto mesh = scaled_mesh(N, fractions);
    const auto rule = build_clusters(mesh, r);
    const auto weights = solve_weights(mesh, rule);
    defects.push_back(verify_exactness(mesh, rule, weights.omega_lumped));
    residuals.push_back(linalg::max_abs(weights.residual));
  }
  for (std::size_t i = 1; i < Ns.size(); ++i) {
    EXPECT_GT(defects[i], 0.0);
    EXPECT_GT(std::log2(defects[i - 1] / defects[i]), 0.9);
    EXPECT_GT(std::log2(residuals[i - 1] / residuals[i]), 0.9);
  }
  const auto table = weight_error_study(fractions, Ns, r);
  const auto check = check_min_rate(table, 0.9);
  EXPECT_TRUE(check.ok) << check.message;
}

TEST(Weights, ModeParsing) {
  EXPECT_EQ(parse_weight_mode("lumped"), WeightMode::lumped);
  EXPECT_EQ(to_string(WeightMode::exact), "exact");
  EXPECT_QC_ERROR(parse_weight_mode("diagonal"), ErrorCode::InvalidArgument);
}

TEST(Weights, RuleFromAnotherMeshIsRejected) {
  const auto a = build_mesh({MeshFamily::uniform, 4, 64});
  const auto b = build_mesh({MeshFamily::uniform, 8, 64});
  EXPECT_QC_ERROR(assemble_weight_system(b, build_clusters(a, 1)), ErrorCode::LengthMismatch);
}
