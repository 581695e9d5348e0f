#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "expect_error.hpp"
#include "oracle.hpp"
#include "qcsum/mesh.hpp"

using namespace qcsum;

namespace {

CoarseMesh graded(long K) { return build_mesh({MeshFamily::graded, K, 1L << (K - 1)}); }

std::vector<long> steps_by_index(const CoarseMesh& mesh) {
  std::vector<long> out;
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) out.push_back(mesh.step(k));
  return out;
}

std::vector<CoarseMesh> sample_meshes() {
  std::mt19937 rng(20);
  std::vector<CoarseMesh> meshes{graded(4), graded(7), build_mesh({MeshFamily::uniform, 4, 8}),
                                 build_mesh({MeshFamily::oscillatory, 3, 9}),
                                 build_mesh({MeshFamily::oscillatory, 5, 37})};
  MeshSpec smooth{MeshFamily::smooth, 8, 256};
  meshes.push_back(build_mesh(smooth));
  for (int i = 0; i < 4; ++i) meshes.push_back(oracle::random_mesh(rng, 40, 1, 9));
  return meshes;
}

}  // namespace

TEST(BuildMesh, GradedFourNodes) {
  const auto mesh = graded(4);
  const std::vector<long> nodes{-4, -2, -1, 0, 1, 2, 4, 8};
  EXPECT_EQ(std::vector<long>(mesh.nodes().begin(), mesh.nodes().end()), nodes);
  EXPECT_EQ(mesh.first_index(), -3);
  EXPECT_EQ(mesh.last_index(), 4);
  EXPECT_EQ(steps_by_index(mesh), (std::vector<long>{4, 2, 1, 1, 1, 1, 2, 4}));
  EXPECT_EQ(mesh.kappa(), 2.0);
}

TEST(BuildMesh, GradedKappaIsTwo) {
  for (long K : {3L, 8L, 15L}) EXPECT_EQ(graded(K).kappa(), 2.0);
}

TEST(BuildMesh, Uniform) {
  const auto mesh = build_mesh({MeshFamily::uniform, 4, 8});
  for (long k = -3; k <= 4; ++k) {
    EXPECT_EQ(mesh.node(k), 2 * k);
    EXPECT_EQ(mesh.h(k), 0.25);
  }
  EXPECT_EQ(mesh.kappa(), 1.0);
}

TEST(BuildMesh, OscillatoryExactAlternation) {
  const auto mesh = build_mesh({MeshFamily::oscillatory, 3, 9});
  EXPECT_EQ(steps_by_index(mesh), (std::vector<long>{4, 2, 4, 2, 4, 2}));
  for (long k = -2; k <= 3; ++k) EXPECT_EQ(mesh.step(k), k % 2 != 0 ? 2 : 4) << k;
  EXPECT_EQ(mesh.kappa(), 2.0);
}

TEST(BuildMesh, OscillatoryRemainderGoesToOuterElements) {
  const auto mesh = build_mesh({MeshFamily::oscillatory, 20, 10000});
  long total = 0;
  for (long s : mesh.steps()) total += s;
  EXPECT_EQ(total, 20000);
  for (long k = -18; k <= 19; ++k) EXPECT_EQ(mesh.step(k), k % 2 != 0 ? 333 : 666) << k;
  EXPECT_EQ(mesh.step(20) + mesh.step(-19), 666 + 333 + 20);
  EXPECT_NEAR(mesh.kappa(), 2.03, 0.01);
}

TEST(BuildMesh, SmoothRoundsTheMap) {
  const auto mesh = build_mesh({MeshFamily::smooth, 8, 1024, 0.2});
  for (long k = -7; k <= 8; ++k) {
    const double x = k / 8.0;
    EXPECT_EQ(mesh.node(k), std::lround((x + 0.2 * std::sin(std::numbers::pi * x)) * 1024)) << k;
  }
  MeshSpec identity{MeshFamily::smooth, 8, 1024, 0.0};
  EXPECT_EQ(build_mesh(identity).kappa(), 1.0);
}

TEST(BuildMesh, Errors) {
  EXPECT_QC_ERROR(build_mesh({MeshFamily::uniform, 3, 8}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(build_mesh({MeshFamily::graded, 4, 16}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(build_mesh({MeshFamily::oscillatory, 10, 10}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(build_mesh({MeshFamily::smooth, 8, 1024, 0.5}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(build_mesh({MeshFamily::smooth, 16, 8, 0.2}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(CoarseMesh(8, {-2, 3, 5}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(CoarseMesh(8, {-2, 0, 3, 3}), ErrorCode::InvalidMesh);
  EXPECT_QC_ERROR(parse_mesh_family("adaptive"), ErrorCode::UnknownFamily);
}

TEST(BuildMesh, CustomNodesAreReducedAndSorted) {
  MeshSpec spec{MeshFamily::custom, 0, 8};
  spec.custom_indices = {3, 0, -5, 8};
  const auto mesh = build_mesh(spec);
  EXPECT_EQ(std::vector<long>(mesh.nodes().begin(), mesh.nodes().end()), (std::vector<long>{-5, 0, 3, 8}));
  EXPECT_EQ(mesh.first_index(), -1);
  EXPECT_EQ(mesh.node(2), 8);
  EXPECT_EQ(mesh.node(3), -5 + 16);
  EXPECT_EQ(mesh.node(-2), 8 - 16);
  EXPECT_EQ(mesh.step(-1), 3);
}

TEST(BuildMesh, MeshFile) {
  const std::string path = ::testing::TempDir() + "qcsum_mesh.txt";
  {
    std::ofstream out(path);
    out << "# graded\n-4\n-2\n-1\n0\n\n1\n2\n4\n8\n";
  }
  EXPECT_EQ(read_mesh_file(path), (std::vector<long>{-4, -2, -1, 0, 1, 2, 4, 8}));
  {
    std::ofstream out(path);
    out << "0\n1 2\n";
  }
  EXPECT_QC_ERROR(read_mesh_file(path), ErrorCode::InvalidMesh);
  std::remove(path.c_str());
  EXPECT_QC_ERROR(read_mesh_file(path), ErrorCode::Io);
}

TEST(Mesh, ElementSizesSumToTwo) {
  for (const auto& mesh : sample_meshes()) {
    double sum = 0.0;
    for (double h : mesh.element_sizes()) sum += h;
    EXPECT_NEAR(sum, 2.0, 1e-12);
  }
}

TEST(Basis, NodalValuesAndMidpoint) {
  const auto mesh = build_mesh({MeshFamily::uniform, 4, 8});
  for (long j = -3; j <= 4; ++j) {
    EXPECT_EQ(basis_value(mesh, j, mesh.node(j)), 1.0);
    EXPECT_EQ(basis_value(mesh, j, mesh.node(j + 1)), 0.0);
    EXPECT_EQ(basis_value(mesh, j, mesh.node(j - 1)), 0.0);
  }
  EXPECT_EQ(basis_value(mesh, 1, 1), 0.5);
  // ζ_4 lives at ℓ = 8 and wraps onto ℓ = -7
  EXPECT_EQ(basis_value(mesh, 4, -7), 0.5);
}

TEST(Basis, PartitionOfUnityAndBounds) {
  for (const auto& mesh : sample_meshes()) {
    for (long ell = -mesh.N() + 1; ell <= mesh.N(); ++ell) {
      double sum = 0.0;
      for (long j = mesh.first_index(); j <= mesh.last_index(); ++j) {
        const double z = basis_value(mesh, j, ell);
        EXPECT_GE(z, 0.0);
        EXPECT_LE(z, 1.0);
        sum += z;
      }
      EXPECT_NEAR(sum, 1.0, 1e-14);
    }
  }
}

TEST(Prolong, GradientsAndAffineOracle) {
  const auto mesh = graded(4);
  std::vector<double> values;
  for (long ell : mesh.nodes()) {
    const double x = ell / 8.0;
    values.push_back(x * x - std::abs(x));
  }
  const NodalField V(mesh, values);
  const auto v = prolong(mesh, V);
  for (long k = mesh.first_index(); k <= mesh.last_index(); ++k) {
    for (long ell = mesh.node(k - 1) + 1; ell <= mesh.node(k); ++ell) {
      EXPECT_NEAR(v.gradient(ell), V.gradient(mesh, k), 1e-13);
      const double t = double(ell - mesh.node(k - 1)) / mesh.step(k);
      EXPECT_NEAR(v(ell), V(k - 1) + t * (V(k) - V(k - 1)), 1e-15);
    }
  }
  EXPECT_EQ(energy_norm(prolong(mesh, NodalField::zero(mesh))), 0.0);
}

TEST(Prolong, FullLatticeIsIdentity) {
  std::mt19937 rng(21);
  const auto mesh = build_mesh({MeshFamily::uniform, 8, 8});
  const auto V = oracle::random_field(rng, mesh);
  const auto v = prolong(mesh, V);
  for (std::size_t s = 0; s < V.size(); ++s) EXPECT_EQ(v(mesh.nodes()[s]), V.at_slot(s));
}

TEST(Interpolate, RoundTripIsBitwise) {
  std::mt19937 rng(22);
  for (const auto& mesh : sample_meshes()) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto V = oracle::random_field(rng, mesh);
      const auto W = interpolate(mesh, prolong(mesh, V));
      for (std::size_t s = 0; s < V.size(); ++s) EXPECT_EQ(W.at_slot(s), V.at_slot(s));
    }
  }
}

TEST(Interpolate, SamplesSine) {
  const auto mesh = build_mesh({MeshFamily::uniform, 4, 8});
  std::vector<double> values(16);
  for (long ell = -7; ell <= 8; ++ell) values[lattice_slot(ell, 8)] = std::sin(std::numbers::pi * ell / 8.0);
  values[lattice_slot(0, 8)] = 0.0;
  const auto V = interpolate(mesh, Displacement(8, values));
  for (long k = -3; k <= 4; ++k) EXPECT_EQ(V(k), values[lattice_slot(2 * k, 8)]);
}

TEST(Energy, ProlongedStoredEnergyIsElementSum) {
  std::mt19937 rng(23);
  for (const auto& phi : {PairPotential::harmonic(), PairPotential::quartic(0.4)}) {
    for (const auto& mesh : sample_meshes()) {
      const ChainModel model(mesh.N(), phi, ForceDescriptor::parse("const:0"));
      const auto V = oracle::random_field(rng, mesh, 0.3);
      double element_sum = 0.0;
      for (long k = mesh.first_index(); k <= mesh.last_index(); ++k)
        element_sum += mesh.h(k) * phi.value(V.gradient(mesh, k));
      const auto v = prolong(mesh, V);
      EXPECT_NEAR(stored_energy(model, v), element_sum, 1e-12 * element_sum);
      EXPECT_NEAR(energy_norm(v), energy_norm(mesh, V), 1e-12 * energy_norm(mesh, V));
    }
  }
}

TEST(Smoothness, Uniform) {
  const auto profile = smoothness_profile(build_mesh({MeshFamily::uniform, 16, 64}));
  for (double w : profile.omega_hat) EXPECT_EQ(w, 0.0);
}

TEST(Smoothness, GradedTables) {
  const auto four = smoothness_profile(graded(4));
  EXPECT_EQ(four.omega_hat, (std::vector<double>{-0.125, 0.125, 0.25, 0.0, 0.0, 0.25, 0.125, -0.125}));
  const auto mesh = graded(15);
  const auto profile = smoothness_profile(mesh);
  for (long k = -14; k <= 15; ++k) {
    const double w = profile.omega_hat[mesh.slot(k)];
    double expected = 0.125;
    if (k == 0 || k == 1) expected = 0.0;
    if (k == -1 || k == 2) expected = 0.25;
    if (k == -14 || k == 15) expected = -0.125;
    EXPECT_EQ(w, expected) << k;
  }
}

TEST(Smoothness, Oscillatory) {
  const auto mesh = build_mesh({MeshFamily::oscillatory, 6, 54});
  const auto profile = smoothness_profile(mesh);
  for (long k = -5; k <= 6; ++k) EXPECT_EQ(profile.omega_hat[mesh.slot(k)], k % 2 == 0 ? -0.25 : 0.5) << k;
  EXPECT_EQ(profile.kappa, 2.0);
}

TEST(Smoothness, SecondDifferencesTelescope) {
  for (const auto& mesh : sample_meshes()) {
    const auto profile = smoothness_profile(mesh);
    double sum = 0.0;
    for (std::size_t s = 0; s < profile.omega_hat.size(); ++s)
      sum += 4.0 * mesh.h(mesh.index_of_slot(s)) * profile.omega_hat[s];
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(ExactLoad, ZeroConstantAndBruteForce) {
  for (const auto& mesh : sample_meshes()) {
    const ChainModel zero(mesh.N(), PairPotential::harmonic(), ForceDescriptor::parse("const:0"));
    for (double f : exact_load(mesh, zero)) EXPECT_EQ(f, 0.0);
    const ChainModel one(mesh.N(), PairPotential::harmonic(), ForceDescriptor::parse("const:1"));
    const auto g = exact_load(mesh, one);
    for (long j = mesh.first_index(); j <= mesh.last_index(); ++j)
      EXPECT_NEAR(g[mesh.slot(j)], 0.5 * (mesh.h(j) + mesh.h(j + 1)), 1e-14);
  }
  const auto mesh = build_mesh({MeshFamily::uniform, 4, 8});
  const ChainModel model(8, PairPotential::harmonic(), ForceDescriptor::parse("sinpi"));
  const auto load = exact_load(mesh, model);
  for (long j = -3; j <= 4; ++j) {
    double brute = 0.0;
    for (long ell = -7; ell <= 8; ++ell) brute += model.epsilon() * model.force()(ell) * basis_value(mesh, j, ell);
    EXPECT_NEAR(load[mesh.slot(j)], brute, 1e-15);
  }
}

TEST(NodalField, ConstraintAndWrap) {
  const auto mesh = build_mesh({MeshFamily::uniform, 2, 4});
  EXPECT_QC_ERROR(NodalField(mesh, {1.0, 2.0, 3.0, 4.0}), ErrorCode::InvalidArgument);
  EXPECT_QC_ERROR(NodalField(mesh, {1.0, 0.0}), ErrorCode::LengthMismatch);
  const NodalField V(mesh, {1.0, 0.0, 2.0, 3.0});
  EXPECT_EQ(V(3), V(-1));
  EXPECT_EQ(V.gradient(mesh, -1), (1.0 - 3.0) / 0.5);
}
