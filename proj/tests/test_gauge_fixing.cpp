#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "orbitgauge/gauge_fixing.hpp"

using namespace orbitgauge;

namespace {

double plaquette_gap(const GaugeField& a, const GaugeField& b) {
  double worst = 0.0;
  for (const Site& c : plaquette_corners(a.lattice()))
    worst = std::max(worst, std::abs(plaquette_trace(a, c) - plaquette_trace(b, c)));
  return worst;
}

}  // namespace

TEST(MaximalTree, IdentityField) {
  const Lattice lat(3, 3);
  const FixedConfiguration f = maximal_tree(GaugeField(lat));
  for (int i = 0; i < lat.edge_count(); ++i) EXPECT_EQ(f.field[i], UnitQuaternion::identity());
  for (int s = 0; s < lat.site_count(); ++s) EXPECT_EQ(f.applied[s], UnitQuaternion::identity());
}

TEST(MaximalTree, SpanningTreeCounts) {
  for (int n1 = 2; n1 <= 5; ++n1)
    for (int n2 = 2; n2 <= 5; ++n2) {
      const Lattice lat(n1, n2);
      EXPECT_EQ(static_cast<int>(tree_edges(lat).size()), lat.site_count() - 1);
      EXPECT_EQ(static_cast<int>(unfixed_edges(lat).size()), lat.edge_count() - lat.site_count() + 1);
      EXPECT_EQ(unfixed_edges(lat).front(), last_edge());
    }
}

TEST(MaximalTree, RandomFieldKeepsPlaquettes) {
  std::mt19937_64 rng(8);
  const Lattice lat(4, 3);
  const GaugeField u = random_field(lat, rng);
  const FixedConfiguration f = maximal_tree(u);
  EXPECT_LE(plaquette_gap(u, f.field), 1e-12);
  EXPECT_LE(fixing_violation(u, f), 1e-12);
}

TEST(LastEdge, AlreadyDiagonalIsUnchanged) {
  const Lattice lat(3, 2);
  std::mt19937_64 rng(9);
  GaugeField u = maximal_tree(random_field(lat, rng)).field;
  const double phi = 0.7;
  u.at(last_edge()) = pauli_exp(2, phi);
  const FixedConfiguration f = reconstruct_orbit_representative(u);
  EXPECT_FALSE(f.singular);
  EXPECT_LE(max_abs_diff(f.field.at(last_edge()), pauli_exp(2, phi)), 1e-14);
  EXPECT_NEAR(f.phi, phi, 1e-14);
  // The transformation is a constant sz rotation.
  for (int s = 0; s < lat.site_count(); ++s) {
    EXPECT_LE(max_abs_diff(f.applied[s], f.applied[0]), 1e-14);
    EXPECT_LE(std::hypot(f.applied[s].q1, f.applied[s].q2), 1e-14);
  }
}

TEST(LastEdge, SigmaXBecomesSigmaZ) {
  const Lattice lat(2, 2);
  GaugeField u(lat);
  const double phi = 0.9;
  u.at(last_edge()) = oracle::to_quaternion(oracle::exp_sigma(0, phi));
  const FixedConfiguration f = reconstruct_orbit_representative(u);
  EXPECT_FALSE(f.singular);
  EXPECT_TRUE(f.residual_unfixed);
  EXPECT_LE(max_abs_diff(f.field.at(last_edge()), oracle::to_quaternion(oracle::exp_sigma(2, phi))), 1e-14);
  // g^-1 sx g = sz for the applied (constant) g.
  const oracle::M2 g = oracle::to_matrix(f.applied[0]);
  EXPECT_LE((g.adjoint() * oracle::sigma(0) * g - oracle::sigma(2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LastEdge, IdentityIsSingular) {
  const Lattice lat(3, 3);
  const FixedConfiguration f = reconstruct_orbit_representative(GaugeField(lat));
  EXPECT_TRUE(f.singular);
  for (int i = 0; i < lat.edge_count(); ++i) EXPECT_EQ(f.field[i], UnitQuaternion::identity());

  GaugeField minus(lat);
  minus.at(last_edge()) = -UnitQuaternion::identity();
  EXPECT_TRUE(reconstruct_orbit_representative(minus).singular);
}

TEST(Reconstruct, InvariantsOnRandomFields) {
  std::mt19937_64 rng(10);
  for (auto [n1, n2] : {std::pair{2, 2}, {3, 2}, {2, 3}, {3, 3}, {4, 4}}) {
    const Lattice lat(n1, n2);
    for (int t = 0; t < 10; ++t) {
      const GaugeField u = random_field(lat, rng);
      const FixedConfiguration f = reconstruct_orbit_representative(u);
      ASSERT_FALSE(f.singular);
      EXPECT_LE(fixing_violation(u, f), 1e-12);
      EXPECT_LE(plaquette_gap(u, f.field), 1e-12);
      EXPECT_GT(f.phi, 0.0);
      EXPECT_LT(f.phi, kPi);
      EXPECT_GE(f.field.at(last_edge()).q3, 0.0);
      if (lat.edge_count() - lat.site_count() + 1 > 1) {
        ASSERT_TRUE(f.reference_edge.has_value());
        EXPECT_EQ(f.field.at(*f.reference_edge).q2, 0.0);
        EXPECT_GT(f.field.at(*f.reference_edge).q1, 0.0);
      }
    }
  }
}

TEST(Reconstruct, Idempotent) {
  std::mt19937_64 rng(11);
  const Lattice lat(3, 3);
  for (int t = 0; t < 20; ++t) {
    const FixedConfiguration once = reconstruct_orbit_representative(random_field(lat, rng));
    const FixedConfiguration twice = reconstruct_orbit_representative(once.field);
    EXPECT_LE(max_edge_difference(once.field, twice.field), 1e-12);
  }
}

TEST(Reconstruct, GaugeEquivalentFieldsAgree) {
  std::mt19937_64 rng(12);
  const Lattice lat(3, 3);
  for (int t = 0; t < 50; ++t) {
    const GaugeField u = random_field(lat, rng);
    const GaugeField v = apply_gauge(u, random_transform(lat, rng));
    EXPECT_LE(max_edge_difference(reconstruct_orbit_representative(u).field,
                                  reconstruct_orbit_representative(v).field),
              1e-10);
  }
}

TEST(Reconstruct, ConventionsDifferByConstantRotation) {
  std::mt19937_64 rng(13);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng);
  const FixedConfiguration a = reconstruct_orbit_representative(u, ResidualConvention::first_eligible);
  const FixedConfiguration b = reconstruct_orbit_representative(u, ResidualConvention::last_eligible);
  ASSERT_TRUE(a.reference_edge && b.reference_edge);
  EXPECT_FALSE(*a.reference_edge == *b.reference_edge);
  const UnitQuaternion z = a.applied[0].inverse() * b.applied[0];
  EXPECT_LE(std::hypot(z.q1, z.q2), 1e-12);
  EXPECT_LE(max_edge_difference(apply_gauge(a.field, [&] {
                                  GaugeTransform k(lat);
                                  for (int s = 0; s < lat.site_count(); ++s) k[s] = z;
                                  return k;
                                }()),
                                b.field),
            1e-12);
}

TEST(RotationBetween, MapsFromOntoTo) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const Vec3 a = haar_sample(rng).vec().normalized(), b = haar_sample(rng).vec().normalized();
    EXPECT_LE((adjoint(rotation_between(a, b)) * a - b).norm(), 1e-14);
  }
  const Vec3 e3 = Vec3::UnitZ();
  EXPECT_LE((adjoint(rotation_between(-e3, e3)) * -e3 - e3).norm(), 1e-14);
}
