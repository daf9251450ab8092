#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "oracles.hpp"
#include "orbitgauge/orbit_metric.hpp"

using namespace orbitgauge;

namespace {

// Independent minimizer: multi-start gradient descent on
// F(K) = sum_e 2 - 2 <U_e, K(h)^-1 V_e K(t)> with finite-difference gradients
// along left translations K(x) -> exp(i w.t) K(x).
double brute_force_rho_sq(const GaugeField& u, const GaugeField& v, int starts, std::uint64_t seed) {
  const Lattice& lat = u.lattice();
  auto f = [&](const GaugeTransform& k) {
    const GaugeField vk = apply_gauge(v, k);
    double s = 0.0;
    for (int i = 0; i < lat.edge_count(); ++i) s += 2.0 - 2.0 * dot4(u[i], vk[i]);
    return s;
  };
  std::mt19937_64 rng(seed);
  double best = 1e300;
  for (int r = 0; r < starts; ++r) {
    GaugeTransform k = random_transform(lat, rng);
    double step = 0.2;
    double fk = f(k);
    for (int it = 0; it < 4000 && step > 1e-10; ++it) {
      std::vector<Vec3> grad(static_cast<std::size_t>(lat.site_count()));
      const double h = 1e-6;
      for (int s = 0; s < lat.site_count(); ++s)
        for (int a = 0; a < 3; ++a) {
          GaugeTransform kp = k, km = k;
          kp[s] = su2_exp(h * Vec3::Unit(a)) * k[s];
          km[s] = su2_exp(-h * Vec3::Unit(a)) * k[s];
          grad[static_cast<std::size_t>(s)][a] = (f(kp) - f(km)) / (2 * h);
        }
      GaugeTransform trial = k;
      for (int s = 0; s < lat.site_count(); ++s) trial[s] = su2_exp(-step * grad[static_cast<std::size_t>(s)]) * k[s];
      const double ft = f(trial);
      if (ft < fk) {
        k = trial;
        fk = ft;
        step *= 1.2;
      } else {
        step *= 0.5;
      }
    }
    best = std::min(best, fk);
  }
  return best;
}

}  // namespace

TEST(DistanceI, Examples) {
  std::mt19937_64 rng(1);
  const Lattice lat(3, 2);
  const GaugeField u = random_field(lat, rng), v = random_field(lat, rng);
  EXPECT_EQ(distance_I(u, u), 0.0);
  EXPECT_NEAR(distance_I(u, v), distance_I(v, u), 1e-15);

  const Lattice edge(2, 1);
  GaugeField a(edge), b(edge);
  b[0] = {0, 0, 0, 1};  // i sz
  const oracle::M2 d = oracle::to_matrix(b[0]) - oracle::M2::Identity();
  EXPECT_NEAR(distance_I(a, b), std::sqrt(0.5 * (d.adjoint() * d).trace().real()), 1e-15);
  EXPECT_NEAR(distance_I(a, b), std::sqrt(2.0), 1e-15);
}

TEST(OrbitDistance, SelfDistanceAcceptsIdentity) {
  std::mt19937_64 rng(2);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng);
  RelaxationOptions opt;
  opt.restarts = 1;
  const DistanceResult d = orbit_distance(u, u, opt);
  EXPECT_LE(d.rho, 1e-12);
  EXPECT_TRUE(d.converged);
  EXPECT_EQ(d.iterations, 1);
  for (int s = 0; s < lat.site_count(); ++s) EXPECT_EQ(d.minimizer[s], UnitQuaternion::identity());
}

TEST(OrbitDistance, SingleEdgeIsAlwaysZero) {
  std::mt19937_64 rng(3);
  const Lattice lat(2, 1);
  for (int t = 0; t < 10; ++t) {
    const DistanceResult d = orbit_distance(random_field(lat, rng), random_field(lat, rng));
    EXPECT_LE(d.rho, 1e-6);
  }
}

TEST(OrbitDistance, SinglePlaquetteClosedForm) {
  // U = 1, V differs only by a holonomy exp(i phi sz) on one edge. The optimal K
  // spreads the holonomy evenly over the four edges of the loop.
  const Lattice lat(2, 2);
  const GaugeField u(lat);
  for (double phi : {0.3, 1.1, 2.0, 2.9}) {
    GaugeField v(lat);
    v.at({{1, 0}, 2}) = pauli_exp(2, phi);
    const double expected = 8.0 * (1.0 - std::cos(phi / 4.0));
    const DistanceResult d = orbit_distance(u, v);
    EXPECT_TRUE(d.converged);
    EXPECT_NEAR(d.rho_sq, expected, 1e-10);
    EXPECT_NEAR(brute_force_rho_sq(u, v, 4, 77), expected, 1e-6);
  }
}

TEST(OrbitDistance, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 rng(4);
  const Lattice lat(2, 2);
  for (int t = 0; t < 3; ++t) {
    const GaugeField u = random_field(lat, rng), v = random_field(lat, rng);
    EXPECT_NEAR(orbit_distance(u, v).rho_sq, brute_force_rho_sq(u, v, 6, 100 + t), 1e-6);
  }
}

TEST(OrbitDistance, MonotoneHistoryAndBound) {
  std::mt19937_64 rng(5);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng), v = random_field(lat, rng);
  const DistanceResult d = orbit_distance(u, v);
  for (std::size_t i = 1; i < d.functional_history.size(); ++i)
    EXPECT_LE(d.functional_history[i], d.functional_history[i - 1] + 1e-12);
  EXPECT_LE(d.rho, distance_I(u, v) + 1e-12);
  EXPECT_EQ(d.restart_values.size(), 8u);
}

TEST(OrbitDistance, GaugeInvariantInBothArguments) {
  std::mt19937_64 rng(6);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng), v = random_field(lat, rng);
  const double base = orbit_distance(u, v).rho;
  const GaugeField uk = apply_gauge(u, random_transform(lat, rng));
  const GaugeField vk = apply_gauge(v, random_transform(lat, rng));
  EXPECT_NEAR(orbit_distance(uk, vk).rho, base, 1e-6);
  EXPECT_LE(orbit_distance(u, apply_gauge(u, random_transform(lat, rng))).rho, 1e-5);
}

TEST(OrbitDistance, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(7);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng), v = random_field(lat, rng);
  RelaxationOptions one, four;
  one.threads = 1;
  four.threads = 4;
  ::setenv("ORBITGAUGE_THREADS", "8", 1);
  const DistanceResult a = orbit_distance(u, v, one), b = orbit_distance(u, v, four);
  ::unsetenv("ORBITGAUGE_THREADS");
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.restart_values, b.restart_values);
}

TEST(ThreadCount, EnvironmentCaps) {
  ::setenv("ORBITGAUGE_THREADS", "2", 1);
  EXPECT_EQ(resolve_thread_count(16), 2);
  EXPECT_EQ(resolve_thread_count(1), 1);
  ::setenv("ORBITGAUGE_THREADS", "junk", 1);
  EXPECT_EQ(resolve_thread_count(3), 3);
  ::unsetenv("ORBITGAUGE_THREADS");
}

TEST(MetricAxioms, SmallSuite) {
  std::mt19937_64 rng(8);
  const Lattice lat(3, 3);
  std::vector<GaugeField> fields;
  for (int i = 0; i < 3; ++i) fields.push_back(random_field(lat, rng));
  const MetricAxiomReport r = metric_axiom_suite(fields, 1e-5, {}, 3);
  EXPECT_TRUE(r.all_pass());
  EXPECT_EQ(r.triangle.size(), 6u);
  EXPECT_LE(r.worst_symmetry_gap(), 1e-5);
  EXPECT_GE(r.worst_triangle_slack(), -1e-5);

  const MetricAxiomReport single = metric_axiom_suite({fields[0]}, 1e-5);
  EXPECT_TRUE(single.triangle.empty());
}

TEST(ActionCorrespondence, NormalizationTwo) {
  std::mt19937_64 rng(9);
  const Lattice lat(2, 2);
  const GaugeField u = random_field(lat, rng);
  const ActionCorrespondence same = st_action_correspondence(u, u);
  EXPECT_NEAR(same.inf_space_time, 0.0, 1e-12);
  EXPECT_NEAR(same.rho_sq, 0.0, 1e-12);
  for (int t = 0; t < 5; ++t) {
    const GaugeField v = random_field(lat, rng);
    const ActionCorrespondence c = st_action_correspondence(u, v);
    EXPECT_TRUE(c.converged);
    EXPECT_LE(c.gap, 1e-5);
    const ActionCorrespondence g = st_action_correspondence(u, apply_gauge(v, random_transform(lat, rng)));
    EXPECT_NEAR(g.inf_space_time, c.inf_space_time, 1e-5);
  }
}
