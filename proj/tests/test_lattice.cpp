#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "orbitgauge/field_io.hpp"
#include "orbitgauge/lattice.hpp"

using namespace orbitgauge;

TEST(Lattice, EdgeCounts) {
  for (int n1 = 2; n1 <= 6; ++n1)
    for (int n2 = 2; n2 <= 6; ++n2) {
      const Lattice lat(n1, n2);
      EXPECT_EQ(lat.edge_count(), n2 * (n1 - 1) + n1 * (n2 - 1));
      EXPECT_EQ(lat.edge_count(), Lattice::expected_edge_count(n1, n2));
      for (int i = 0; i < lat.edge_count(); ++i) EXPECT_EQ(lat.edge_index(lat.edge_at(i)), i);
    }
  EXPECT_EQ(Lattice(3, 3).edge_count(), 12);
}

TEST(Lattice, RowMajorOrder) {
  const Lattice lat(2, 2);
  ASSERT_EQ(lat.edge_count(), 4);
  EXPECT_EQ(to_string(lat.edge_at(0)), "1(0,0)");
  EXPECT_EQ(to_string(lat.edge_at(1)), "2(0,0)");
  EXPECT_EQ(to_string(lat.edge_at(2)), "2(1,0)");
  EXPECT_EQ(to_string(lat.edge_at(3)), "1(0,1)");
}

TEST(GaugeAction, IdentityTransformIsNoOp) {
  std::mt19937_64 rng(1);
  const Lattice lat(3, 2);
  const GaugeField u = random_field(lat, rng);
  const GaugeField v = apply_gauge(u, GaugeTransform(lat));
  for (int i = 0; i < lat.edge_count(); ++i) EXPECT_LE(max_abs_diff(u[i], v[i]), 1e-15);
}

TEST(GaugeAction, IdentityFieldBecomesPureGauge) {
  std::mt19937_64 rng(2);
  const Lattice lat(3, 3);
  const GaugeTransform k = random_transform(lat, rng);
  const GaugeField v = apply_gauge(GaugeField(lat), k);
  for (const EdgeId& e : lat.edges())
    EXPECT_LE(max_abs_diff(v.at(e), k.at(e.head()).inverse() * k.at(e.tail())), 1e-15);
}

TEST(GaugeAction, Composition) {
  std::mt19937_64 rng(3);
  const Lattice lat(3, 2);
  const GaugeField u = random_field(lat, rng);
  const GaugeTransform k = random_transform(lat, rng), l = random_transform(lat, rng);
  const GaugeField a = apply_gauge(apply_gauge(u, k), l);
  const GaugeField b = apply_gauge(u, sitewise_product(k, l));
  for (int i = 0; i < lat.edge_count(); ++i) EXPECT_LE(max_abs_diff(a[i], b[i]), 1e-14);
}

TEST(Plaquette, IdentityTraceIsTwo) {
  const Lattice lat(3, 3);
  for (const Site& c : plaquette_corners(lat)) EXPECT_EQ(plaquette_trace(GaugeField(lat), c), 2.0);
  EXPECT_EQ(plaquette_corners(lat).size(), 4u);
  EXPECT_THROW(plaquette(GaugeField(lat), {2, 0}), std::domain_error);
}

TEST(Plaquette, GaugeInvariant) {
  std::mt19937_64 rng(4);
  const Lattice lat(4, 3);
  for (int t = 0; t < 10; ++t) {
    const GaugeField u = random_field(lat, rng);
    const GaugeField v = apply_gauge(u, random_transform(lat, rng));
    for (const Site& c : plaquette_corners(lat)) EXPECT_NEAR(plaquette_trace(u, c), plaquette_trace(v, c), 1e-12);
  }
}

TEST(Plaquette, MatchesMatrixHolonomy) {
  std::mt19937_64 rng(5);
  const Lattice lat(2, 2);
  const GaugeField u = random_field(lat, rng);
  const auto m = [&](const EdgeId& e) { return oracle::to_matrix(u.at(e)); };
  const oracle::M2 hol =
      m({{0, 0}, 2}).adjoint() * m({{0, 1}, 1}).adjoint() * m({{1, 0}, 2}) * m({{0, 0}, 1});
  EXPECT_NEAR(plaquette_trace(u, {0, 0}), hol.trace().real(), 1e-14);
  EXPECT_NEAR(plaquette_trace(u, {0, 0}), 2.0 * plaquette(u, {0, 0}).q0, 1e-15);
}

TEST(Wilson, Terms) {
  std::mt19937_64 rng(6);
  const Lattice lat(3, 3);
  const GaugeField u = random_field(lat, rng);
  EXPECT_NEAR(space_time_action(u, u, GaugeTransform(lat)), 0.0, 1e-14);
  EXPECT_EQ(space_space_action(GaugeField(lat)), 0.0);
  for (int t = 0; t < 20; ++t) {
    const GaugeField a = random_field(lat, rng), b = random_field(lat, rng);
    const WilsonTerms w = wilson_terms(a, b, random_transform(lat, rng));
    EXPECT_GE(w.space_time, 0.0);
    EXPECT_GE(w.space_space, 0.0);
  }
}

// ---------------------------------------------------------------------------
// Field files.

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("orbitgauge_test_" + name);
}

FieldFormatError::Kind parse_kind(const std::string& text) {
  try {
    field_from_string(text);
  } catch (const FieldFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return FieldFormatError::Kind::io;
}

}  // namespace

TEST(FieldIo, RoundTripIsBitwise) {
  std::mt19937_64 rng(7);
  const GaugeField u = random_field(Lattice(3, 4), rng);
  const auto path = temp_path("roundtrip.txt");
  field_io_write(path, u, {"config 0123"});
  const GaugeField v = field_io_read(path);
  ASSERT_TRUE(v.lattice() == u.lattice());
  for (int i = 0; i < u.lattice().edge_count(); ++i) EXPECT_EQ(u[i], v[i]);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

TEST(FieldIo, RejectsBadNorm) {
  std::string text = field_to_string(GaugeField(Lattice(2, 2)));
  text.replace(text.find("0 0 1 1 0 0 0"), 13, "0 0 1 1.1 0 0 0");
  EXPECT_EQ(parse_kind(text), FieldFormatError::Kind::norm);
}

TEST(FieldIo, RejectsMissingEdge) {
  std::string text = field_to_string(GaugeField(Lattice(3, 3)));
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  try {
    field_from_string(text);
    FAIL();
  } catch (const FieldFormatError& e) {
    EXPECT_EQ(e.kind(), FieldFormatError::Kind::count);
    EXPECT_NE(std::string(e.what()).find("expected 12"), std::string::npos) << e.what();
  }
}

TEST(FieldIo, RejectsHeaderAndOrder) {
  EXPECT_EQ(parse_kind("orbitgauge v2 2 2\n"), FieldFormatError::Kind::header);
  EXPECT_EQ(parse_kind(""), FieldFormatError::Kind::header);
  EXPECT_EQ(parse_kind("orbitgauge v1 2 1\n0 0 2 1 0 0 0\n"), FieldFormatError::Kind::order);
  EXPECT_EQ(parse_kind("orbitgauge v1 2 1\n0 0 1 one 0 0 0\n"), FieldFormatError::Kind::parse);
  EXPECT_THROW(field_io_read(temp_path("does_not_exist")), FieldFormatError);
}

TEST(FieldIo, PlaquetteCsv) {
  const std::string csv = plaquette_csv(GaugeField(Lattice(2, 3)));
  EXPECT_EQ(csv, "x1,x2,trace\n0,0,2\n0,1,2\n");
}
