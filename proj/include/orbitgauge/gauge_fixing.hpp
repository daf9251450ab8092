#pragma once

// Complete axial gauge fixing.
//
// 1. Maximal tree: every direction-1 edge and every direction-2 edge with
//    x1 = 0 is set to the identity by a gauge transformation built by walking
//    the tree outward from the origin (K(0,0) = 1).
// 2. Last edge: a constant transformation g (which keeps the tree links at the
//    identity) diagonalizes U_2(1,0) into exp(i phi sz) with phi in (0, pi).
// 3. Residual phase: g is only determined up to g * exp(i psi sz). psi is
//    fixed by rotating the reference edge, the first unfixed non-last edge in
//    row-major order whose (q1, q2) does not vanish, to q2 = 0, q1 > 0.
//
// When U_2(1,0) = +-1 the stabilizer is all of SU(2) (a conically singular
// orbit); fix_last_edge then returns the tree-fixed field flagged singular.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "orbitgauge/lattice.hpp"

namespace orbitgauge {

inline constexpr double kSingularTraceThreshold = 2.0 - 1e-10;
inline constexpr double kDiagonalEps = 1e-10;

// Which eligible edge serves as the residual-phase reference. first_eligible
// is the standard convention; last_eligible exists to compare conventions.
enum class ResidualConvention { first_eligible, last_eligible };

inline bool is_tree_edge(const EdgeId& e) { return e.dir == 1 || e.site.x1 == 0; }

inline bool has_last_edge(const Lattice& lat) { return lat.n1() >= 2 && lat.n2() >= 2; }
inline EdgeId last_edge() { return {{1, 0}, 2}; }

inline std::vector<EdgeId> tree_edges(const Lattice& lat) {
  std::vector<EdgeId> out;
  for (const EdgeId& e : lat.edges())
    if (is_tree_edge(e)) out.push_back(e);
  return out;
}

// Non-tree edges in row-major order (the last edge comes first).
inline std::vector<EdgeId> unfixed_edges(const Lattice& lat) {
  std::vector<EdgeId> out;
  for (const EdgeId& e : lat.edges())
    if (!is_tree_edge(e)) out.push_back(e);
  return out;
}

struct FixedConfiguration {
  GaugeField field;
  GaugeTransform applied;  // field == apply_gauge(input, applied)
  std::vector<EdgeId> tree_edges;
  bool last_edge_fixed = false;
  bool singular = false;          // U_2(1,0) = +-1: stabilizer is SU(2)
  bool residual_unfixed = false;  // no reference edge: the sz phase stays free
  double phi = 0.0;               // U_2(1,0) = exp(i phi sz)
  std::optional<EdgeId> reference_edge;
};

inline FixedConfiguration maximal_tree(const GaugeField& u) {
  const Lattice& lat = u.lattice();
  GaugeTransform k(lat);
  for (int x2 = 0; x2 + 1 < lat.n2(); ++x2) {
    k.at({0, x2 + 1}) = u.at({{0, x2}, 2}) * k.at({0, x2});
  }
  for (int x2 = 0; x2 < lat.n2(); ++x2) {
    for (int x1 = 0; x1 + 1 < lat.n1(); ++x1) {
      k.at({x1 + 1, x2}) = u.at({{x1, x2}, 1}) * k.at({x1, x2});
    }
  }
  GaugeField v = apply_gauge(u, k);
  for (const EdgeId& e : lat.edges())
    if (is_tree_edge(e)) v.at(e) = UnitQuaternion::identity();
  FixedConfiguration out{std::move(v), std::move(k), tree_edges(lat), false, false, false, 0.0, std::nullopt};
  return out;
}

// Quaternion U with adjoint(U) * from == to, for unit vectors.
inline UnitQuaternion rotation_between(const Vec3& from, const Vec3& to) {
  const double c = 1.0 + from.dot(to);
  if (c < 1e-12) {
    Vec3 axis = from.unitOrthogonal();
    return from_parts(0.0, axis);
  }
  return from_parts(c, -from.cross(to)).normalized();
}

namespace detail {

inline GaugeTransform constant_transform(const Lattice& lat, const UnitQuaternion& g) {
  GaugeTransform out(lat);
  for (int s = 0; s < lat.site_count(); ++s) out[s] = g;
  return out;
}

inline std::optional<EdgeId> find_reference_edge(const GaugeField& v, ResidualConvention convention) {
  std::optional<EdgeId> found;
  for (const EdgeId& e : unfixed_edges(v.lattice())) {
    if (e == last_edge()) continue;
    const UnitQuaternion& q = v.at(e);
    if (std::hypot(q.q1, q.q2) > kDiagonalEps) {
      found = e;
      if (convention == ResidualConvention::first_eligible) break;
    }
  }
  return found;
}

}  // namespace detail

inline FixedConfiguration fix_last_edge(const FixedConfiguration& partial,
                                        ResidualConvention convention = ResidualConvention::first_eligible) {
  const Lattice& lat = partial.field.lattice();
  if (!has_last_edge(lat)) throw std::invalid_argument("lattice has no edge U_2(1,0) to diagonalize");

  FixedConfiguration out = partial;
  out.last_edge_fixed = true;
  const UnitQuaternion w = partial.field.at(last_edge());
  if (std::abs(re_trace(w)) > kSingularTraceThreshold) {
    out.singular = true;
    out.phi = w.q0 > 0.0 ? 0.0 : kPi;
    return out;
  }

  // g^-1 W g has vector part adjoint(g^-1) w, rotated onto +e3.
  const UnitQuaternion g_inv = rotation_between(w.vec().normalized(), Vec3::UnitZ());
  const GaugeField rotated = apply_gauge(partial.field, detail::constant_transform(lat, g_inv.inverse()));

  UnitQuaternion z_inv = UnitQuaternion::identity();
  out.reference_edge = detail::find_reference_edge(rotated, convention);
  if (out.reference_edge) {
    const UnitQuaternion& q = rotated.at(*out.reference_edge);
    const double chi = std::atan2(q.q2, q.q1);
    z_inv = pauli_exp(2, 0.5 * chi);
  } else {
    out.residual_unfixed = true;
  }

  const UnitQuaternion g_total = (z_inv * g_inv).inverse();
  out.applied = sitewise_product(partial.applied, detail::constant_transform(lat, g_total));
  out.field = apply_gauge(partial.field, detail::constant_transform(lat, g_total));
  for (const EdgeId& e : lat.edges())
    if (is_tree_edge(e)) out.field.at(e) = UnitQuaternion::identity();

  UnitQuaternion& last = out.field.at(last_edge());
  last = UnitQuaternion{last.q0, 0.0, 0.0, std::abs(last.q3)}.normalized();
  out.phi = std::atan2(last.q3, last.q0);
  if (out.reference_edge) {
    UnitQuaternion& r = out.field.at(*out.reference_edge);
    r = UnitQuaternion{r.q0, std::hypot(r.q1, r.q2), 0.0, r.q3}.normalized();
  }
  return out;
}

inline FixedConfiguration reconstruct_orbit_representative(
    const GaugeField& u, ResidualConvention convention = ResidualConvention::first_eligible) {
  FixedConfiguration partial = maximal_tree(u);
  if (!has_last_edge(u.lattice())) return partial;
  return fix_last_edge(partial, convention);
}

// Largest deviation from the fixing invariants: tree links identity, last edge
// diagonal, and field == apply_gauge(input, applied).
inline double fixing_violation(const GaugeField& input, const FixedConfiguration& cfg) {
  const Lattice& lat = input.lattice();
  double worst = 0.0;
  for (const EdgeId& e : lat.edges())
    if (is_tree_edge(e)) worst = std::max(worst, max_abs_diff(cfg.field.at(e), UnitQuaternion::identity()));
  if (cfg.last_edge_fixed && !cfg.singular) {
    const UnitQuaternion& q = cfg.field.at(last_edge());
    worst = std::max({worst, std::abs(q.q1), std::abs(q.q2)});
  }
  const GaugeField re = apply_gauge(input, cfg.applied);
  for (int i = 0; i < lat.edge_count(); ++i) worst = std::max(worst, max_abs_diff(re[i], cfg.field[i]));
  return worst;
}

inline double max_edge_difference(const GaugeField& a, const GaugeField& b) {
  require_same_lattice(a.lattice(), b.lattice());
  double worst = 0.0;
  for (int i = 0; i < a.lattice().edge_count(); ++i) worst = std::max(worst, max_abs_diff(a[i], b[i]));
  return worst;
}

}  // namespace orbitgauge
