#pragma once

// Open rectangular 2-D lattice with n1 x n2 sites at integer coordinates
// 0..n1-1, 0..n2-1. Edge (x, j) joins x and x + j^.
//
// Edges are stored in row-major order: x2 outer, x1 inner, and at each site
// the direction-1 edge before the direction-2 edge. Gauge transformations act
// as V_j(x) = K(x + j^)^-1 U_j(x) K(x).

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orbitgauge/su2.hpp"

namespace orbitgauge {

struct Site {
  int x1 = 0;
  int x2 = 0;
  constexpr bool operator==(const Site&) const = default;
};

struct EdgeId {
  Site site;
  int dir = 1;  // 1 or 2
  constexpr bool operator==(const EdgeId&) const = default;

  Site tail() const { return site; }
  Site head() const { return dir == 1 ? Site{site.x1 + 1, site.x2} : Site{site.x1, site.x2 + 1}; }
};

inline std::string to_string(const EdgeId& e) {
  return std::to_string(e.dir) + "(" + std::to_string(e.site.x1) + "," + std::to_string(e.site.x2) + ")";
}

class Lattice {
 public:
  Lattice(int n1, int n2) : n1_(n1), n2_(n2) {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("lattice extents must be positive");
    edge_index_.assign(static_cast<std::size_t>(2 * n1 * n2), -1);
    for (int x2 = 0; x2 < n2; ++x2) {
      for (int x1 = 0; x1 < n1; ++x1) {
        for (int dir = 1; dir <= 2; ++dir) {
          const EdgeId e{{x1, x2}, dir};
          if (!contains(e.head())) continue;
          edge_index_[slot(e)] = static_cast<int>(edges_.size());
          edges_.push_back(e);
        }
      }
    }
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int site_count() const { return n1_ * n2_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  // E = n2 (n1 - 1) + n1 (n2 - 1)
  static constexpr int expected_edge_count(int n1, int n2) { return n2 * (n1 - 1) + n1 * (n2 - 1); }

  bool contains(const Site& s) const { return s.x1 >= 0 && s.x1 < n1_ && s.x2 >= 0 && s.x2 < n2_; }
  bool contains(const EdgeId& e) const {
    return (e.dir == 1 || e.dir == 2) && contains(e.site) && contains(e.head());
  }

  int site_index(const Site& s) const { return s.x1 + n1_ * s.x2; }
  Site site_at(int index) const { return {index % n1_, index / n1_}; }

  int edge_index(const EdgeId& e) const {
    if (!contains(e)) throw std::out_of_range("edge outside lattice: " + to_string(e));
    return edge_index_[slot(e)];
  }
  const EdgeId& edge_at(int index) const { return edges_.at(static_cast<std::size_t>(index)); }
  const std::vector<EdgeId>& edges() const { return edges_; }

  bool operator==(const Lattice& o) const { return n1_ == o.n1_ && n2_ == o.n2_; }

 private:
  std::size_t slot(const EdgeId& e) const {
    return static_cast<std::size_t>(2 * site_index(e.site) + (e.dir - 1));
  }

  int n1_;
  int n2_;
  std::vector<EdgeId> edges_;
  std::vector<int> edge_index_;
};

// One configuration {U}: an SU(2) element on every edge.
class GaugeField {
 public:
  explicit GaugeField(Lattice lattice)
      : lattice_(std::move(lattice)),
        links_(static_cast<std::size_t>(lattice_.edge_count()), UnitQuaternion::identity()) {}

  const Lattice& lattice() const { return lattice_; }
  std::size_t size() const { return links_.size(); }

  const UnitQuaternion& operator[](int edge_index) const { return links_[static_cast<std::size_t>(edge_index)]; }
  UnitQuaternion& operator[](int edge_index) { return links_[static_cast<std::size_t>(edge_index)]; }
  const UnitQuaternion& at(const EdgeId& e) const { return (*this)[lattice_.edge_index(e)]; }
  UnitQuaternion& at(const EdgeId& e) { return (*this)[lattice_.edge_index(e)]; }

  const std::vector<UnitQuaternion>& links() const { return links_; }

 private:
  Lattice lattice_;
  std::vector<UnitQuaternion> links_;
};

// One gauge transformation {K}: an SU(2) element on every site.
class GaugeTransform {
 public:
  explicit GaugeTransform(Lattice lattice)
      : lattice_(std::move(lattice)),
        sites_(static_cast<std::size_t>(lattice_.site_count()), UnitQuaternion::identity()) {}

  const Lattice& lattice() const { return lattice_; }
  const UnitQuaternion& operator[](int site_index) const { return sites_[static_cast<std::size_t>(site_index)]; }
  UnitQuaternion& operator[](int site_index) { return sites_[static_cast<std::size_t>(site_index)]; }
  const UnitQuaternion& at(const Site& s) const { return (*this)[lattice_.site_index(s)]; }
  UnitQuaternion& at(const Site& s) { return (*this)[lattice_.site_index(s)]; }

  GaugeTransform inverse() const {
    GaugeTransform out(lattice_);
    for (std::size_t i = 0; i < sites_.size(); ++i) out.sites_[i] = sites_[i].inverse();
    return out;
  }

 private:
  Lattice lattice_;
  std::vector<UnitQuaternion> sites_;
};

template <class Rng>
GaugeField random_field(const Lattice& lattice, Rng& rng) {
  GaugeField u(lattice);
  for (int e = 0; e < lattice.edge_count(); ++e) u[e] = haar_sample(rng);
  return u;
}

template <class Rng>
GaugeTransform random_transform(const Lattice& lattice, Rng& rng) {
  GaugeTransform k(lattice);
  for (int s = 0; s < lattice.site_count(); ++s) k[s] = haar_sample(rng);
  return k;
}

inline void require_same_lattice(const Lattice& a, const Lattice& b) {
  if (!(a == b)) throw std::invalid_argument("fields live on different lattices");
}

// {U}^{K}: V_j(x) = K(x + j^)^-1 U_j(x) K(x).
// apply_gauge(apply_gauge(U, K), L) == apply_gauge(U, K * L) with (K * L)(x) = K(x) L(x).
inline GaugeField apply_gauge(const GaugeField& u, const GaugeTransform& k) {
  require_same_lattice(u.lattice(), k.lattice());
  const Lattice& lat = u.lattice();
  GaugeField v(lat);
  for (int i = 0; i < lat.edge_count(); ++i) {
    const EdgeId& e = lat.edge_at(i);
    v[i] = k.at(e.head()).inverse() * u[i] * k.at(e.tail());
  }
  return v;
}

inline GaugeTransform sitewise_product(const GaugeTransform& k, const GaugeTransform& l) {
  require_same_lattice(k.lattice(), l.lattice());
  GaugeTransform out(k.lattice());
  for (int s = 0; s < k.lattice().site_count(); ++s) out[s] = k[s] * l[s];
  return out;
}

inline bool has_plaquette(const Lattice& lat, const Site& corner) {
  return lat.contains(corner) && corner.x1 + 1 < lat.n1() && corner.x2 + 1 < lat.n2();
}

// Ordered product around the unit square at `corner`, in the orientation that
// is covariant under apply_gauge: U2(x)^-1 U1(x+2^)^-1 U2(x+1^) U1(x).
inline UnitQuaternion plaquette(const GaugeField& u, const Site& corner) {
  const Lattice& lat = u.lattice();
  if (!has_plaquette(lat, corner)) {
    throw std::domain_error("plaquette corner (" + std::to_string(corner.x1) + "," +
                            std::to_string(corner.x2) + ") has no forward square");
  }
  const auto& u1 = u.at({corner, 1});
  const auto& u2_right = u.at({{corner.x1 + 1, corner.x2}, 2});
  const auto& u1_top = u.at({{corner.x1, corner.x2 + 1}, 1});
  const auto& u2 = u.at({corner, 2});
  return u2.inverse() * u1_top.inverse() * u2_right * u1;
}

inline double plaquette_trace(const GaugeField& u, const Site& corner) { return re_trace(plaquette(u, corner)); }

inline std::vector<Site> plaquette_corners(const Lattice& lat) {
  std::vector<Site> out;
  for (int x2 = 0; x2 + 1 < lat.n2(); ++x2)
    for (int x1 = 0; x1 + 1 < lat.n1(); ++x1) out.push_back({x1, x2});
  return out;
}

struct WilsonTerms {
  double space_time = 0.0;
  double space_space = 0.0;
};

// Plaquette sums of the Wilson action with U_j(x,t) -> U, U_j(x,t+1) -> V and
// U_0(x,t) -> K. Each plaquette contributes N/2 - Re Tr(P)/2 with N = 2, so
// every term lies in [0, 2] and vanishes on the identity.
inline double space_time_action(const GaugeField& u, const GaugeField& v, const GaugeTransform& k) {
  require_same_lattice(u.lattice(), v.lattice());
  require_same_lattice(u.lattice(), k.lattice());
  const Lattice& lat = u.lattice();
  double sum = 0.0;
  for (int i = 0; i < lat.edge_count(); ++i) {
    const EdgeId& e = lat.edge_at(i);
    const UnitQuaternion uk = k.at(e.head()).inverse() * u[i] * k.at(e.tail());
    sum += 0.5 * chord_sq(v[i], uk);
  }
  return sum;
}

inline double space_space_action(const GaugeField& u) {
  double sum = 0.0;
  for (const Site& c : plaquette_corners(u.lattice())) sum += 1.0 - 0.5 * plaquette_trace(u, c);
  return sum;
}

inline WilsonTerms wilson_terms(const GaugeField& u, const GaugeField& v, const GaugeTransform& k) {
  return {space_time_action(u, v, k), space_space_action(u)};
}

}  // namespace orbitgauge
