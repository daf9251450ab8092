#pragma once

// Euler-angle charts on one link and on the completely gauge-fixed lattice.

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbitgauge/gauge_fixing.hpp"

namespace orbitgauge {

class ChartSingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class StabilizerDegeneracyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kChartSingularEps = 1e-8;

// Vielbein of one link: -i (d_gamma U) U^-1 = M(gamma, a) t_a, rows gamma =
// (alpha, beta, theta). The right-trivialized frame is the one for which
// l_b = sum_gamma minv(gamma, b) d_gamma satisfies [l_b, U] = -t_b U.
// minv is stored as (M^-1)^T, so column b holds the chart components of l_b.
struct Vielbein {
  Eigen::Matrix3d m;
  std::optional<Eigen::Matrix3d> minv;
};

inline Eigen::Matrix3d vielbein_matrix(const EulerAngles& a) {
  const double sa = std::sin(a.alpha), ca = std::cos(a.alpha);
  const double sb = std::sin(a.beta), cb = std::cos(a.beta);
  Eigen::Matrix3d n;
  n << 0.0, 0.0, 1.0,
       ca, -sa, 0.0,
       sa * sb, ca * sb, cb;
  return n / kSqrt2;
}

inline bool is_chart_singular(const EulerAngles& a) { return std::abs(std::sin(a.beta)) < kChartSingularEps; }

inline Vielbein vielbein_at(const EulerAngles& a) {
  Vielbein v{vielbein_matrix(a), std::nullopt};
  if (!is_chart_singular(a)) v.minv = v.m.inverse().transpose();
  return v;
}

// Row b: chart components (d_alpha, d_beta, d_theta) of the electric field l_b.
inline Eigen::Matrix3d electric_fields_one_edge(const EulerAngles& a) {
  if (is_chart_singular(a)) {
    throw ChartSingularityError("Euler chart is singular at beta = " + std::to_string(a.beta));
  }
  return vielbein_matrix(a).inverse();
}

// ---------------------------------------------------------------------------
// Chart layout.
//
// axial:     every unfixed edge except U_2(1,0) contributes (alpha, beta, theta);
//            U_2(1,0) contributes alpha only. 3(E - S + 1) - 2 coordinates.
// free_edge: the single-link lattice without gauge fixing; the three Euler
//            angles of its one edge.

enum class ChartKind { axial, free_edge };

struct ChartCoordinate {
  EdgeId edge;
  int angle = 0;  // 0 alpha, 1 beta, 2 theta
};

inline std::string coordinate_name(const ChartCoordinate& c) {
  static constexpr const char* names[] = {"alpha", "beta", "theta"};
  return std::string(names[c.angle]) + "_" + to_string(c.edge);
}

class ChartLayout {
 public:
  explicit ChartLayout(Lattice lattice) : lattice_(std::move(lattice)) {
    if (lattice_.edge_count() == 1) {
      kind_ = ChartKind::free_edge;
      chart_edges_.push_back(lattice_.edge_at(0));
      for (int g = 0; g < 3; ++g) coords_.push_back({chart_edges_[0], g});
    } else if (has_last_edge(lattice_)) {
      kind_ = ChartKind::axial;
      chart_edges_ = unfixed_edges(lattice_);
      for (const EdgeId& e : chart_edges_) {
        if (e == last_edge()) {
          coords_.push_back({e, 0});
        } else {
          for (int g = 0; g < 3; ++g) coords_.push_back({e, g});
        }
      }
    } else {
      throw std::invalid_argument("orbit space of a " + std::to_string(lattice_.n1()) + "x" +
                                  std::to_string(lattice_.n2()) + " lattice is a point; no chart");
    }
    first_coord_.assign(chart_edges_.size(), 0);
    int k = 0;
    for (std::size_t i = 0; i < chart_edges_.size(); ++i) {
      first_coord_[i] = k;
      k += is_last(chart_edges_[i]) ? 1 : 3;
    }
  }

  ChartKind kind() const { return kind_; }
  const Lattice& lattice() const { return lattice_; }
  int dimension() const { return static_cast<int>(coords_.size()); }
  const std::vector<ChartCoordinate>& coordinates() const { return coords_; }
  const std::vector<EdgeId>& chart_edges() const { return chart_edges_; }

  bool is_last(const EdgeId& e) const { return kind_ == ChartKind::axial && e == last_edge(); }

  // Index of the first coordinate of chart edge i (alpha).
  int first_coordinate(std::size_t chart_edge) const { return first_coord_[chart_edge]; }

  int chart_edge_index(const EdgeId& e) const {
    for (std::size_t i = 0; i < chart_edges_.size(); ++i)
      if (chart_edges_[i] == e) return static_cast<int>(i);
    return -1;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : coords_) out.push_back(coordinate_name(c));
    return out;
  }

 private:
  Lattice lattice_;
  ChartKind kind_ = ChartKind::axial;
  std::vector<EdgeId> chart_edges_;
  std::vector<ChartCoordinate> coords_;
  std::vector<int> first_coord_;
};

inline int expected_chart_dimension(const Lattice& lat) {
  return 3 * (lat.edge_count() - lat.site_count() + 1) - 2;
}

struct ChartPoint {
  std::shared_ptr<const ChartLayout> layout;
  Eigen::VectorXd coords;
  std::vector<int> signs;  // per chart edge: field = sign * euler_compose(angles)
  FixedConfiguration base;

  EulerAngles angles(std::size_t chart_edge) const {
    const int k = layout->first_coordinate(chart_edge);
    if (layout->is_last(layout->chart_edges()[chart_edge])) return {coords[k], 0.0, 0.0};
    return {coords[k], coords[k + 1], coords[k + 2]};
  }
};

// Field represented by chart coordinates: tree links at the identity, the last
// edge exp(i alpha/2 sz), every other chart edge sign * euler_compose.
inline GaugeField compose_field(const ChartLayout& layout, const Eigen::VectorXd& coords,
                                const std::vector<int>& signs) {
  GaugeField u(layout.lattice());
  const auto& edges = layout.chart_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int k = layout.first_coordinate(i);
    EulerAngles a{coords[k], 0.0, 0.0};
    if (!layout.is_last(edges[i])) a = {coords[k], coords[k + 1], coords[k + 2]};
    UnitQuaternion q = euler_compose(a);
    if (signs[i] < 0) q = -q;
    u.at(edges[i]) = q;
  }
  return u;
}

inline GaugeField compose_field(const ChartPoint& p) { return compose_field(*p.layout, p.coords, p.signs); }

inline ChartPoint chart_point(const FixedConfiguration& cfg) {
  auto layout = std::make_shared<const ChartLayout>(cfg.field.lattice());
  ChartPoint p{layout, Eigen::VectorXd::Zero(layout->dimension()),
               std::vector<int>(layout->chart_edges().size(), 1), cfg};
  if (layout->kind() == ChartKind::axial && !cfg.last_edge_fixed) {
    throw std::invalid_argument("chart_point needs a completely fixed configuration");
  }
  const auto& edges = layout->chart_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const EulerDecomposition d = euler_decompose(cfg.field.at(edges[i]));
    const int k = layout->first_coordinate(i);
    p.signs[i] = d.sign;
    p.coords[k] = d.angles.alpha;
    if (!layout->is_last(edges[i])) {
      p.coords[k + 1] = d.angles.beta;
      p.coords[k + 2] = d.angles.theta;
    }
  }
  return p;
}

// The single-link reference geometry: no gauge fixing.
inline FixedConfiguration unfixed_configuration(const GaugeField& u) {
  return {u, GaugeTransform(u.lattice()), {}, false, false, false, 0.0, std::nullopt};
}

// Chart point of any field: gauge-fixes on axial lattices, uses the link
// itself on the single-edge lattice.
inline ChartPoint chart_point_of(const GaugeField& u) {
  if (u.lattice().edge_count() == 1) return chart_point(unfixed_configuration(u));
  return chart_point(reconstruct_orbit_representative(u));
}

// Largest |difference| between two coordinate vectors, angles taken mod 2 pi.
inline double chart_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(wrap_pi(a[i] - b[i])));
  return worst;
}

}  // namespace orbitgauge
