#pragma once

// Differential geometry of the gauge-fixed chart.
//
// Every electric field l_b(e) acts on gauge-invariant functions as a first
// order operator on the chart. Its coefficients (one row of the vector-field
// matrix E) are found by splitting the right-trivialized tangent vector
// xi = e_b on edge e into a slice part plus an infinitesimal gauge
// transformation,
//     xi' = xi - D eta,   (D eta)_u = R_u eta(tail u) - eta(head u).
// Keeping the tree links fixed gives the Gauss-law recursion
//     eta(head) = eta(tail) - xi_tree,   eta(0,0) = eta0,
// keeping U_2(1,0) diagonal fixes the transverse part of eta0 through
//     (1 - R_2(1,0)) eta0 = -(remaining sources)   (solvable when phi != 0, pi),
// and the residual-phase convention fixes eta0 along the 3-axis.
//
// -Delta = sum_rows l^2 then has principal symbol E^T E = g^-1.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "orbitgauge/chart.hpp"

namespace orbitgauge {

// Block of the Laplace-Beltrami decomposition a row belongs to:
// 1 unfixed edges, 2 direction-1 tree edges, 3 direction-2 tree edges (x1 = 0),
// 4/5/6 the three components of l on U_2(1,0).
struct RowLabel {
  EdgeId edge;
  int component = 0;  // b = 0, 1, 2
  int block = 1;
};

inline int lb_block(const ChartLayout& layout, const EdgeId& e, int component) {
  if (layout.kind() == ChartKind::free_edge) return 1;
  if (e == last_edge()) return 4 + component;
  if (e.dir == 1) return 2;
  if (e.site.x1 == 0) return 3;
  return 1;
}

struct VectorFieldMatrix {
  std::shared_ptr<const ChartLayout> layout;
  Eigen::MatrixXd rows;   // 3E x dim, full pushforward
  Eigen::MatrixXd local;  // Gauss-law part only (eta0 = 0)
  std::vector<RowLabel> labels;
  std::vector<Vec3> head_eta;  // eta of each row's perturbation at its edge's head
};

namespace detail {

// Per-point data shared by the row assembly and the projection metric.
struct ChartFrame {
  std::shared_ptr<const ChartLayout> layout;
  GaugeField field;
  std::vector<So3Matrix> adj;          // per lattice edge
  std::vector<Eigen::Matrix3d> minv;   // per chart edge, (M^-1)^T; unused for the last edge
  std::vector<Eigen::Matrix3d> m;      // per chart edge
  int reference = -1;                  // chart edge index of the residual reference
  Vec3 reference_q2;                   // d q2(reference) / d xi
  Eigen::Matrix2d last_block_inv;      // ((1 - R_L) restricted to the 12-plane)^-1
};

inline Vec3 q2_gradient(const UnitQuaternion& v) {
  Vec3 c;
  for (int a = 0; a < 3; ++a) {
    Vec3 xi = Vec3::Zero();
    xi[a] = 1.0 / kSqrt2;
    c[a] = mul_raw(from_parts(0.0, xi), v).q2;
  }
  return c;
}

inline ChartFrame make_frame(std::shared_ptr<const ChartLayout> layout, const Eigen::VectorXd& coords,
                             const std::vector<int>& signs, const std::optional<EdgeId>& reference) {
  ChartFrame f{layout, compose_field(*layout, coords, signs), {}, {}, {}, -1, Vec3::Zero(), Eigen::Matrix2d::Zero()};
  const Lattice& lat = layout->lattice();
  for (int i = 0; i < lat.edge_count(); ++i) f.adj.push_back(adjoint(f.field[i]));
  const auto& edges = layout->chart_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int k = layout->first_coordinate(i);
    if (layout->is_last(edges[i])) {
      const double alpha = coords[k];
      if (2.0 * std::abs(std::sin(0.5 * alpha)) < kChartSingularEps) {
        throw StabilizerDegeneracyError("U_2(1,0) is central (|1 - k| ~ 0); stabilizer is SU(2)");
      }
      f.m.push_back(vielbein_matrix({alpha, 0.0, 0.0}));
      f.minv.push_back(Eigen::Matrix3d::Zero());
      const Eigen::Matrix3d one_minus_r = Eigen::Matrix3d::Identity() - f.adj[lat.edge_index(edges[i])];
      f.last_block_inv = one_minus_r.topLeftCorner<2, 2>().inverse();
    } else {
      const EulerAngles a{coords[k], coords[k + 1], coords[k + 2]};
      if (is_chart_singular(a)) {
        throw ChartSingularityError("Euler chart singular on edge " + to_string(edges[i]));
      }
      f.m.push_back(vielbein_matrix(a));
      f.minv.push_back(f.m.back().inverse().transpose());
    }
  }
  if (layout->kind() == ChartKind::axial && reference) {
    f.reference = layout->chart_edge_index(*reference);
    if (f.reference >= 0) f.reference_q2 = q2_gradient(f.field.at(*reference));
  }
  return f;
}

inline ChartFrame make_frame(const ChartPoint& p) {
  return make_frame(p.layout, p.coords, p.signs, p.base.reference_edge);
}

// Gauss-law source for xi = e_b on edge e: the tree-path indicator P(x).
inline bool downstream_of(const EdgeId& e, const Site& x) {
  if (!is_tree_edge(e)) return false;
  if (e.dir == 2) return x.x2 > e.site.x2;  // column x1 = 0
  return x.x2 == e.site.x2 && x.x1 > e.site.x1;
}

struct RowSolution {
  Eigen::VectorXd full;
  Eigen::VectorXd local;
  Vec3 head_eta;
};

inline void chart_velocity(const ChartFrame& f, const std::vector<Vec3>& xi, Eigen::VectorXd& out) {
  const auto& layout = *f.layout;
  const auto& edges = layout.chart_edges();
  out.setZero(layout.dimension());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int k = layout.first_coordinate(i);
    if (layout.is_last(edges[i])) {
      out[k] = kSqrt2 * xi[i].z();
    } else {
      out.segment<3>(k) = f.minv[i] * xi[i];
    }
  }
}

inline RowSolution solve_row(const ChartFrame& f, const EdgeId& e, int b) {
  const auto& layout = *f.layout;
  const Lattice& lat = layout.lattice();
  const auto& edges = layout.chart_edges();
  const Vec3 eb = Vec3::Unit(b);
  auto source = [&](const Site& x) -> Vec3 { return downstream_of(e, x) ? eb : Vec3::Zero(); };

  std::vector<Vec3> base(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const EdgeId& u = edges[i];
    base[i] = (u == e ? eb : Vec3::Zero()) + f.adj[lat.edge_index(u)] * source(u.tail()) - source(u.head());
  }

  Vec3 eta0 = Vec3::Zero();
  const int last = layout.chart_edge_index(last_edge());
  eta0.head<2>() = -f.last_block_inv * base[static_cast<std::size_t>(last)].head<2>();
  if (f.reference >= 0) {
    const auto r = static_cast<std::size_t>(f.reference);
    const Eigen::Matrix3d one_minus_r = Eigen::Matrix3d::Identity() - f.adj[lat.edge_index(edges[r])];
    const double den = f.reference_q2.dot(one_minus_r.col(2));
    if (std::abs(den) < 1e-14) throw StabilizerDegeneracyError("residual phase direction is degenerate");
    eta0.z() = -f.reference_q2.dot(base[r] + one_minus_r * eta0) / den;
  }

  RowSolution sol;
  chart_velocity(f, base, sol.local);
  std::vector<Vec3> xi(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    xi[i] = base[i] + (Eigen::Matrix3d::Identity() - f.adj[lat.edge_index(edges[i])]) * eta0;
  }
  chart_velocity(f, xi, sol.full);
  sol.head_eta = eta0 - source(e.head());
  return sol;
}

inline VectorFieldMatrix assemble(const ChartFrame& f) {
  const auto& layout = *f.layout;
  const Lattice& lat = layout.lattice();
  VectorFieldMatrix out;
  out.layout = f.layout;
  const int rows = 3 * lat.edge_count();
  out.rows.setZero(rows, layout.dimension());
  out.local.setZero(rows, layout.dimension());

  if (layout.kind() == ChartKind::free_edge) {
    const Eigen::Matrix3d l = f.minv[0].transpose();
    out.rows = l;
    out.local = l;
    for (int b = 0; b < 3; ++b) {
      out.labels.push_back({lat.edge_at(0), b, 1});
      out.head_eta.push_back(Vec3::Zero());
    }
    return out;
  }

  int r = 0;
  for (const EdgeId& e : lat.edges()) {
    for (int b = 0; b < 3; ++b, ++r) {
      const RowSolution sol = solve_row(f, e, b);
      out.rows.row(r) = sol.full.transpose();
      out.local.row(r) = sol.local.transpose();
      out.labels.push_back({e, b, lb_block(layout, e, b)});
      out.head_eta.push_back(sol.head_eta);
    }
  }
  return out;
}

}  // namespace detail

// E matrix at a chart point: rows are the chart components of every l_b(e)
// after the Gauss-law substitution.
inline VectorFieldMatrix gauss_substitution(const ChartPoint& p) {
  if (p.base.singular) throw StabilizerDegeneracyError("configuration lies on a conically singular orbit");
  return detail::assemble(detail::make_frame(p));
}

inline Eigen::MatrixXd inverse_metric(const VectorFieldMatrix& e) { return e.rows.transpose() * e.rows; }

// ---------------------------------------------------------------------------
// Projection metric g = e^T (1 - D (D^T D)^+ D^T) e.

struct MetricPair {
  Eigen::MatrixXd g_inv;
  Eigen::MatrixXd g;
  bool has_constraint = false;
  Eigen::VectorXd constraint_direction;  // residual U(1) motion; kernel of g
  Eigen::VectorXd constraint_normal;     // d q2(reference); kernel of g_inv
  Eigen::MatrixXd projector;             // 3E x 3E
  Eigen::MatrixXd gauge_map;             // D, 3E x 3S
  int gauge_rank = 0;
  int expected_kernel = 0;
  bool rank_deficient = false;
};

inline constexpr double kPinvCutoff = 1e-10;

// Pseudo-inverse dropping singular values below cutoff * largest.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double cutoff, int* rank = nullptr) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff * smax && s[i] > 0.0) {
      inv[i] = 1.0 / s[i];
      ++r;
    }
  }
  if (rank) *rank = r;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// D: infinitesimal gauge transformations eta (3 per site) to right-trivialized
// link deformations, (D eta)_e = R_e eta(tail) - eta(head).
inline Eigen::MatrixXd gauge_map(const GaugeField& u) {
  const Lattice& lat = u.lattice();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3 * lat.edge_count(), 3 * lat.site_count());
  for (int i = 0; i < lat.edge_count(); ++i) {
    const EdgeId& e = lat.edge_at(i);
    d.block<3, 3>(3 * i, 3 * lat.site_index(e.tail())) += adjoint(u[i]);
    d.block<3, 3>(3 * i, 3 * lat.site_index(e.head())) -= Eigen::Matrix3d::Identity();
  }
  return d;
}

// Chart velocities to right-trivialized link deformations.
inline Eigen::MatrixXd chart_embedding(const detail::ChartFrame& f) {
  const auto& layout = *f.layout;
  const Lattice& lat = layout.lattice();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3 * lat.edge_count(), layout.dimension());
  const auto& edges = layout.chart_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int k = layout.first_coordinate(i);
    const int row = 3 * lat.edge_index(edges[i]);
    if (layout.is_last(edges[i])) {
      e.block<3, 1>(row, k) = f.m[i].row(0).transpose();
    } else {
      e.block<3, 3>(row, k) = f.m[i].transpose();
    }
  }
  return e;
}

inline void fill_constraint(const detail::ChartFrame& f, MetricPair& out) {
  const auto& layout = *f.layout;
  const int n = layout.dimension();
  out.constraint_direction = Eigen::VectorXd::Zero(n);
  out.constraint_normal = Eigen::VectorXd::Zero(n);
  if (layout.kind() != ChartKind::axial || f.reference < 0) return;
  out.has_constraint = true;
  const Lattice& lat = layout.lattice();
  const auto& edges = layout.chart_edges();
  std::vector<Vec3> xi(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    xi[i] = (f.adj[lat.edge_index(edges[i])] - Eigen::Matrix3d::Identity()) * Vec3::UnitZ();
  }
  detail::chart_velocity(f, xi, out.constraint_direction);
  const auto r = static_cast<std::size_t>(f.reference);
  out.constraint_normal.segment<3>(layout.first_coordinate(r)) = f.m[r] * f.reference_q2;
}

inline MetricPair projection_metric(const ChartPoint& p) {
  if (p.base.singular) throw StabilizerDegeneracyError("configuration lies on a conically singular orbit");
  const detail::ChartFrame f = detail::make_frame(p);
  const Lattice& lat = p.layout->lattice();
  MetricPair out;
  const Eigen::MatrixXd emb = chart_embedding(f);
  const int dim3e = 3 * lat.edge_count();
  if (p.layout->kind() == ChartKind::free_edge) {
    out.projector = Eigen::MatrixXd::Identity(dim3e, dim3e);
    out.gauge_map = Eigen::MatrixXd::Zero(dim3e, 0);
  } else {
    out.gauge_map = gauge_map(f.field);
    const Eigen::MatrixXd dtd = out.gauge_map.transpose() * out.gauge_map;
    const Eigen::MatrixXd dtd_pinv = pseudo_inverse(dtd, kPinvCutoff, &out.gauge_rank);
    out.projector = Eigen::MatrixXd::Identity(dim3e, dim3e) - out.gauge_map * dtd_pinv * out.gauge_map.transpose();
    out.expected_kernel = f.reference < 0 ? 1 : 0;
    out.rank_deficient = out.gauge_rank < 3 * lat.site_count() - out.expected_kernel;
  }
  out.g = emb.transpose() * out.projector * emb;
  out.g = 0.5 * (out.g + out.g.transpose()).eval();
  fill_constraint(f, out);
  return out;
}

inline MetricPair metric_pair(const ChartPoint& p) {
  MetricPair out = projection_metric(p);
  out.g_inv = inverse_metric(gauss_substitution(p));
  return out;
}

struct ConsistencyReport {
  double complement_residual = 0.0;  // max |(g_inv g - 1) v| over unit v with normal.v = 0
  double constraint_residual = 0.0;  // |g c| / |c| and |g_inv n| / |n|: both kernels
  bool has_constraint = false;
  bool pass = false;
};

inline constexpr double kConsistencyTolerance = 1e-8;

inline ConsistencyReport consistency_check(const MetricPair& pair, double tol = kConsistencyTolerance) {
  const Eigen::Index n = pair.g.rows();
  const Eigen::MatrixXd defect = pair.g_inv * pair.g - Eigen::MatrixXd::Identity(n, n);
  ConsistencyReport rep;
  rep.has_constraint = pair.has_constraint;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  if (pair.has_constraint && pair.constraint_normal.norm() > 0.0) {
    // Orthonormal basis of the hyperplane normal . v = 0.
    Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(pair.constraint_normal);
    const Eigen::MatrixXd q = qr.matrixQ();
    basis = q.rightCols(n - 1);
    const Eigen::VectorXd& c = pair.constraint_direction;
    const Eigen::VectorXd& nu = pair.constraint_normal;
    rep.constraint_residual = std::max((pair.g * c).norm() / std::max(c.norm(), 1e-300),
                                       (pair.g_inv * nu).norm() / nu.norm());
  }
  rep.complement_residual = basis.cols() ? (defect * basis).cwiseAbs().maxCoeff() : 0.0;
  rep.pass = rep.complement_residual <= tol && rep.constraint_residual <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Laplace-Beltrami operator.

struct LbOptions {
  double first_step = 1e-5;   // inner first-derivative stencil
  double second_step = 1e-4;  // outer stencil / direct second differences
};

using ChartFunction = std::function<double(const Eigen::VectorXd&)>;
using FieldFunction = std::function<double(const GaugeField&)>;

namespace detail {

inline Eigen::MatrixXd rows_at(const ChartPoint& p, const Eigen::VectorXd& coords) {
  return assemble(make_frame(p.layout, coords, p.signs, p.base.reference_edge)).rows;
}

inline double directional(const ChartFunction& f, const Eigen::VectorXd& at, const Eigen::VectorXd& dir, double h) {
  return (f(at + h * dir) - f(at - h * dir)) / (2.0 * h);
}

}  // namespace detail

// First-order drift from the rotation of the l_b frame by the gauge
// transformation that returns a perturbed configuration to the slice:
// sum_{e,b,c} d^(e,b)_cb E_(e,c) with d_cb = -sqrt(2) (eta x e_b)_c.
inline Eigen::VectorXd frame_rotation_drift(const VectorFieldMatrix& e) {
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(e.rows.cols());
  for (std::size_t r = 0; r < e.labels.size(); ++r) {
    const int b = e.labels[r].component;
    const Vec3 d = -kSqrt2 * e.head_eta[r].cross(Vec3::Unit(b));
    const std::size_t first = r - static_cast<std::size_t>(b);
    for (int c = 0; c < 3; ++c) drift += d[c] * e.rows.row(static_cast<Eigen::Index>(first) + c).transpose();
  }
  return drift;
}

// -Delta F at p, composing every row of E twice by central differences along
// the chart, plus the frame-rotation drift.
inline double lb_apply_chart(const ChartPoint& p, const ChartFunction& f, const LbOptions& opt = {}) {
  const VectorFieldMatrix e0 = gauss_substitution(p);
  double second = 0.0;
  for (Eigen::Index r = 0; r < e0.rows.rows(); ++r) {
    const Eigen::VectorXd dir = e0.rows.row(r).transpose();
    if (dir.norm() < 1e-14) continue;
    auto y = [&](const Eigen::VectorXd& at) {
      const Eigen::VectorXd row = detail::rows_at(p, at).row(r).transpose();
      return detail::directional(f, at, row, opt.first_step);
    };
    const double h = opt.second_step;
    second += (y(p.coords + h * dir) - y(p.coords - h * dir)) / (2.0 * h);
  }
  const Eigen::VectorXd drift = frame_rotation_drift(e0);
  const double first = drift.norm() > 0.0 ? detail::directional(f, p.coords, drift, opt.first_step) : 0.0;
  return -(second + first);
}

inline double lb_apply(const ChartPoint& p, const FieldFunction& f, const LbOptions& opt = {}) {
  const auto layout = p.layout;
  const auto signs = p.signs;
  return lb_apply_chart(p, [&](const Eigen::VectorXd& c) { return f(compose_field(*layout, c, signs)); }, opt);
}

// -Delta f = sum_{e,b} l_b(e)^2 f by group translations U_e -> exp(i h t_b) U_e.
inline double lb_direct(const GaugeField& u, const FieldFunction& f, double h = 1e-4) {
  const double f0 = f(u);
  double sum = 0.0;
  GaugeField w = u;
  for (int i = 0; i < u.lattice().edge_count(); ++i) {
    for (int b = 0; b < 3; ++b) {
      const Vec3 step = h * Vec3::Unit(b);
      w[i] = su2_exp(step) * u[i];
      const double plus = f(w);
      w[i] = su2_exp(-step) * u[i];
      const double minus = f(w);
      w[i] = u[i];
      sum += (plus - 2.0 * f0 + minus) / (h * h);
    }
  }
  return -sum;
}

// ---------------------------------------------------------------------------
// Geodesics U_e(t) = exp(i tau_e t), gauge-fixed sample by sample.

struct GeodesicSample {
  double t = 0.0;
  Eigen::VectorXd coords;
  double step = 0.0;  // wrapped max coordinate change from the previous sample
  bool singular = false;
  bool near_chart_singularity = false;
  bool jump = false;

  bool flagged() const { return singular || near_chart_singularity || jump; }
};

struct GeodesicOptions {
  double jump_threshold = 0.5;    // radians
  double near_singular = 1e-3;    // |sin beta| below this is flagged
};

struct GeodesicPath {
  std::vector<std::string> names;
  std::vector<GeodesicSample> samples;

  bool any_flagged() const {
    for (const auto& s : samples)
      if (s.flagged()) return true;
    return false;
  }
  // Largest increment between consecutive unflagged samples.
  double max_step() const {
    double w = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!samples[i].flagged() && !samples[i - 1].flagged()) w = std::max(w, samples[i].step);
    return w;
  }
  int unflagged_steps() const {
    int n = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!samples[i].flagged() && !samples[i - 1].flagged()) ++n;
    return n;
  }
};

inline GaugeField geodesic_field(const Lattice& lat, const std::vector<Vec3>& tau, double t) {
  if (static_cast<int>(tau.size()) != lat.edge_count()) throw std::invalid_argument("tau needs one entry per edge");
  GaugeField u(lat);
  for (int i = 0; i < lat.edge_count(); ++i) u[i] = su2_exp(t * tau[static_cast<std::size_t>(i)]);
  return u;
}

inline GeodesicPath geodesic_path(const Lattice& lat, const std::vector<Vec3>& tau, int steps, double t_max,
                                  const GeodesicOptions& opt = {}) {
  if (steps < 1) throw std::invalid_argument("geodesic needs at least one step");
  const ChartLayout layout(lat);
  GeodesicPath path{layout.names(), {}};
  for (int i = 0; i <= steps; ++i) {
    const double t = t_max * static_cast<double>(i) / static_cast<double>(steps);
    const ChartPoint p = chart_point_of(geodesic_field(lat, tau, t));
    GeodesicSample s;
    s.t = t;
    s.coords = p.coords;
    s.singular = p.base.singular;
    for (std::size_t k = 0; k < layout.chart_edges().size(); ++k) {
      if (layout.is_last(layout.chart_edges()[k])) continue;
      if (std::abs(std::sin(p.angles(k).beta)) < opt.near_singular) s.near_chart_singularity = true;
    }
    if (!path.samples.empty()) {
      s.step = chart_distance(s.coords, path.samples.back().coords);
      s.jump = s.step > opt.jump_threshold;
    }
    path.samples.push_back(std::move(s));
  }
  return path;
}

}  // namespace orbitgauge
