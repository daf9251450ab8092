#pragma once

// Distance between gauge orbits,
//     rho(u, v)^2 = inf_K sum_edges (2 - Re Tr V^K_e^dagger U_e),
// minimized by checkerboard relaxation. The per-site optimum of the trace
// sum is the staple sum projected onto SU(2); over-relaxation moves along the
// great circle through the old and optimal K(x), which never raises the
// local functional for omega in [1, 2).

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "orbitgauge/lattice.hpp"

namespace orbitgauge {

struct RelaxationOptions {
  double tol = 1e-14;      // stop once a sweep lowers the functional by less than this
  int max_sweeps = 20000;
  double omega = 1.7;      // over-relaxation exponent, in [1, 2)
  int restarts = 8;        // restart 0 starts from K = 1, the rest from Haar-random K
  std::uint64_t seed = 12345;
  int threads = 0;         // 0: hardware concurrency, capped by ORBITGAUGE_THREADS
};

struct DistanceResult {
  double rho = 0.0;
  double rho_sq = 0.0;
  GaugeTransform minimizer;
  int iterations = 0;
  bool converged = false;
  std::vector<double> functional_history;
  std::vector<double> restart_values;  // final functional of every restart
};

inline int resolve_thread_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ORBITGAUGE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

// I(U, V) = sqrt(1/2 sum Tr (V - U)^dagger (V - U)).
inline double distance_I(const GaugeField& u, const GaugeField& v) {
  require_same_lattice(u.lattice(), v.lattice());
  double sum = 0.0;
  for (int i = 0; i < u.lattice().edge_count(); ++i) sum += chord_sq(u[i], v[i]);
  return std::sqrt(std::max(0.0, sum));
}

namespace detail {

// Minimizes sum_e scale * (1 - <A_e, B^K_e>) over K, where <,> is the
// 4-vector product (Re Tr A^-1 B / 2) and B^K_e = K(head)^-1 B_e K(tail).
// Each term is evaluated as scale/2 * |A_e - B^K_e|^2.
class LinkOverlapMinimizer {
 public:
  LinkOverlapMinimizer(const GaugeField& a, const GaugeField& b, double scale)
      : a_(a), b_(b), scale_(scale), lat_(a.lattice()) {
    require_same_lattice(a.lattice(), b.lattice());
    for (int parity = 0; parity < 2; ++parity)
      for (int s = 0; s < lat_.site_count(); ++s) {
        const Site x = lat_.site_at(s);
        if ((x.x1 + x.x2) % 2 == parity) order_.push_back(s);
      }
    incident_.resize(static_cast<std::size_t>(lat_.site_count()));
    for (int i = 0; i < lat_.edge_count(); ++i) {
      const EdgeId& e = lat_.edge_at(i);
      incident_[static_cast<std::size_t>(lat_.site_index(e.tail()))].push_back({i, true});
      incident_[static_cast<std::size_t>(lat_.site_index(e.head()))].push_back({i, false});
    }
  }

  double functional(const GaugeTransform& k) const {
    double sum = 0.0;
    for (int i = 0; i < lat_.edge_count(); ++i) sum += chord_sq(a_[i], transformed(k, i));
    return 0.5 * scale_ * sum;
  }

  struct Run {
    GaugeTransform k;
    std::vector<double> history;
    int sweeps = 0;
    bool converged = false;
  };

  Run minimize(GaugeTransform k, const RelaxationOptions& opt) const {
    Run run{std::move(k), {}, 0, false};
    double f = functional(run.k);
    run.history.push_back(f);
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      for (int s : order_) update_site(run.k, s, opt.omega);
      const double next = functional(run.k);
      run.history.push_back(next);
      run.sweeps = sweep + 1;
      const double decrease = f - next;
      f = next;
      if (decrease < opt.tol) {
        run.converged = true;
        break;
      }
    }
    return run;
  }

 private:
  struct Incidence {
    int edge;
    bool is_tail;
  };

  UnitQuaternion transformed(const GaugeTransform& k, int i) const {
    const EdgeId& e = lat_.edge_at(i);
    return k.at(e.head()).inverse() * b_[i] * k.at(e.tail());
  }

  void update_site(GaugeTransform& k, int s, double omega) const {
    UnitQuaternion staple{0.0, 0.0, 0.0, 0.0};
    auto accumulate = [&staple](const UnitQuaternion& q) {
      staple.q0 += q.q0;
      staple.q1 += q.q1;
      staple.q2 += q.q2;
      staple.q3 += q.q3;
    };
    for (const Incidence& inc : incident_[static_cast<std::size_t>(s)]) {
      const EdgeId& e = lat_.edge_at(inc.edge);
      const UnitQuaternion& a = a_[inc.edge];
      const UnitQuaternion& b = b_[inc.edge];
      if (inc.is_tail) {
        // <A, K(h)^-1 B K(x)> = <K(x), B^-1 K(h) A>
        accumulate(mul_raw(mul_raw(b.inverse(), k.at(e.head())), a));
      } else {
        // <A, K(x)^-1 B K(t)> = <K(x), B K(t) A^-1>
        accumulate(mul_raw(mul_raw(b, k.at(e.tail())), a.inverse()));
      }
    }
    if (staple.norm() < 1e-300) return;
    const UnitQuaternion best = staple.normalized();
    if (omega == 1.0) {
      k[s] = best;
      return;
    }
    const UnitQuaternion old = k[s];
    k[s] = old * su2_pow(old.inverse() * best, omega);
    // Guard against round-off pushing the over-relaxed step uphill.
    if (dot4(k[s], staple) < dot4(old, staple)) k[s] = best;
  }

  const GaugeField& a_;
  const GaugeField& b_;
  double scale_;
  Lattice lat_;
  std::vector<int> order_;
  std::vector<std::vector<Incidence>> incident_;
};

template <class Minimizer>
DistanceResult multi_start(const Minimizer& engine, const Lattice& lat, const RelaxationOptions& opt) {
  const int restarts = std::max(1, opt.restarts);
  std::vector<typename Minimizer::Run> runs(static_cast<std::size_t>(restarts),
                                            typename Minimizer::Run{GaugeTransform(lat), {}, 0, false});
  auto work = [&](int r) {
    GaugeTransform start(lat);
    if (r > 0) {
      std::mt19937_64 rng(opt.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r));
      start = random_transform(lat, rng);
    }
    runs[static_cast<std::size_t>(r)] = engine.minimize(std::move(start), opt);
  };
  const int threads = std::min(restarts, resolve_thread_count(opt.threads));
  if (threads <= 1) {
    for (int r = 0; r < restarts; ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int r = t; r < restarts; r += threads) work(r);
      });
    for (auto& th : pool) th.join();
  }

  DistanceResult out{0.0, 0.0, GaugeTransform(lat), 0, false, {}, {}};
  int best = 0;
  for (int r = 0; r < restarts; ++r) {
    out.restart_values.push_back(runs[static_cast<std::size_t>(r)].history.back());
    if (runs[static_cast<std::size_t>(r)].history.back() < runs[static_cast<std::size_t>(best)].history.back())
      best = r;
  }
  auto& run = runs[static_cast<std::size_t>(best)];
  out.minimizer = std::move(run.k);
  out.iterations = run.sweeps;
  out.converged = run.converged;
  out.functional_history = std::move(run.history);
  out.rho_sq = out.functional_history.back();
  out.rho = std::sqrt(std::max(0.0, out.rho_sq));
  return out;
}

}  // namespace detail

// rho(u, v), minimizing over gauge transformations of V.
inline DistanceResult orbit_distance(const GaugeField& u, const GaugeField& v, const RelaxationOptions& opt = {}) {
  const detail::LinkOverlapMinimizer engine(u, v, 2.0);
  return detail::multi_start(engine, u.lattice(), opt);
}

struct ActionCorrespondence {
  double inf_space_time = 0.0;  // inf_K L_st(U, V, K)
  double rho_sq = 0.0;
  double gap = 0.0;             // |c * inf_space_time - rho_sq|
  bool converged = false;
  GaugeTransform minimizer;
};

// rho^2 carries the per-edge offset N = 2, L_st the offset N/2 = 1 with a
// halved trace, so rho^2 = c * inf L_st with c = 2.
inline constexpr double kActionMetricNormalization = 2.0;

inline ActionCorrespondence st_action_correspondence(const GaugeField& u, const GaugeField& v,
                                                     const RelaxationOptions& opt = {}) {
  // L_st(U, V, K) = sum_e 1 - <V_e, U^K_e>
  const detail::LinkOverlapMinimizer action(v, u, 1.0);
  DistanceResult st = detail::multi_start(action, u.lattice(), opt);
  const double inf_lst = space_time_action(u, v, st.minimizer);
  const DistanceResult d = orbit_distance(u, v, opt);
  return {inf_lst, d.rho_sq, std::abs(kActionMetricNormalization * inf_lst - d.rho_sq),
          st.converged && d.converged, std::move(st.minimizer)};
}

// ---------------------------------------------------------------------------
// Metric axioms over a list of fields.

struct MetricAxiomReport {
  struct Entry {
    std::string check;
    std::vector<int> indices;
    double value = 0.0;
    bool pass = true;
  };
  std::vector<Entry> symmetry;
  std::vector<Entry> nonnegativity;
  std::vector<Entry> indiscernibles;
  std::vector<Entry> triangle;

  bool all_pass() const {
    for (const auto* section : {&symmetry, &nonnegativity, &indiscernibles, &triangle})
      for (const auto& e : *section)
        if (!e.pass) return false;
    return true;
  }
  double worst_symmetry_gap() const {
    double w = 0.0;
    for (const auto& e : symmetry) w = std::max(w, e.value);
    return w;
  }
  double worst_triangle_slack() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& e : triangle) w = std::min(w, e.value);
    return w;
  }
  double worst_indiscernible() const {
    double w = 0.0;
    for (const auto& e : indiscernibles) w = std::max(w, e.value);
    return w;
  }
};

// Checks symmetry, nonnegativity, rho(u, u^K) ~ 0 for `gauge_copies` random
// K per field, and the triangle inequality for every ordered triple of
// distinct fields, each with slack tol.
inline MetricAxiomReport metric_axiom_suite(const std::vector<GaugeField>& fields, double tol,
                                            const RelaxationOptions& opt = {}, int gauge_copies = 1,
                                            std::uint64_t seed = 99) {
  MetricAxiomReport report;
  const int n = static_cast<int>(fields.size());
  std::vector<std::vector<double>> rho(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rho[i][j] = orbit_distance(fields[i], fields[j], opt).rho;

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double gap = std::abs(rho[i][j] - rho[j][i]);
      report.symmetry.push_back({"symmetry", {i, j}, gap, gap <= tol});
    }
    for (int j = 0; j < n; ++j) report.nonnegativity.push_back({"nonnegativity", {i, j}, rho[i][j], rho[i][j] >= 0.0});
    report.indiscernibles.push_back({"self", {i}, rho[i][i], rho[i][i] <= tol});
  }

  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < gauge_copies; ++c) {
      const GaugeField copy = apply_gauge(fields[i], random_transform(fields[i].lattice(), rng));
      const double d = orbit_distance(fields[i], copy, opt).rho;
      report.indiscernibles.push_back({"gauge_copy", {i, c}, d, d <= tol});
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        const double slack = rho[i][j] + rho[j][k] - rho[i][k];
        report.triangle.push_back({"triangle", {i, j, k}, slack, slack >= -tol});
      }
  return report;
}

}  // namespace orbitgauge
