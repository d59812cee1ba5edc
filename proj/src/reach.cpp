#include "ctrl/reach.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace ctrl {

const std::vector<double>& ControlSignal::value_at(double t) const {
  if (knots.size() < 2 || values.size() + 1 != knots.size())
    throw std::invalid_argument("malformed control signal");
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  size_t k = static_cast<size_t>(std::max<std::ptrdiff_t>(0, it - knots.begin() - 1));
  if (k >= values.size()) k = values.size() - 1;
  return values[k];
}

void ControlSignal::validate(const ControlSystem& sys) const {
  if (knots.size() < 2 || values.size() + 1 != knots.size())
    throw std::invalid_argument("malformed control signal");
  for (size_t k = 0; k + 1 < knots.size(); ++k)
    if (!(knots[k] < knots[k + 1]))
      throw std::invalid_argument("breakpoints must be strictly increasing");
  for (const auto& v : values) {
    if (static_cast<int>(v.size()) != sys.m)
      throw std::invalid_argument("control value has wrong dimension");
    for (int a = 0; a < sys.m; ++a)
      if (v[a] < sys.K[a].lo || v[a] > sys.K[a].hi)
        throw std::invalid_argument("control value leaves the region K");
  }
}

namespace {

struct CompiledDynamics {
  std::vector<Compiled> f;
  int n, m;

  explicit CompiledDynamics(const ControlSystem& sys) : n(sys.n), m(sys.m) {
    for (const auto& fi : sys.f) f.emplace_back(fi, sys.params);
  }

  // x = (t, q, w) scratch buffer
  void eval(double t, const double* q, const double* w, double* out,
            std::vector<double>& x) const {
    x[0] = t;
    for (int i = 0; i < n; ++i) x[1 + i] = q[i];
    for (int a = 0; a < m; ++a) x[1 + n + a] = w[a];
    for (int i = 0; i < n; ++i) out[i] = f[i](x.data());
  }
};

}  // namespace

Trajectory integrate(const ControlSystem& sys, const std::vector<double>& q0,
                     const ControlSignal& u, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("integrate requires dt > 0");
  if (static_cast<int>(q0.size()) != sys.n)
    throw std::invalid_argument("q0 has wrong dimension");
  if (u.knots.size() < 2 || u.values.size() + 1 != u.knots.size())
    throw std::invalid_argument("malformed control signal");

  CompiledDynamics dyn(sys);
  std::vector<double> x(sys.chart().dim());
  std::vector<double> q = q0, k1(sys.n), k2(sys.n), k3(sys.n), k4(sys.n), tmp(sys.n);

  Trajectory traj;
  traj.times.push_back(u.knots.front());
  traj.states.push_back(q);

  for (size_t seg = 0; seg + 1 < u.knots.size(); ++seg) {
    double a = u.knots[seg], b = u.knots[seg + 1];
    const double* w = u.values[seg].data();
    int steps = std::max(1, static_cast<int>(std::ceil((b - a) / dt)));
    double h = (b - a) / steps;
    for (int s = 0; s < steps; ++s) {
      double t = a + s * h;
      dyn.eval(t, q.data(), w, k1.data(), x);
      for (int i = 0; i < sys.n; ++i) tmp[i] = q[i] + 0.5 * h * k1[i];
      dyn.eval(t + 0.5 * h, tmp.data(), w, k2.data(), x);
      for (int i = 0; i < sys.n; ++i) tmp[i] = q[i] + 0.5 * h * k2[i];
      dyn.eval(t + 0.5 * h, tmp.data(), w, k3.data(), x);
      for (int i = 0; i < sys.n; ++i) tmp[i] = q[i] + h * k3[i];
      dyn.eval(t + h, tmp.data(), w, k4.data(), x);
      bool finite = true;
      for (int i = 0; i < sys.n; ++i) {
        q[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (!std::isfinite(q[i])) finite = false;
      }
      if (!finite)
        throw IntegrationError("state became nonfinite", a, b);
      traj.times.push_back(t + h);
      traj.states.push_back(q);
    }
  }
  return traj;
}

ReachCloud reach_cloud(const ControlSystem& sys, const std::vector<double>& q0, double T,
                       int n_samples, int segments, uint64_t seed, double dt) {
  if (n_samples < 1 || segments < 1)
    throw std::invalid_argument("reach_cloud requires n_samples >= 1 and segments >= 1");
  if (dt <= 0) dt = default_dt(T);

  ReachCloud cloud;
  cloud.horizon = T;
  cloud.q0 = q0;
  cloud.seed = seed;
  cloud.dt = dt;
  cloud.segments = segments;
  cloud.signals.resize(n_samples);
  cloud.endpoints.resize(n_samples);

  // deterministic per-sample signals, independent of the thread count
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(i));
    int pieces = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(segments)));
    std::vector<double> cuts;
    for (int c = 0; c < pieces - 1; ++c) cuts.push_back(rng.range(0.0, T));
    std::sort(cuts.begin(), cuts.end());
    ControlSignal u;
    u.knots.push_back(0.0);
    for (double c : cuts)
      if (c > u.knots.back() + 1e-12 && c < T - 1e-12) u.knots.push_back(c);
    u.knots.push_back(T);
    for (size_t k = 0; k + 1 < u.knots.size(); ++k) {
      std::vector<double> w(sys.m);
      for (int a = 0; a < sys.m; ++a) w[a] = rng.range(sys.K[a].lo, sys.K[a].hi);
      u.values.push_back(std::move(w));
    }
    cloud.signals[i] = std::move(u);
  }

  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      cloud.endpoints[i] = integrate(sys, q0, cloud.signals[i], dt).endpoint();
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int chunks = static_cast<int>(std::min<unsigned>(hw, 8));
  if (n_samples < 64 || chunks == 1) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    int per = (n_samples + chunks - 1) / chunks;
    for (int c = 0; c < chunks; ++c) {
      int lo = c * per, hi = std::min(n_samples, (c + 1) * per);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return cloud;
}

CoverReport covers_ball_report(const ReachCloud& cloud, const std::vector<double>& q0, double r,
                               double delta) {
  if (!(r > 0) || delta < 0) throw std::invalid_argument("covers_ball requires r > 0, delta >= 0");
  const int n = static_cast<int>(q0.size());
  CoverReport rep;
  rep.covered = true;

  const double offsets[5] = {-r, -r / 2, 0.0, r / 2, r};
  std::vector<int> idx(n, 0);
  std::vector<double> node(n);
  for (;;) {
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      node[i] = q0[i] + offsets[idx[i]];
      norm2 += offsets[idx[i]] * offsets[idx[i]];
    }
    if (norm2 <= r * r + 1e-15) {
      ++rep.grid_nodes;
      double best = 1e300;
      const double need = delta * delta;
      for (const auto& e : cloud.endpoints) {
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) {
          double diff = e[i] - node[i];
          d2 += diff * diff;
          if (d2 > best) break;
        }
        best = std::min(best, d2);
        if (best <= need) break;
      }
      if (best > need) {
        rep.covered = false;
        ++rep.misses;
        if (std::sqrt(best) > rep.worst_distance) {
          rep.worst_distance = std::sqrt(best);
          rep.worst_node = node;
        }
      }
    }
    int i = 0;
    while (i < n && ++idx[i] == 5) idx[i++] = 0;
    if (i == n) break;
  }
  return rep;
}

bool covers_ball(const ReachCloud& cloud, const std::vector<double>& q0, double r, double delta) {
  return covers_ball_report(cloud, q0, r, delta).covered;
}

// ---------------------------------------------------------------------------
// Linear steering

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
  // Pade(13) with scaling and squaring
  const int n = static_cast<int>(A.rows());
  double norm = A.lpNorm<1>();
  int squarings = 0;
  Eigen::MatrixXd As = A;
  const double theta13 = 5.371920351148152;
  if (norm > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    As /= std::pow(2.0, squarings);
  }
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd A2 = As * As;
  Eigen::MatrixXd A4 = A2 * A2;
  Eigen::MatrixXd A6 = A2 * A4;
  Eigen::MatrixXd U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                            b[3] * A2 + b[1] * I);
  Eigen::MatrixXd V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Eigen::MatrixXd R = (V - U).fullPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) R = R * R;
  return R;
}

SteerResult steer_linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const std::vector<double>& q0, const std::vector<double>& q1, double T,
                         int segments) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (static_cast<int>(q0.size()) != n || static_cast<int>(q1.size()) != n)
    throw std::invalid_argument("steer_linear: state dimension mismatch");
  if (!(T > 0)) throw std::invalid_argument("steer_linear requires T > 0");

  // per-segment propagator and control integral from the augmented exponential
  const double h = T / segments;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A * h;
  aug.topRightCorner(n, m) = B * h;
  Eigen::MatrixXd E = expm(aug);
  Eigen::MatrixXd Phi = E.topLeftCorner(n, n);
  Eigen::MatrixXd Gamma = E.topRightCorner(n, m);

  // M_k = Phi^(K-1-k) Gamma maps segment k's value to the endpoint
  std::vector<Eigen::MatrixXd> M(segments);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  for (int k = segments - 1; k >= 0; --k) {
    M[k] = P * Gamma;
    P = P * Phi;
  }
  // P is now Phi^K
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (const auto& Mk : M) G += Mk * Mk.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 1e-12 * std::max(1.0, lmax)))
    throw SteeringError("controllability Gramian is numerically singular");

  Eigen::VectorXd q0v = Eigen::Map<const Eigen::VectorXd>(q0.data(), n);
  Eigen::VectorXd q1v = Eigen::Map<const Eigen::VectorXd>(q1.data(), n);
  Eigen::VectorXd xi = G.ldlt().solve(q1v - P * q0v);

  SteerResult out;
  out.u.knots.push_back(0.0);
  for (int k = 1; k <= segments; ++k) out.u.knots.push_back(T * k / segments);
  for (int k = 0; k < segments; ++k) {
    Eigen::VectorXd uk = M[k].transpose() * xi;
    out.u.values.emplace_back(uk.data(), uk.data() + m);
  }

  // endpoint check through the generic integrator
  std::vector<std::vector<double>> Av(n, std::vector<double>(n)), Bv(n, std::vector<double>(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Av[i][j] = A(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) Bv[i][j] = B(i, j);
  ControlSystem sys = linear_control_system(Av, Bv);
  out.endpoint = integrate(sys, q0, out.u, default_dt(T)).endpoint();
  double err = 0.0;
  for (int i = 0; i < n; ++i) err += (out.endpoint[i] - q1[i]) * (out.endpoint[i] - q1[i]);
  out.error = std::sqrt(err);
  return out;
}

std::string cloud_export(const ReachCloud& cloud) {
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < cloud.endpoints.size(); ++i) {
    os << cloud.seed << ',' << i << ",t=" << cloud.horizon;
    for (double q : cloud.endpoints[i]) os << ',' << q;
    os << '\n';
  }
  return os.str();
}

}  // namespace ctrl
