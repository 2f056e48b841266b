#include "mflab/grid.hpp"

#include <cmath>

namespace mflab {

double GridDensity::max_boundary_cell_mass() const {
  const double cv = spec.cell_volume();
  const double total = mass();
  double worst = 0.0;
  const int n = spec.n;
  if (spec.d == 1) {
    worst = std::max(v[0], v[n - 1]) * cv;
  } else {
    for (int i = 0; i < n; ++i) {
      worst = std::max({worst, v[idx(0, i)], v[idx(n - 1, i)], v[idx(i, 0)],
                        v[idx(i, n - 1)]});
    }
    worst *= cv;
  }
  return worst / total;
}

double GridDensity::boundary_ring_mass() const {
  const double cv = spec.cell_volume();
  const int n = spec.n;
  double sum = 0.0;
  if (spec.d == 1) {
    sum = v[0] + v[n - 1];
  } else {
    for (int i = 0; i < n; ++i) {
      sum += v[idx(0, i)] + v[idx(n - 1, i)];
      if (i > 0 && i < n - 1) sum += v[idx(i, 0)] + v[idx(i, n - 1)];
    }
  }
  return sum * cv / mass();
}

Eigen::VectorXd GridDensity::mean() const {
  const int n = spec.n;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(spec.d);
  const double cv = spec.cell_volume();
  if (spec.d == 1) {
    for (int i = 0; i < n; ++i) m[0] += spec.center(i) * v[i];
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double w = v[idx(i, j)];
        m[0] += spec.center(i) * w;
        m[1] += spec.center(j) * w;
      }
  }
  return m * cv / mass();
}

Eigen::VectorXd GridDensity::axis_second_moment() const {
  const int n = spec.n;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(spec.d);
  const double cv = spec.cell_volume();
  if (spec.d == 1) {
    for (int i = 0; i < n; ++i) m[0] += spec.center(i) * spec.center(i) * v[i];
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double w = v[idx(i, j)];
        m[0] += spec.center(i) * spec.center(i) * w;
        m[1] += spec.center(j) * spec.center(j) * w;
      }
  }
  return m * cv / mass();
}

GridDensity make_density(const GridSpec& g,
                         const std::function<double(const Eigen::VectorXd&)>& f,
                         double t) {
  Eigen::ArrayXd v(g.size());
  Eigen::VectorXd x(g.d);
  if (g.d == 1) {
    for (int i = 0; i < g.n; ++i) {
      x[0] = g.center(i);
      v[i] = f(x);
    }
  } else if (g.d == 2) {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) {
        x[0] = g.center(i);
        x[1] = g.center(j);
        v[static_cast<long>(i) * g.n + j] = f(x);
      }
  } else {
    throw std::invalid_argument("make_density: only d = 1, 2");
  }
  if ((v < 0.0).any())
    throw std::invalid_argument("make_density: negative values");
  GridDensity m(g, std::move(v), t);
  m.normalize();
  return m;
}

GridDensity gaussian_density(const GridSpec& g, const Eigen::VectorXd& shift,
                             double var) {
  return make_density(g, [&](const Eigen::VectorXd& x) {
    return std::exp(-(x - shift).squaredNorm() / (2.0 * var));
  });
}

Eigen::ArrayXd grad_axis(const GridSpec& g, const Eigen::ArrayXd& f, int axis) {
  const int n = g.n;
  const double inv2 = 1.0 / (2.0 * g.dx()), inv1 = 1.0 / g.dx();
  Eigen::ArrayXd out(f.size());
  if (g.d == 1) {
    for (int i = 0; i < n; ++i) {
      if (i == 0)
        out[i] = (f[1] - f[0]) * inv1;
      else if (i == n - 1)
        out[i] = (f[n - 1] - f[n - 2]) * inv1;
      else
        out[i] = (f[i + 1] - f[i - 1]) * inv2;
    }
    return out;
  }
  auto at = [&](int i, int j) { return f[static_cast<long>(i) * n + j]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const long k = static_cast<long>(i) * n + j;
      const int c = axis == 0 ? i : j;
      if (c == 0) {
        out[k] = axis == 0 ? (at(1, j) - at(0, j)) * inv1
                           : (at(i, 1) - at(i, 0)) * inv1;
      } else if (c == n - 1) {
        out[k] = axis == 0 ? (at(n - 1, j) - at(n - 2, j)) * inv1
                           : (at(i, n - 1) - at(i, n - 2)) * inv1;
      } else {
        out[k] = axis == 0 ? (at(i + 1, j) - at(i - 1, j)) * inv2
                           : (at(i, j + 1) - at(i, j - 1)) * inv2;
      }
    }
  return out;
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (!(a.spec == b.spec))
    throw std::invalid_argument("l1_distance: grid mismatch");
  return (a.v - b.v).abs().sum() * a.spec.cell_volume();
}

double lp_norm(const GridDensity& m, double p) {
  return std::pow((m.v.abs().pow(p)).sum() * m.spec.cell_volume(), 1.0 / p);
}

double sup_norm(const GridDensity& m) { return m.v.maxCoeff(); }

double interpolate(const GridDensity& m, const Eigen::VectorXd& x) {
  const GridSpec& g = m.spec;
  const double dx = g.dx();
  auto locate = [&](double c) -> std::pair<int, double> {
    const double u = (c + g.L) / dx - 0.5;
    int i = static_cast<int>(std::floor(u));
    double w = u - i;
    if (i < 0) { i = 0; w = 0.0; }
    if (i > g.n - 2) { i = g.n - 2; w = 1.0; }
    return {i, w};
  };
  for (int k = 0; k < g.d; ++k)
    if (x[k] < -g.L || x[k] > g.L) return 0.0;
  if (g.d == 1) {
    auto [i, w] = locate(x[0]);
    return (1.0 - w) * m.v[i] + w * m.v[i + 1];
  }
  auto [i, wi] = locate(x[0]);
  auto [j, wj] = locate(x[1]);
  auto at = [&](int a, int b) { return m.v[m.idx(a, b)]; };
  return (1 - wi) * ((1 - wj) * at(i, j) + wj * at(i, j + 1)) +
         wi * ((1 - wj) * at(i + 1, j) + wj * at(i + 1, j + 1));
}

Eigen::VectorXd sample_inverse_cdf(const GridDensity& m,
                                   const Eigen::VectorXd& u) {
  const GridSpec& g = m.spec;
  const double dx = g.dx();
  Eigen::VectorXd x(g.d);
  if (g.d == 1) {
    const double total = m.v.sum();
    double target = u[0] * total, acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (acc + m.v[i] >= target) {
        x[0] = g.center(i) + dx * ((target - acc) / m.v[i] - 0.5);
        return x;
      }
      acc += m.v[i];
    }
    x[0] = g.center(g.n - 1);
    return x;
  }
  // marginal along axis 0, then the conditional row
  Eigen::ArrayXd marg(g.n);
  for (int i = 0; i < g.n; ++i)
    marg[i] = m.v.segment(static_cast<long>(i) * g.n, g.n).sum();
  const double total = marg.sum();
  double target = u[0] * total, acc = 0.0;
  int row = g.n - 1;
  double frac0 = 0.5;
  for (int i = 0; i < g.n; ++i) {
    if (acc + marg[i] >= target) {
      row = i;
      frac0 = (target - acc) / marg[i];
      break;
    }
    acc += marg[i];
  }
  x[0] = g.center(row) + dx * (frac0 - 0.5);
  const auto rowv = m.v.segment(static_cast<long>(row) * g.n, g.n);
  const double rtotal = rowv.sum();
  double t2 = u[1] * rtotal;
  acc = 0.0;
  for (int j = 0; j < g.n; ++j) {
    if (acc + rowv[j] >= t2) {
      x[1] = g.center(j) + dx * ((t2 - acc) / rowv[j] - 0.5);
      return x;
    }
    acc += rowv[j];
  }
  x[1] = g.center(g.n - 1);
  return x;
}

}  // namespace mflab
