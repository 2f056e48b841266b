#include "mflab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mflab {

namespace {
void check_support(const GridDensity& nu, const GridDensity& mu) {
  if (!(nu.spec == mu.spec))
    throw std::invalid_argument("entropy: grid mismatch");
  for (long i = 0; i < nu.v.size(); ++i)
    if (nu.v[i] >= 1e-300 && mu.v[i] < 1e-300)
      throw std::invalid_argument("entropy: mu vanishes on the support of nu");
}
}  // namespace

double relative_entropy(const GridDensity& nu, const GridDensity& mu) {
  check_support(nu, mu);
  const double w = nu.spec.cell_volume();
  double h = 0.0;
  for (long i = 0; i < nu.v.size(); ++i) {
    if (nu.v[i] < 1e-300) continue;  // x ln x -> 0
    h += nu.v[i] * (std::log(nu.v[i]) - std::log(mu.v[i]));
  }
  return h * w;
}

double fisher_information(const GridDensity& nu, const GridDensity& mu) {
  check_support(nu, mu);
  const GridSpec& g = nu.spec;
  const int n = g.n;
  const double dx = g.dx(), w = g.cell_volume();
  auto ok = [&](long k) { return nu.v[k] >= 1e-300 && mu.v[k] >= 1e-300; };
  double total = 0.0;
  if (g.d == 1) {
    for (int i = 1; i + 1 < n; ++i) {
      if (!(ok(i) && ok(i - 1) && ok(i + 1))) continue;
      const double r = (std::log(nu.v[i + 1]) - std::log(mu.v[i + 1]) -
                        std::log(nu.v[i - 1]) + std::log(mu.v[i - 1])) /
                       (2 * dx);
      total += r * r * nu.v[i];
    }
    return total * w;
  }
  auto lr = [&](long k) { return std::log(nu.v[k]) - std::log(mu.v[k]); };
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const long k = static_cast<long>(i) * n + j;
      const long kxm = k - n, kxp = k + n, kym = k - 1, kyp = k + 1;
      if (!(ok(k) && ok(kxm) && ok(kxp) && ok(kym) && ok(kyp))) continue;
      const double rx = (lr(kxp) - lr(kxm)) / (2 * dx);
      const double ry = (lr(kyp) - lr(kym)) / (2 * dx);
      total += (rx * rx + ry * ry) * nu.v[k];
    }
  return total * w;
}

// ---------------------------------------------------------------------------
// test function families and scans

TestFunctionFamily TestFunctionFamily::tilts(std::vector<double> lambdas) {
  TestFunctionFamily f;
  f.kind = Kind::exponential_tilts;
  f.lambdas = std::move(lambdas);
  return f;
}

TestFunctionFamily TestFunctionFamily::hermite(int k_max) {
  TestFunctionFamily f;
  f.kind = Kind::hermite;
  f.k_max = k_max;
  return f;
}

TestFunctionFamily TestFunctionFamily::bumps(std::vector<double> centers,
                                             std::vector<double> widths) {
  TestFunctionFamily f;
  f.kind = Kind::compact_bumps;
  f.centers = std::move(centers);
  f.widths = std::move(widths);
  return f;
}

namespace {

// Collect member functions h sampled on the grid (not yet normalized).
std::vector<Eigen::ArrayXd> family_members(const GridDensity& mu,
                                           const TestFunctionFamily& fam) {
  const GridSpec& g = mu.spec;
  std::vector<Eigen::ArrayXd> hs;
  auto sample = [&](const std::function<double(const Eigen::VectorXd&)>& f) {
    Eigen::ArrayXd h(g.size());
    Eigen::VectorXd x(g.d);
    if (g.d == 1) {
      for (int i = 0; i < g.n; ++i) {
        x[0] = g.center(i);
        h[i] = f(x);
      }
    } else {
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
          x[0] = g.center(i);
          x[1] = g.center(j);
          h[static_cast<long>(i) * g.n + j] = f(x);
        }
    }
    hs.push_back(std::move(h));
  };

  switch (fam.kind) {
    case TestFunctionFamily::Kind::exponential_tilts:
      for (double lam : fam.lambdas)
        for (int axis = 0; axis < g.d; ++axis)
          sample([&](const Eigen::VectorXd& x) {
            return std::exp(0.5 * lam * x[axis]);
          });
      break;
    case TestFunctionFamily::Kind::hermite:
      for (int k = 1; k <= fam.k_max; ++k)
        for (int axis = 0; axis < g.d; ++axis)
          sample([&](const Eigen::VectorXd& x) {
            // physicists' Hermite by recurrence
            double h0 = 1.0, h1 = x[axis];
            for (int q = 2; q <= k; ++q) {
              const double h2 = x[axis] * h1 - (q - 1) * h0;
              h0 = h1;
              h1 = h2;
            }
            return k == 0 ? h0 : h1;
          });
      break;
    case TestFunctionFamily::Kind::compact_bumps:
      for (double c : fam.centers)
        for (double wdt : fam.widths)
          for (int axis = 0; axis < g.d; ++axis)
            sample([&](const Eigen::VectorXd& x) {
              const double u = (x[axis] - c) / wdt;
              const double u2 = u * u;
              return u2 < 1.0 ? std::exp(-1.0 / (1.0 - u2)) : 0.0;
            });
      break;
  }
  return hs;
}

struct MemberStats {
  double h2 = 0.0;     // int h^2 dmu
  double grad2 = 0.0;  // int |grad h|^2 dmu
  double ent = 0.0;    // Ent_mu(h^2) after normalization
  double var = 0.0;    // Var_mu(h) after centering
};

MemberStats member_stats(const GridDensity& mu, const Eigen::ArrayXd& h) {
  const GridSpec& g = mu.spec;
  const double w = g.cell_volume(), dx = g.dx();
  MemberStats st;
  double mean = 0.0;
  for (long i = 0; i < h.size(); ++i) {
    st.h2 += h[i] * h[i] * mu.v[i];
    mean += h[i] * mu.v[i];
  }
  st.h2 *= w;
  mean *= w;

  // |grad h|^2 dmu with centered differences (one-sided at the box edge)
  const int n = g.n;
  auto d1 = [&](const Eigen::ArrayXd& f, int i) {
    if (i == 0) return (f[1] - f[0]) / dx;
    if (i == n - 1) return (f[n - 1] - f[n - 2]) / dx;
    return (f[i + 1] - f[i - 1]) / (2 * dx);
  };
  if (g.d == 1) {
    for (int i = 0; i < n; ++i) {
      const double gr = d1(h, i);
      st.grad2 += gr * gr * mu.v[i];
    }
  } else {
    auto at = [&](int i, int j) { return h[static_cast<long>(i) * n + j]; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double gx, gy;
        if (i == 0)
          gx = (at(1, j) - at(0, j)) / dx;
        else if (i == n - 1)
          gx = (at(n - 1, j) - at(n - 2, j)) / dx;
        else
          gx = (at(i + 1, j) - at(i - 1, j)) / (2 * dx);
        if (j == 0)
          gy = (at(i, 1) - at(i, 0)) / dx;
        else if (j == n - 1)
          gy = (at(i, n - 1) - at(i, n - 2)) / dx;
        else
          gy = (at(i, j + 1) - at(i, j - 1)) / (2 * dx);
        st.grad2 += (gx * gx + gy * gy) * mu.v[static_cast<long>(i) * n + j];
      }
  }
  st.grad2 *= w;

  // entropy of h^2/|h|^2 and variance of h
  const double z = st.h2;
  for (long i = 0; i < h.size(); ++i) {
    const double p = h[i] * h[i] / z;
    if (p > 1e-300) st.ent += p * std::log(p) * mu.v[i];
  }
  st.ent *= w;
  st.var = st.h2 - mean * mean;
  return st;
}

}  // namespace

double lsi_scan(const GridDensity& mu, const TestFunctionFamily& family) {
  const auto hs = family_members(mu, family);
  if (hs.empty()) throw std::invalid_argument("lsi_scan: empty family");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& h : hs) {
    const MemberStats st = member_stats(mu, h);
    if (st.grad2 / st.h2 < 1e-14) continue;  // near-constant member
    any = true;
    best = std::max(best, st.ent / (4.0 * st.grad2 / st.h2));
  }
  if (!any) throw std::invalid_argument("lsi_scan: all members filtered out");
  return best;
}

double poincare_scan(const GridDensity& mu, const TestFunctionFamily& family) {
  const auto hs = family_members(mu, family);
  if (hs.empty()) throw std::invalid_argument("poincare_scan: empty family");
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& h : hs) {
    const MemberStats st = member_stats(mu, h);
    if (st.grad2 < 1e-14) continue;
    any = true;
    best = std::max(best, st.var / st.grad2);
  }
  if (!any)
    throw std::invalid_argument("poincare_scan: all members filtered out");
  return best;
}

// ---------------------------------------------------------------------------
// closed-form constants

double bakry_emery_constant(double L, double C0, double sigma, double t) {
  if (C0 < 0.0 || t < 0.0)
    throw std::invalid_argument("bakry_emery_constant: C0, t must be >= 0");
  const double s2 = sigma * sigma;
  if (L == 0.0) return C0 + s2 * t;
  const double e = std::exp(2.0 * L * t);
  return e * C0 + s2 * std::expm1(2.0 * L * t) / (2.0 * L);
}

HighTempThreshold high_temp_threshold(double rho, double L, double R, double K,
                                      int d) {
  if (rho <= 0.0) throw std::invalid_argument("high_temp_threshold: rho = 0");
  if (L < 0.0 || R < 0.0 || K < 0.0 || d < 1)
    throw std::invalid_argument("high_temp_threshold: bad arguments");
  HighTempThreshold out;
  out.R_star = R * std::pow(2.0 + 2.0 * L / rho, 1.0 / d);
  out.sigma0_sq = 2.0 * (2.0 * L + rho) *
                  ((L + 0.25 * rho) * out.R_star * out.R_star + K) / (rho * d);
  return out;
}

LlfCondition llf_condition(double grad_w_sup, double eta, double sigma) {
  if (grad_w_sup < 0.0 || eta < 0.0 || sigma < 0.0)
    throw std::invalid_argument("llf_condition: inputs must be >= 0");
  LlfCondition c;
  c.gamma = 0.5 * grad_w_sup * grad_w_sup;
  c.satisfied = sigma * sigma * sigma * sigma > 8.0 * c.gamma * eta;
  return c;
}

// ---------------------------------------------------------------------------
// perturbation potential

Eigen::VectorXd GridDriftFunctional::operator()(const Eigen::VectorXd& x,
                                                const GridDensity& m) const {
  const GridSpec& g = m.spec;
  Eigen::VectorXd out = b0 ? b0(x) : Eigen::VectorXd::Zero(g.d);
  if (!pair) return out;
  const double w = g.cell_volume();
  Eigen::VectorXd y(g.d);
  if (g.d == 1) {
    for (int i = 0; i < g.n; ++i) {
      if (m.v[i] < 1e-300) continue;
      y[0] = g.center(i);
      out += pair(x, y) * (m.v[i] * w);
    }
  } else {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) {
        const long k = static_cast<long>(i) * g.n + j;
        if (m.v[k] < 1e-300) continue;
        y[0] = g.center(i);
        y[1] = g.center(j);
        out += pair(x, y) * (m.v[k] * w);
      }
  }
  return out;
}

PerturbationNorms perturbation_potential(const GridDensity& m_t,
                                         const GridDensity& m_star,
                                         const GridDriftFunctional& F,
                                         const GridDensity& mu0) {
  const GridSpec& g = m_t.spec;
  if (!(g == m_star.spec) || !(g == mu0.spec))
    throw std::invalid_argument("perturbation_potential: grid mismatch");

  // g_t = F(., m_t) - F(., m_star) sampled on the grid (per axis)
  std::vector<Eigen::ArrayXd> gt(g.d, Eigen::ArrayXd::Zero(g.size()));
  Eigen::VectorXd x(g.d);
  const int n = g.n;
  for (int i = 0; i < n; ++i) {
    if (g.d == 1) {
      x[0] = g.center(i);
      const Eigen::VectorXd v = F(x, m_t) - F(x, m_star);
      gt[0][i] = v[0];
    } else {
      for (int j = 0; j < n; ++j) {
        x[0] = g.center(i);
        x[1] = g.center(j);
        const Eigen::VectorXd v = F(x, m_t) - F(x, m_star);
        gt[0][static_cast<long>(i) * n + j] = v[0];
        gt[1][static_cast<long>(i) * n + j] = v[1];
      }
    }
  }

  // mask: cells carrying 99.99% of mu0 mass
  std::vector<long> order(mu0.v.size());
  for (long i = 0; i < mu0.v.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return mu0.v[a] > mu0.v[b]; });
  std::vector<char> mask(mu0.v.size(), 0);
  double acc = 0.0;
  const double target = 0.9999 * mu0.v.sum();
  for (long i : order) {
    if (acc >= target) break;
    acc += mu0.v[i];
    mask[i] = 1;
  }
  if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; }))
    throw std::invalid_argument("perturbation_potential: empty mask");

  // grad ln mu0 by centered differences on the mask
  const double dx = g.dx();
  PerturbationNorms out;
  auto consider = [&](long k, double div_g, const Eigen::VectorXd& gv,
                      const Eigen::VectorXd& grad_ln_mu) {
    const double phi = -div_g + gv.dot(grad_ln_mu);
    out.sup_phi = std::max(out.sup_phi, std::abs(phi));
    out.sup_g = std::max(out.sup_g, gv.norm());
  };

  if (g.d == 1) {
    for (int i = 1; i + 1 < n; ++i) {
      if (!(mask[i] && mask[i - 1] && mask[i + 1])) continue;
      const double div_g = (gt[0][i + 1] - gt[0][i - 1]) / (2 * dx);
      const double gl =
          (std::log(mu0.v[i + 1]) - std::log(mu0.v[i - 1])) / (2 * dx);
      Eigen::VectorXd gv(1), glv(1);
      gv << gt[0][i];
      glv << gl;
      consider(i, div_g, gv, glv);
    }
  } else {
    for (int i = 1; i + 1 < n; ++i)
      for (int j = 1; j + 1 < n; ++j) {
        const long k = static_cast<long>(i) * n + j;
        if (!(mask[k] && mask[k - n] && mask[k + n] && mask[k - 1] &&
              mask[k + 1]))
          continue;
        const double div_g = (gt[0][k + n] - gt[0][k - n]) / (2 * dx) +
                             (gt[1][k + 1] - gt[1][k - 1]) / (2 * dx);
        Eigen::VectorXd gv(2), glv(2);
        gv << gt[0][k], gt[1][k];
        glv << (std::log(mu0.v[k + n]) - std::log(mu0.v[k - n])) / (2 * dx),
            (std::log(mu0.v[k + 1]) - std::log(mu0.v[k - 1])) / (2 * dx);
        consider(k, div_g, gv, glv);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riesz convolution inequality check

ConvolutionCheck convolution_inequality_check(const GridDensity& m, double s,
                                              double p, double theta) {
  const GridSpec& g = m.spec;
  const int d = g.d;
  if (theta == 0.0) {
    if (s <= 0.0)
      throw std::invalid_argument("convolution check: sup branch needs s > 0");
    if (p <= 1.0 / (1.0 - s / d))
      throw std::invalid_argument(
          "convolution check: integrability precondition p > (1 - s/d)^{-1}");
  } else {
    if (p <= 1.0 / (1.0 - (s + theta) / d))
      throw std::invalid_argument(
          "convolution check: Holder branch precondition violated");
  }
  if (d != 2) throw std::invalid_argument("convolution check: d = 2 only");

  const int n = g.n;
  const double dx = g.dx(), w = g.cell_volume();

  // kernel on the padded difference lattice; the singular cell gets the
  // exact integral of the kernel over one cell (disc average), other cells
  // the midpoint value
  auto kval = [&](double r) {
    return s > 0.0 ? std::pow(r, -s) : -std::log(r);
  };
  // cell average of |z|^{-s} (or -ln|z|) over the square cell at 0 via the
  // inscribed/equal-area disc: int_{|z|<a} = analytic with pi a^2 = dx^2
  const double a_eq = dx / std::sqrt(3.141592653589793);
  double center_cell;
  if (s > 0.0)
    center_cell = 2.0 * 3.141592653589793 * std::pow(a_eq, 2.0 - s) /
                  ((2.0 - s) * dx * dx);
  else
    center_cell = 2.0 * 3.141592653589793 *
                  (a_eq * a_eq * (0.25 - 0.5 * std::log(a_eq))) / (dx * dx);

  const int N = 2 * n;
  Eigen::ArrayXd ktab(static_cast<long>(N) * N);
  for (int pq = 0; pq < N; ++pq) {
    const int sp = pq < n ? pq : pq - N;
    for (int q = 0; q < N; ++q) {
      const int sq = q < n ? q : q - N;
      const double r = dx * std::hypot(double(sp), double(sq));
      ktab[static_cast<long>(pq) * N + q] = (sp == 0 && sq == 0)
                                                ? center_cell
                                                : kval(r);
    }
  }

  // direct quadrature of (kernel * m) on the grid; coarse stride for the
  // sup when n is large is avoided (n <= 128 in the presets)
  Eigen::ArrayXd conv(static_cast<long>(n) * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double mv = m.v[static_cast<long>(a) * n + b];
          if (mv == 0.0) continue;
          const int pp = ((i - a) + N) % N, qq = ((j - b) + N) % N;
          acc += ktab[static_cast<long>(pp) * N + qq] * mv;
        }
      conv[static_cast<long>(i) * n + j] = acc * w;
    }

  ConvolutionCheck out;
  const double l1 = m.v.abs().sum() * w;
  const double lp = std::isinf(p) ? sup_norm(m) : lp_norm(m, p);
  const double q = std::isinf(p) ? 1.0 : p / (p - 1.0);

  if (theta == 0.0) {
    out.lhs = conv.abs().maxCoeff();
    out.rhs = std::pow(l1, 1.0 - q * s / d) * std::pow(lp, q * s / d);
  } else {
    // homogeneous theta-Holder seminorm over a deterministic pair sample
    double best = 0.0;
    const int stride = std::max(1, n / 32);
    for (int i = 0; i < n; i += stride)
      for (int j = 0; j < n; j += stride)
        for (int i2 = i; i2 < n; i2 += stride)
          for (int j2 = (i2 == i ? j + stride : 0); j2 < n; j2 += stride) {
            const double dist =
                dx * std::hypot(double(i2 - i), double(j2 - j));
            if (dist <= 0.0) continue;
            const double diff =
                std::abs(conv[static_cast<long>(i) * n + j] -
                         conv[static_cast<long>(i2) * n + j2]);
            best = std::max(best, diff / std::pow(dist, theta));
          }
    out.lhs = best;
    out.rhs = std::pow(l1, 1.0 - q * (s + theta) / d) *
              std::pow(lp, q * (s + theta) / d);
  }
  out.ratio = out.lhs / out.rhs;
  return out;
}

}  // namespace mflab
