#include "squeezelab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "squeezelab/error.hpp"
#include "squeezelab/model.hpp"

namespace squeezelab {

namespace {

using cvec = std::vector<cplx>;

struct Grid {
  int n1 = 0;
  int n2 = 0;
  int nb = 0;

  std::size_t size() const { return static_cast<std::size_t>((n1 + 1) * (n2 + 1) * (nb + 1)); }
  std::size_t at(int i, int j, int k) const {
    return static_cast<std::size_t>((i * (n2 + 1) + j) * (nb + 1) + k);
  }
};

std::vector<double> coherent_amplitudes(double n_mean, int n_max) {
  std::vector<double> c(static_cast<std::size_t>(n_max + 1));
  for (int n = 0; n <= n_max; ++n) {
    const double log_c = -0.5 * n_mean + 0.5 * n * std::log(std::max(n_mean, 1e-300)) -
                         0.5 * std::lgamma(n + 1.0);
    c[static_cast<std::size_t>(n)] = (n_mean == 0.0) ? (n == 0 ? 1.0 : 0.0) : std::exp(log_c);
  }
  return c;
}

// Squeezed vacuum whose Heisenberg-picture mode is b cosh r + b^dag sinh r.
std::vector<double> squeezed_amplitudes(double r, int n_max) {
  std::vector<double> c(static_cast<std::size_t>(n_max + 1), 0.0);
  const double t = std::tanh(r);
  for (int m = 0; 2 * m <= n_max; ++m) {
    const double log_mag = 0.5 * std::lgamma(2.0 * m + 1.0) - m * std::log(2.0) - std::lgamma(m + 1.0) -
                           0.5 * std::log(std::cosh(r));
    c[static_cast<std::size_t>(2 * m)] = (m == 0) ? std::exp(log_mag) : std::exp(log_mag) * std::pow(t, m);
  }
  return c;
}

// exp(-i H tau) |0> for the tridiagonal block H_{k,k+1} = off[k].
cvec evolve_block(const std::vector<double>& off, double tau) {
  const std::size_t dim = off.size() + 1;
  cvec psi(dim, 0.0);
  psi[0] = 1.0;
  if (dim == 1 || tau == 0.0) return psi;
  double norm_h = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double row = (k > 0 ? off[k - 1] : 0.0) + (k + 1 < dim ? off[k] : 0.0);
    norm_h = std::max(norm_h, row);
  }
  const int steps = std::max(16, static_cast<int>(std::ceil(tau * norm_h / 0.01)));
  const double h = tau / steps;
  const cplx mi{0.0, -1.0};
  const auto apply = [&](const cvec& v) {
    cvec out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      cplx s = 0.0;
      if (k > 0) s += off[k - 1] * v[k - 1];
      if (k + 1 < dim) s += off[k] * v[k + 1];
      out[k] = mi * s;
    }
    return out;
  };
  cvec tmp(dim);
  for (int s = 0; s < steps; ++s) {
    const cvec k1 = apply(psi);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + 0.5 * h * k1[i];
    const cvec k2 = apply(tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + 0.5 * h * k2[i];
    const cvec k3 = apply(tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = psi[i] + h * k3[i];
    const cvec k4 = apply(tmp);
    for (std::size_t i = 0; i < dim; ++i) psi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return psi;
}

double inner_real(const cvec& a, const cvec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (std::conj(a[i]) * b[i]).real();
  return s;
}

}  // namespace

MomentVector exact_moments(double n_mean, double r, double tau, FockCutoff cutoff) {
  if (!(n_mean >= 0.0) || !(tau >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "exact_moments needs n_mean >= 0 and tau >= 0");
  }
  check_squeeze_r(r);
  Grid g;
  g.n1 = cutoff.n1_max > 0 ? cutoff.n1_max
                           : static_cast<int>(std::ceil(n_mean + 10.0 * std::sqrt(n_mean) + 10.0));
  if (cutoff.nb_max > 0) {
    g.nb = cutoff.nb_max;
  } else {
    // Tail of the squeezed photon distribution decays like tanh(r)^m.
    const double t = std::tanh(r);
    g.nb = (t <= 0.0) ? 0 : 2 * static_cast<int>(std::ceil(std::log(1e-16) / std::log(t))) + 2;
    g.nb = std::min(g.nb, 400);
  }
  g.n2 = std::min(g.n1, g.nb);
  const std::vector<double> ca = coherent_amplitudes(n_mean, g.n1);
  const std::vector<double> cb = squeezed_amplitudes(r, g.nb);

  cvec psi(g.size(), 0.0);
  for (int a = 0; a <= g.n1; ++a) {
    for (int b = 0; b <= g.nb; ++b) {
      const double amp = ca[static_cast<std::size_t>(a)] * cb[static_cast<std::size_t>(b)];
      if (amp == 0.0) continue;
      const int kmax = std::min(a, b);
      std::vector<double> off(static_cast<std::size_t>(kmax));
      for (int k = 0; k < kmax; ++k) {
        off[static_cast<std::size_t>(k)] = std::sqrt((k + 1.0) * (a - k) * (b - k));
      }
      const cvec blk = evolve_block(off, tau);
      for (int k = 0; k <= kmax; ++k) psi[g.at(a - k, k, b - k)] += amp * blk[static_cast<std::size_t>(k)];
    }
  }

  // Operator images used for second moments.
  cvec jx(g.size(), 0.0);
  cvec jy(g.size(), 0.0);
  cvec yb(g.size(), 0.0);
  const cplx i_unit{0.0, 1.0};
  MomentVector m{};
  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      for (int k = 0; k <= g.nb; ++k) {
        const cplx v = psi[g.at(i, j, k)];
        if (v == 0.0) continue;
        const double p = std::norm(v);
        at(m, Moment::n_a1) += p * i;
        at(m, Moment::n_a2) += p * j;
        at(m, Moment::n_b) += p * k;
        const double jz = 0.5 * (i - j);
        at(m, Moment::jz) += p * jz;
        at(m, Moment::jz2) += p * jz * jz;
        // a1^dag a2 |i, j, k> = sqrt((i+1) j) |i+1, j-1, k>
        if (j > 0 && i < g.n1) {
          const cplx w = std::sqrt((i + 1.0) * j) * v;
          jx[g.at(i + 1, j - 1, k)] += 0.5 * w;
          jy[g.at(i + 1, j - 1, k)] += w / (2.0 * i_unit);
        }
        // a2^dag a1 |i, j, k> = sqrt(i (j+1)) |i-1, j+1, k>
        if (i > 0 && j < g.n2) {
          const cplx w = std::sqrt(i * (j + 1.0)) * v;
          jx[g.at(i - 1, j + 1, k)] += 0.5 * w;
          jy[g.at(i - 1, j + 1, k)] -= w / (2.0 * i_unit);
        }
        // Y_b = i (b - b^dag)
        if (k > 0) yb[g.at(i, j, k - 1)] += i_unit * std::sqrt(static_cast<double>(k)) * v;
        if (k < g.nb) yb[g.at(i, j, k + 1)] -= i_unit * std::sqrt(k + 1.0) * v;
      }
    }
  }
  at(m, Moment::jx) = inner_real(psi, jx);
  at(m, Moment::jy) = inner_real(psi, jy);
  at(m, Moment::yb) = inner_real(psi, yb);
  at(m, Moment::jx2) = inner_real(jx, jx);
  at(m, Moment::jy2) = inner_real(jy, jy);
  at(m, Moment::yb2) = inner_real(yb, yb);
  at(m, Moment::jx_yb) = inner_real(jx, yb);
  return m;
}

}  // namespace squeezelab
