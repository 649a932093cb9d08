#include "squeezelab/analytic_smallq.hpp"

#include <cmath>
#include <limits>

#include "squeezelab/error.hpp"
#include "squeezelab/model.hpp"

namespace squeezelab {

namespace {

struct Hyper {
  double sh, ch, sh2, e_r, e_mr, e_2r, e_m2r, cosh2r, cosh4r;
};

Hyper hyper(double r) {
  check_squeeze_r(r);
  Hyper h{};
  h.e_r = std::exp(r);
  h.e_mr = std::exp(-r);
  h.e_2r = h.e_r * h.e_r;
  h.e_m2r = h.e_mr * h.e_mr;
  h.sh = 0.5 * (h.e_r - h.e_mr);
  h.ch = 0.5 * (h.e_r + h.e_mr);
  h.sh2 = h.sh * h.sh;
  h.cosh2r = 0.5 * (h.e_2r + h.e_m2r);
  h.cosh4r = 0.5 * (h.e_2r * h.e_2r + h.e_m2r * h.e_m2r);
  return h;
}

void check_tau(double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau must be non-negative");
}

}  // namespace

double heun_na1(double r, double tau, std::int64_t n_atoms) {
  check_tau(tau);
  const Hyper h = hyper(r);
  const double n = static_cast<double>(n_atoms);
  const double t2 = tau * tau;
  return n * (1.0 - t2 * (1.0 - t2 / 8.0 * (3.0 * h.cosh2r + 1.0)) * h.sh2);
}

double smallq_slope(double r, double tau, std::int64_t n_atoms) {
  const double n = static_cast<double>(n_atoms);
  return std::sqrt(n) * tau * (heun_na1(r, tau, n_atoms) - n * tau * tau * photon_number(r));
}

namespace smallq_variance_terms {

double coherent_block(double r, double tau, std::int64_t n_atoms) {
  const Hyper h = hyper(r);
  const double n = static_cast<double>(n_atoms);
  const double t2 = tau * tau;
  const double na1 = heun_na1(r, tau, n_atoms);
  return h.e_m2r * (1.0 - n * t2) * na1 * (1.0 + n * t2 * (h.e_2r + t2 / 4.0 * (n - 1.0) - 1.0));
}

double cross_block(double r, double tau, std::int64_t n_atoms) {
  const Hyper h = hyper(r);
  const double n = static_cast<double>(n_atoms);
  const double t2 = tau * tau;
  const double t4 = t2 * t2;
  const double na1 = heun_na1(r, tau, n_atoms);
  const double radicand = n * (1.0 - n * t2) * na1;
  if (radicand < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double brace = 4.0 - t2 / 2.0 * (4.0 * n + 3.0 * h.e_m2r - 1.0) +
                       t4 / 16.0 *
                           (4.0 * n * (h.e_2r + 3.0 * h.e_m2r - 2.0) +
                            6.0 * h.e_2r * h.e_r * h.ch + 9.0 * h.e_m2r - 7.0);
  return -n * t2 * h.e_mr * h.sh * std::sqrt(radicand) * brace;
}

double transfer_block(double r, double tau, std::int64_t n_atoms) {
  const Hyper h = hyper(r);
  const double n = static_cast<double>(n_atoms);
  const double t2 = tau * tau;
  const double t4 = t2 * t2;
  const double t6 = t4 * t2;
  const double t8 = t4 * t4;
  const double sinh2r = 2.0 * h.sh * h.ch;

  const double line1 = 1.0 - 2.0 * n * t2 * h.e_mr * h.sh +
                       t4 / 4.0 *
                           (1.0 + n * n + n * (3.0 + 2.0 * (1.0 - 6.0 * h.e_m2r) * h.sh2) +
                            1.5 * sinh2r * sinh2r);
  const double line2 =
      -t6 / 4.0 * h.sh2 *
      (2.0 + n * n +
       n / 4.0 * h.e_mr * (3.0 * h.e_mr * (3.0 - 5.0 * h.e_m2r) + h.e_r * (3.0 * h.e_2r + 11.0)) +
       6.0 * h.cosh2r);
  const double line3 = t8 / 64.0 * h.sh2 *
                       (2.0 * n * n * (3.0 * h.cosh2r + 1.0) +
                        n * (15.0 * (2.0 * h.cosh2r + h.cosh4r) + 11.0) +
                        1.5 * h.ch * h.ch * (35.0 * h.cosh4r + 13.0));
  return n * n * t2 * (line1 + line2 + line3);
}

}  // namespace smallq_variance_terms

double smallq_variance(double r, double tau, std::int64_t n_atoms) {
  check_tau(tau);
  using namespace smallq_variance_terms;
  return coherent_block(r, tau, n_atoms) + cross_block(r, tau, n_atoms) +
         transfer_block(r, tau, n_atoms);
}

SmallQSeriesTerms smallq_series_terms(double r, double tau, std::int64_t n_atoms) {
  if (!(tau > 0.0)) throw Error(ErrorKind::divergence, "sensitivity series diverges at tau = 0");
  const Hyper h = hyper(r);
  const double n = static_cast<double>(n_atoms);
  const double t2 = tau * tau;
  const double prefactor = h.e_mr / (n * tau);
  SmallQSeriesTerms terms;
  terms.leading = prefactor;
  terms.second = prefactor * 1.5 * t2 * h.sh2;
  terms.third = prefactor * t2 * t2 / 8.0 *
                (n * (n + 3.0 - 2.0 * h.e_m2r) + 2.0 * (5.0 * h.cosh2r - 6.0) * h.sh2);
  return terms;
}

double smallq_sensitivity_series(double r, double tau, std::int64_t n_atoms) {
  const SmallQSeriesTerms t = smallq_series_terms(r, tau, n_atoms);
  return t.leading + t.second + t.third;
}

double optimal_C() { return std::sqrt(2.0 * (std::sqrt(129.0) - 3.0) / 15.0); }

double smallq_min_sensitivity(double q, std::int64_t n_atoms) {
  if (!(q >= 0.0)) throw Error(ErrorKind::invalid_argument, "q must be non-negative");
  const double c = optimal_C();
  return (5.0 / 32.0 * c * c * c + 3.0 / 8.0 * c + (1.0 + q * q / 8.0) / c) /
         static_cast<double>(n_atoms);
}

double smallq_opt_r(double q, std::int64_t n_atoms) {
  if (!(q > 0.0)) throw Error(ErrorKind::invalid_argument, "q must be positive");
  return std::log(optimal_C() * std::sqrt(static_cast<double>(n_atoms) / q));
}

namespace fisher_terms {

double a1(double r, double tau) {
  const Hyper h = hyper(r);
  const double t2 = tau * tau;
  const double t4 = t2 * t2;
  const double sinh2r = 2.0 * h.sh * h.ch;
  return 1.0 + t4 / 16.0 * (3.0 * h.cosh4r + 1.0) - t4 * t2 / 2.0 * (3.0 * h.cosh2r + 1.0) * h.sh2 +
         3.0 / 512.0 * t4 * t4 * (35.0 * h.cosh4r + 13.0) * sinh2r * sinh2r;
}

double a2(double r, double tau) {
  const Hyper h = hyper(r);
  const double t2 = tau * tau;
  const double t4 = t2 * t2;
  const double sinh3r = std::sinh(3.0 * r);
  const double cosh3r = std::cosh(3.0 * r);
  const double cosh6r = std::cosh(6.0 * r);
  return t2 * (h.e_2r - 1.0) -
         t4 / 4.0 * (1.0 + 24.0 * h.ch * h.sh * h.sh2 - 7.0 * h.cosh2r + 3.0 * h.cosh4r) +
         t4 * t2 / 8.0 * h.e_r * h.sh2 * (h.sh - 10.0 * h.ch + 9.0 * sinh3r + 6.0 * cosh3r) +
         t4 * t4 / 256.0 * (8.0 - 23.0 * h.cosh2r + 15.0 * cosh6r);
}

double a3(double r, double tau) {
  const Hyper h = hyper(r);
  const double t2 = tau * tau;
  const double t4 = t2 * t2;
  return t4 / 4.0 * (1.0 - t2 * h.sh2) + t4 * t4 / 32.0 * (3.0 * h.cosh2r + 1.0) * h.sh2;
}

}  // namespace fisher_terms

double qfi_smallq(double r, double tau, std::int64_t n_atoms) {
  check_tau(tau);
  const double n = static_cast<double>(n_atoms);
  return fisher_terms::a1(r, tau) * n + fisher_terms::a2(r, tau) * n * n +
         fisher_terms::a3(r, tau) * n * n * n;
}

bool smallq_valid(double r, double tau, std::int64_t n_atoms) {
  return tau * std::exp(r) <= 1.0 && tau * std::sqrt(static_cast<double>(n_atoms)) <= 1.0;
}

SmallQExpansion smallq_expansion(double r, double tau, std::int64_t n_atoms) {
  SmallQExpansion e;
  e.tau = tau;
  e.r = r;
  e.n_atoms = n_atoms;
  e.n_a1_tau = heun_na1(r, tau, n_atoms);
  e.slope = smallq_slope(r, tau, n_atoms);
  e.variance = smallq_variance(r, tau, n_atoms);
  e.delta_phi_series =
      tau > 0.0 ? smallq_sensitivity_series(r, tau, n_atoms) : std::numeric_limits<double>::infinity();
  e.qfi = qfi_smallq(r, tau, n_atoms);
  e.valid = smallq_valid(r, tau, n_atoms) && std::isfinite(e.variance) && e.variance >= 0.0;
  return e;
}

}  // namespace squeezelab
