#include "mtbem/mie.hpp"

#include <cmath>
#include <numbers>

#include "mtbem/error.hpp"

namespace mtbem {

namespace {

using cplx = std::complex<double>;

// Riccati-Bessel psi_n(x) = x j_n(x) for n = 0..n_max by normalized downward
// recurrence.
std::vector<double> riccati_psi(double x, int n_max) {
  const int start = n_max + 20 + static_cast<int>(x);
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[start] = 1e-300;
  for (int n = start; n >= 1; --n) {
    j[n - 1] = (2.0 * n + 1.0) / x * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > 1e250) {
      for (int k = n - 1; k <= start; ++k) j[k] *= 1e-250;
    }
  }
  const double scale = (std::sin(x) / x) / j[0];
  std::vector<double> psi(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) psi[n] = x * j[n] * scale;
  return psi;
}

// x y_n(x) by upward recurrence.
std::vector<double> riccati_chi(double x, int n_max) {
  std::vector<double> y(static_cast<std::size_t>(n_max) + 2);
  y[0] = -std::cos(x) / x;
  y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int n = 1; n < n_max; ++n) y[n + 1] = (2.0 * n + 1.0) / x * y[n] - y[n - 1];
  std::vector<double> chi(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) chi[n] = x * y[n];
  return chi;
}

// Logarithmic derivative psi_n'(z) / psi_n(z) by downward recurrence.
std::vector<cplx> log_derivative(cplx z, int n_max) {
  const int start = n_max + 15 + static_cast<int>(std::abs(z));
  cplx d = 0.0;
  for (int n = start; n > n_max; --n) d = static_cast<double>(n) / z - 1.0 / (d + static_cast<double>(n) / z);
  std::vector<cplx> out(static_cast<std::size_t>(n_max) + 1);
  out[n_max] = d;
  for (int n = n_max; n >= 1; --n) out[n - 1] = static_cast<double>(n) / z - 1.0 / (out[n] + static_cast<double>(n) / z);
  return out;
}

void coefficients(double x, cplx m, double mu_r, int n_max, MieCoefficients& c) {
  const std::vector<double> psi = riccati_psi(x, n_max);
  const std::vector<double> chi = riccati_chi(x, n_max);
  const std::vector<cplx> d = log_derivative(m * x, n_max);
  c.a.clear();
  c.b.clear();
  for (int n = 1; n <= n_max; ++n) {
    const cplx xi(psi[n], chi[n]);
    const cplx xi1(psi[n - 1], chi[n - 1]);
    const double dpsi = psi[n - 1] - n * psi[n] / x;
    const cplx dxi = xi1 - static_cast<double>(n) * xi / x;
    c.a.push_back((m * dpsi - mu_r * d[n] * psi[n]) / (m * dxi - mu_r * d[n] * xi));
    c.b.push_back((mu_r * dpsi - m * d[n] * psi[n]) / (mu_r * dxi - m * d[n] * xi));
  }
}

}  // namespace

int mie_order(double size_parameter) {
  return static_cast<int>(std::ceil(size_parameter + 4.0 * std::cbrt(size_parameter) + 2.0));
}

MieCoefficients mie_coefficients(double size_parameter, double eps_r, double mu_r, int n_max) {
  if (!(size_parameter > 0.0) || !(eps_r > 0.0) || !(mu_r > 0.0)) throw Error("invalid Mie parameters");
  // The e^{-i w t} series applies to the conjugate problem; real materials
  // are self-conjugate.
  const cplx m = std::sqrt(eps_r * mu_r);
  MieCoefficients c;
  if (n_max > 0) {
    coefficients(size_parameter, m, mu_r, n_max, c);
    return c;
  }
  const int base = mie_order(size_parameter);
  const int limit = 4 * base + 40;
  for (int n = base; n <= limit; n += 4) {
    coefficients(size_parameter, m, mu_r, n, c);
    double sum = 0.0;
    for (std::size_t i = 0; i < c.a.size(); ++i) sum += (2.0 * i + 3.0) * (std::abs(c.a[i]) + std::abs(c.b[i]));
    const double tail = (2.0 * n + 1.0) * (std::abs(c.a.back()) + std::abs(c.b.back()));
    if (tail <= 1e-12 * sum || sum == 0.0) return c;
  }
  throw Error("Mie series did not converge for size parameter " + std::to_string(size_parameter));
}

FarFieldPattern mie_far_field(double radius, double eps_r, double mu_r, double kappa0,
                              std::span<const Direction> directions, int n_max) {
  if (!(radius > 0.0) || !(kappa0 > 0.0)) throw Error("invalid Mie parameters");
  const MieCoefficients c = mie_coefficients(kappa0 * radius, eps_r, mu_r, n_max);
  const int order = static_cast<int>(c.a.size());
  FarFieldPattern p;
  p.directions.assign(directions.begin(), directions.end());
  for (const Direction& d : directions) {
    const double mu = std::cos(d.theta);
    // Angular functions pi_n, tau_n.
    double pi_prev = 0.0, pi_n = 1.0;
    cplx s1 = 0.0, s2 = 0.0;
    for (int n = 1; n <= order; ++n) {
      const double tau = n * mu * pi_n - (n + 1) * pi_prev;
      const double f = (2.0 * n + 1.0) / (n * (n + 1.0));
      s1 += f * (c.a[n - 1] * pi_n + c.b[n - 1] * tau);
      s2 += f * (c.a[n - 1] * tau + c.b[n - 1] * pi_n);
      const double next = ((2.0 * n + 1.0) * mu * pi_n - (n + 1.0) * pi_prev) / n;
      pi_prev = pi_n;
      pi_n = next;
    }
    // Conjugation maps the e^{-i w t} amplitudes to the e^{+i w t} convention.
    const cplx scale = 1.0 / (cplx(0.0, 1.0) * kappa0);
    p.e_theta.push_back(scale * std::conj(s2) * std::cos(d.phi));
    p.e_phi.push_back(-scale * std::conj(s1) * std::sin(d.phi));
  }
  return p;
}

}  // namespace mtbem
