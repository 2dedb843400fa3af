#pragma once

// Mie series for a homogeneous sphere centred at the origin, illuminated by
// a plane wave travelling along +z with x polarization. Uses its own special
// functions and shares nothing with the boundary element kernels.

#include <complex>
#include <span>
#include <vector>

#include "mtbem/fields.hpp"

namespace mtbem {

struct MieCoefficients {
  std::vector<std::complex<double>> a;  // index n - 1
  std::vector<std::complex<double>> b;
};

// ceil(x + 4 x^(1/3) + 2) for size parameter x.
int mie_order(double size_parameter);

// Scattering coefficients relative to the background, x = kappa0 * radius,
// relative refractive index sqrt(eps_r mu_r). Orders above mie_order(x) are
// added until the last term falls below 1e-12 of the partial sum; throws
// Error when that fails within 4 x mie_order(x) + 40 terms. `n_max` > 0 forces
// the order instead.
MieCoefficients mie_coefficients(double size_parameter, double eps_r, double mu_r, int n_max = 0);

// Scattered far field lim r exp(+i kappa0 r) e_scat with unit amplitude,
// eps_r and mu_r relative to a background of impedance one.
FarFieldPattern mie_far_field(double radius, double eps_r, double mu_r, double kappa0,
                              std::span<const Direction> directions, int n_max = 0);

}  // namespace mtbem
