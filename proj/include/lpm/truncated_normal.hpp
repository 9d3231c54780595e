#pragma once

namespace lpm {

/// Conditional mean and variance of the latent probit response.
struct TruncatedMoments {
    double xi;    // E[z | label side]
    double beta;  // Var[z | label side]
};

/// Moments of z ~ N(zeta, rho) conditioned on the observed label side:
/// z >= 0 for y = +1, z < 0 for y = -1.
///
/// Stable for |zeta/sqrt(rho)| up to 40 and beyond. Throws std::domain_error
/// for rho <= 0 or y not in {+1, -1}.
TruncatedMoments truncated_normal_moments(double zeta, double rho, int y);

}  // namespace lpm
