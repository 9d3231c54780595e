#include "lpm/truncated_normal.hpp"

#include <cmath>
#include <stdexcept>

#include "lpm/normal.hpp"

namespace lpm {

TruncatedMoments truncated_normal_moments(double zeta, double rho, int y) {
    if (!(rho > 0.0)) throw std::domain_error("truncated_normal_moments: rho must be > 0");
    if (y != 1 && y != -1)
        throw std::domain_error("truncated_normal_moments: y must be +1 or -1");
    const double sr = std::sqrt(rho);
    // Standardize u = y (z - zeta)/sr; the label side becomes u >= -t.
    const double t = y * zeta / sr;
    const double h = inv_mills(t);  // E[u | u >= -t]
    TruncatedMoments out;
    out.xi = zeta + y * sr * h;
    // Var[u | u >= -t] = 1 - h (h + t); always in (0, 1].
    out.beta = rho * (1.0 - h * (h + t));
    return out;
}

}  // namespace lpm
