#include "lpm/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lpm {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kSqrt2OverPi = 0.79788456080286535587989211986876;
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double erfcx(double x) {
    if (x < 0.0) {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x); overflows to +inf for x < -26.6.
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x < 15.0) {
        // exp(225) and erfc(15) are both comfortably inside double range.
        return std::exp(x * x) * std::erfc(x);
    }
    // Asymptotic series 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k.
    // At x >= 15 the terms fall below 1e-17 well before divergence.
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 20; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        sum += term;
        if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
    }
    return sum / (x * kSqrtPi);
}

double norm_logcdf(double x) {
    if (x > 0.0) {
        // 1 - cdf is small here; log1p keeps full precision.
        return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    }
    if (x > -6.0) {
        return std::log(norm_cdf(x));
    }
    // cdf(x) = 0.5 exp(-x^2/2) erfcx(-x/sqrt(2)) for very negative x.
    return -0.5 * x * x + std::log(0.5 * erfcx(-x * kInvSqrt2));
}

double inv_mills(double t) {
    if (t > -6.0) {
        return norm_pdf(t) / norm_cdf(t);
    }
    // pdf/cdf = sqrt(2/pi) / erfcx(-t/sqrt(2)); avoids underflow of both
    // numerator and denominator.
    return kSqrt2OverPi / erfcx(-t * kInvSqrt2);
}

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("norm_quantile: p must lie in (0, 1)");
    }
    // Acklam's rational approximation, then one Halley refinement.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = norm_cdf(x) - p;
    const double u = e / norm_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace lpm
