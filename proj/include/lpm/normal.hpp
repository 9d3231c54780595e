#pragma once

namespace lpm {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF.
double norm_cdf(double x);

/// log(norm_cdf(x)), stable for x down to -40 and beyond.
double norm_logcdf(double x);

/// Inverse CDF (probit), accurate to ~1e-15 over (0, 1).
double norm_quantile(double p);

/// Scaled complementary error function exp(x^2) * erfc(x), no overflow for
/// large positive x.
double erfcx(double x);

/// Inverse Mills ratio norm_pdf(t) / norm_cdf(t), stable for t down to -40
/// and beyond (where the ratio approaches -t).
double inv_mills(double t);

}  // namespace lpm
