// Independent reference implementations used only by tests. Each oracle
// reaches its answer by a different route than the library code it checks
// (quadrature instead of closed forms, Monte Carlo instead of conjugacy,
// coordinate descent / enumeration instead of reweighted solves).
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <vector>

#include "lpm/normal.hpp"
#include "lpm/rng.hpp"
#include "lpm/types.hpp"

namespace oracles {

// ---- adaptive Simpson quadrature ----

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

// Composite adaptive Simpson: the fixed pre-subdivision guarantees probe
// nodes inside narrow mass regions that a single wide interval would miss.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-14) {
    const int panels = 128;
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h;
        const double hi = (i == panels - 1) ? b : lo + h;
        const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
        const double whole = simpson(f, lo, hi, flo, fmid, fhi);
        total += adaptive_simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol, 40);
    }
    return total;
}

// ---- truncated normal moments by quadrature ----

struct TruncMoments {
    double xi;
    double beta;
};

// Moments of z ~ N(zeta, rho) conditioned on the y side of zero, computed by
// integrating a standardized, shifted integrand (no erfc/Mills machinery).
inline TruncMoments truncated_moments_quadrature(double zeta, double rho, int y) {
    const double sr = std::sqrt(rho);
    const double a = -static_cast<double>(y) * zeta / sr;  // condition u >= a
    double mean_u, var_u;
    if (a <= 0.0) {
        const double hi = std::max(a + 60.0, 40.0);
        auto phi = [](double u) { return std::exp(-0.5 * u * u); };
        const double i0 = integrate([&](double u) { return phi(u); }, a, hi);
        const double i1 = integrate([&](double u) { return u * phi(u); }, a, hi);
        const double i2 = integrate([&](double u) { return u * u * phi(u); }, a, hi);
        mean_u = i1 / i0;
        var_u = i2 / i0 - mean_u * mean_u;
    } else {
        // u = a + v: density proportional to exp(-a v - v^2/2) on v >= 0.
        const double hi = std::min(60.0 / a + 10.0, 60.0);
        auto g = [&](double v) { return std::exp(-a * v - 0.5 * v * v); };
        const double j0 = integrate(g, 0.0, hi);
        const double j1 = integrate([&](double v) { return v * g(v); }, 0.0, hi);
        const double j2 = integrate([&](double v) { return v * v * g(v); }, 0.0, hi);
        const double m1 = j1 / j0;
        mean_u = a + m1;
        var_u = j2 / j0 - m1 * m1;
    }
    TruncMoments out;
    out.xi = zeta + y * sr * mean_u;
    out.beta = rho * var_u;
    return out;
}

// ---- direct Laplace sampler (inverse CDF) ----

inline double laplace_draw(double rate, lpm::Rng& rng) {
    const double u = rng.uniform_open();
    return u < 0.5 ? std::log(2.0 * u) / rate : -std::log(2.0 * (1.0 - u)) / rate;
}

// ---- dense multivariate normal log density ----

inline double dense_gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& cov) {
    const Eigen::Index d = x.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) logdet += std::log(eig.eigenvalues()(i));
    const Eigen::VectorXd y = eig.eigenvectors().transpose() * (x - mean);
    const double quad = (y.array().square() / eig.eigenvalues().array()).sum();
    return -0.5 * (d * std::log(2.0 * M_PI) + logdet + quad);
}

// ---- coordinate descent on f'Qf - 2 f'c + 2 p ||f||_1 ----

inline Eigen::VectorXd cd_penalized_quadratic(const Eigen::MatrixXd& quad,
                                              const Eigen::VectorXd& lin, double penalty,
                                              int max_sweeps = 200000, double tol = 1e-13) {
    const Eigen::Index n = lin.size();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd qf = Eigen::VectorXd::Zero(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (quad(j, j) <= 0.0) continue;
            const double r = lin(j) - (qf(j) - quad(j, j) * f(j));
            double fj = 0.0;
            if (r > penalty)
                fj = (r - penalty) / quad(j, j);
            else if (r < -penalty)
                fj = (r + penalty) / quad(j, j);
            const double delta = fj - f(j);
            if (delta != 0.0) {
                qf += delta * quad.col(j);
                f(j) = fj;
                max_change = std::max(max_change, std::fabs(delta));
            }
        }
        if (max_change <= tol) break;
    }
    return f;
}

inline double penalized_quadratic_objective(const Eigen::MatrixXd& quad,
                                            const Eigen::VectorXd& lin, double penalty,
                                            const Eigen::VectorXd& f) {
    return f.dot(quad * f) - 2.0 * f.dot(lin) + 2.0 * penalty * f.cwiseAbs().sum();
}

// ---- lasso objective and sign-pattern enumeration ----

inline double lasso_objective(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z, double r,
                              const Eigen::VectorXd& w) {
    const double n = static_cast<double>(psi.cols());
    return (z - psi.transpose() * w).squaredNorm() / n + r * w.cwiseAbs().sum();
}

// Exact minimum of the lasso objective for tiny dimensions: solve the
// restricted stationarity system of every sign pattern and take the best
// candidate (the pattern of the true minimizer is among them).
inline double lasso_enumeration_minimum(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z,
                                        double r) {
    const int f0 = static_cast<int>(psi.rows());
    const double n = static_cast<double>(psi.cols());
    const Eigen::MatrixXd gram = psi * psi.transpose();
    const Eigen::VectorXd target = psi * z;
    double best = lasso_objective(psi, z, r, Eigen::VectorXd::Zero(f0));
    std::vector<int> pattern(f0, -1);
    const long total = static_cast<long>(std::pow(3.0, f0));
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<int> sign(f0);
        std::vector<int> active;
        for (int j = 0; j < f0; ++j) {
            sign[j] = static_cast<int>(c % 3) - 1;  // -1, 0, +1
            c /= 3;
            if (sign[j] != 0) active.push_back(j);
        }
        if (active.empty()) continue;
        Eigen::MatrixXd g(active.size(), active.size());
        Eigen::VectorXd rhs(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            rhs(i) = target(active[i]) - 0.5 * r * n * sign[active[i]];
            for (std::size_t j = 0; j < active.size(); ++j) g(i, j) = gram(active[i], active[j]);
        }
        const Eigen::VectorXd wa = g.fullPivLu().solve(rhs);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(f0);
        for (std::size_t i = 0; i < active.size(); ++i) w(active[i]) = wa(i);
        best = std::min(best, lasso_objective(psi, z, r, w));
    }
    return best;
}

// ---- importance-sampling oracle for the conditional latent moments ----

struct PosteriorMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double ess;  // effective sample size of the weights
};

// E[s | x, y] and Cov[s | x, y] for one example by importance sampling:
// proposal is the Gaussian posterior of s given features only, weights are
// the probit label likelihood.
inline PosteriorMoments posterior_moments_is(const lpm::LpmParams& params, double eta,
                                             int task_index, const Eigen::VectorXd& x,
                                             std::optional<int> label, int n_samples,
                                             lpm::Rng& rng) {
    const int f0 = params.f0();
    const auto& f = params.transforms[task_index];
    const auto& d = params.translations[task_index];
    const Eigen::MatrixXd sigma_inv = params.sigma.inverse();
    const Eigen::MatrixXd precision = sigma_inv + f.transpose() * f / eta;
    const Eigen::MatrixXd q = precision.inverse();
    const Eigen::VectorXd mean_q = q * (sigma_inv * params.mu + f.transpose() * (x - d) / eta);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(q).matrixL();

    Eigen::VectorXd acc_mean = Eigen::VectorXd::Zero(f0);
    Eigen::MatrixXd acc_outer = Eigen::MatrixXd::Zero(f0, f0);
    double acc_w = 0.0, acc_w2 = 0.0;
    Eigen::VectorXd e(f0), s(f0);
    for (int i = 0; i < n_samples; ++i) {
        for (int j = 0; j < f0; ++j) e(j) = rng.normal();
        s = mean_q + chol * e;
        double weight = 1.0;
        if (label.has_value())
            weight = lpm::norm_cdf(*label * (params.w.dot(s) + params.b));
        acc_w += weight;
        acc_w2 += weight * weight;
        acc_mean += weight * s;
        acc_outer += weight * (s * s.transpose());
    }
    PosteriorMoments out;
    out.mean = acc_mean / acc_w;
    out.cov = acc_outer / acc_w - out.mean * out.mean.transpose();
    out.ess = acc_w * acc_w / acc_w2;
    return out;
}

}  // namespace oracles
