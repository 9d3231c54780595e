#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lpm/types.hpp"

namespace lpm {

/// Least-squares latent recovery (F'F)^{-1} F' X, one column per example.
/// Throws NumericError when F is column-rank deficient.
Eigen::MatrixXd two_step_latent(const Eigen::MatrixXd& f, const Eigen::MatrixXd& x);

/// Column concatenation of the recovered latent matrices in task order.
Eigen::MatrixXd pool_psi(const std::vector<Eigen::MatrixXd>& s_hats);

struct LassoOptions {
    double coord_tol = 1e-10;  // max coordinate change per sweep
    int max_sweeps = 100000;
};

/// Minimize (1/n) ||z - Psi' w||^2 + r ||w||_1 by cyclic coordinate descent
/// with soft thresholding. psi is f0 x n (z has length n).
Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z, double r,
                            const LassoOptions& opt = {});

/// Largest violation of the lasso KKT (subgradient) conditions at w:
/// |(2/n) psi_j'(z - Psi' w)| <= r where w_j = 0, = r sign(w_j) otherwise.
double lasso_kkt_violation(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z, double r,
                           const Eigen::VectorXd& w);

/// Row-based spectral bound: max_i sum_j nnz(column j) * f_ij^2, an upper
/// bound for the largest eigenvalue of F'F that tightens with sparsity.
double byrne_max_eig_bound(const Eigen::MatrixXd& f);

/// Every quantity of the estimation-error bound for one trial.
struct BoundReport {
    int s = 0;            // support size of the true weights
    double c0 = 0.0;      // cone constant measured from the realized error
    double eps_psi = 0.0; // max row norm of Psi
    double a = 0.0;       // confidence parameter, a = n_t r / (sqrt(ln f0) eps_psi)
    double r = 0.0;       // lasso penalty
    int n_t = 0;          // pooled example count
    double denom = 0.0;   // sum_m eig_min((1/n_t) X_m X_m') / byrne(F_m)
    double rhs = 0.0;     // error bound value
    double delta_norm = 0.0;
    double p_e = 0.0;     // 1 - f0^(1 - a^2/8)
    double r_e = 0.0;     // ||Psi e||_inf / n_t (diagnostic)
    bool held = false;    // delta_norm <= rhs
    Eigen::VectorXd w_star;  // true weights of the trial (diagnostic)
    Eigen::VectorXd delta;   // realized estimation error (diagnostic)
};

/// Bound value: 2 a eps_psi n_t^{-1} sqrt(s (1 + c0^2 s) ln f0) divided by
/// sum_m eig_min((1/n_t) X_m X_m') / byrne_max_eig_bound(F_m). The Gram is
/// the d_m x d_m one (normalized by the pooled count n_t). Requires f0 >= 2
/// and a >= sqrt(8); throws NumericError on a zero denominator.
double error_bound_value(double a, double eps_psi, int n_t, int s, double c0, int f0,
                    const std::vector<Eigen::MatrixXd>& xs,
                    const std::vector<Eigen::MatrixXd>& fs);

struct BoundConfig {
    int f0 = 8;
    int s = 3;                 // nonzeros of the true weight vector
    int tasks = 4;
    int examples_per_task = 250;
    int dim_per_task = 16;     // observed dimension d_m (>= f0)
    double density = 0.3;      // transform nonzero fraction
    double eta = 0.01;         // observation noise variance
    double a = 4.0;            // must be >= sqrt(8)
    std::uint64_t seed = 0;
};

struct VerifySummary {
    std::vector<BoundReport> trials;
    double empirical_fraction = 0.0;  // fraction of trials with held == true
    double p_e = 0.0;
    bool vacuous = false;  // p_e <= 0 (a == sqrt(8))
};

/// Monte-Carlo check of the bound: per trial, draw a sparse weight vector and
/// sparse transforms, generate features, recover and pool the latents,
/// synthesize responses from the pooled matrix, solve the lasso with the
/// penalty implied by `a`, and record whether the realized error obeys the
/// bound. The cone constant is measured post hoc from the error vector.
VerifySummary verify_error_bound(const BoundConfig& config, int trials);

/// One CSV row per trial (s, c0, eps_psi, a, r, delta_norm, rhs, held)
/// followed by a summary line as a trailing comment.
void write_bound_csv(const VerifySummary& summary, std::ostream& out);

}  // namespace lpm
