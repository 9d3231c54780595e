#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lpm/errors.hpp"
#include "lpm/types.hpp"

namespace lpm {

/// Conditional moments of the latent variables for one task, given the data
/// and the current parameters.
///
/// phi columns are E[s_i | data]; r and q are the posterior covariance
/// building blocks (q ignores the probit response, r includes it). zeta/rho
/// are the mean/variance of the latent response z_i given features only; for
/// labeled examples xi/beta are the truncated moments given the label, for
/// unlabeled ones (xi, beta) = (zeta, rho).
struct EStepMoments {
    Eigen::MatrixXd r;    // f0 x f0
    Eigen::MatrixXd q;    // f0 x f0
    Eigen::MatrixXd phi;  // f0 x n
    Eigen::VectorXd zeta;
    Eigen::VectorXd rho;
    Eigen::VectorXd xi;
    Eigen::VectorXd beta;
};

EStepMoments e_step_task(const LpmParams& params, const Hyperparams& hyper,
                         const TaskDataset& task, int task_index);

/// Inner solver controls for the reweighted l1 M-steps.
struct ReweightOptions {
    int max_iters = 500;
    double tol = 1e-12;
};

/// Minimize f' quad f - 2 f' lin + 2 penalty ||f||_1 by iterating the
/// square-root reweighting f <- V (penalty I + V quad V)^{-1} V lin with
/// V = diag(sqrt|f|), starting from `start`. Coordinates that are exactly
/// zero in `start` stay zero. With penalty = 0 a rank-revealing
/// pseudo-inverse replaces the Cholesky solve.
Eigen::VectorXd reweighted_l1_minimize(const Eigen::MatrixXd& quad, const Eigen::VectorXd& lin,
                                       double penalty, Eigen::VectorXd start,
                                       const ReweightOptions& opt = {});

struct LatentUpdate {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

/// Latent mean/covariance update over all tasks' moments. sigma is
/// symmetrized and, when its Cholesky fails, nudged PD with jitter
/// 1e-10 * trace/f0 (absolute floor 1e-12 for the degenerate zero-trace
/// case).
LatentUpdate m_step_latent(const std::vector<EStepMoments>& moments, const LpmParams& params);

struct DomainUpdate {
    Eigen::MatrixXd f;
    Eigen::VectorXd d;
};

/// Domain transform update for one task: translation first (with the current
/// transform), then each transform row by the reweighted l1 solve against
/// the new translation. Rows that are currently all-zero stay zero.
DomainUpdate m_step_domain(const EStepMoments& moments, const TaskDataset& task,
                           const Hyperparams& hyper, const LpmParams& params, int task_index,
                           const ReweightOptions& opt = {});

struct ClassifierUpdate {
    Eigen::VectorXd w;
    double b;
};

/// Probit classifier update over the labeled examples of all tasks.
///
/// When cross_term is true the linear term includes the posterior covariance
/// between the latent features and the latent response (sum of beta_i R w),
/// which makes the step the exact maximizer of the EM surrogate; when false
/// only the phi_i (xi_i - b) pull is used. Throws std::invalid_argument when
/// no labels exist.
ClassifierUpdate m_step_classifier(const std::vector<EStepMoments>& moments,
                                   const std::vector<TaskDataset>& data, const LpmParams& params,
                                   const Hyperparams& hyper, bool cross_term = true,
                                   const ReweightOptions& opt = {});

/// Conditional law of the latent probit response given features only:
/// z_i | x_i ~ N(zeta_i, rho) with rho shared across the task's examples.
struct ResponseLaw {
    Eigen::VectorXd zeta;
    double rho;
};

ResponseLaw latent_response_law(const LpmParams& params, const Hyperparams& hyper,
                                int task_index, const Eigen::MatrixXd& x);

/// Closed-form log posterior of the parameters given the data: Gaussian
/// marginal of every feature vector, probit likelihood of every label, and
/// the Laplace log-priors on transform entries and classifier weights
/// (omitted for a zero rate, i.e. a flat prior).
double log_posterior(const LpmParams& params, const Hyperparams& hyper,
                     const std::vector<TaskDataset>& data);

struct FitIterationStats {
    int iteration = 0;
    double log_posterior = 0.0;
    double delta_mu = 0.0;
    double delta_sigma = 0.0;
    double delta_transform = 0.0;
    double delta_translation = 0.0;
    double delta_w = 0.0;
    double delta_b = 0.0;
    std::uint64_t flops = 0;
};

struct FitTrace {
    std::vector<FitIterationStats> iterations;
    bool converged = false;
    long long n_total = 0;
    long long n_labeled = 0;
    long long transform_entries = 0;
    long long transform_nonzeros = 0;   // |entry| > 1e-8 at convergence
    long long classifier_nonzeros = 0;  // |w_j| > 1e-8 at convergence
    std::string warning;
};

/// CSV export: iteration, log_posterior, block change norms, flops.
void write_trace_csv(const FitTrace& trace, std::ostream& out);

struct FitResult {
    LpmParams params;
    FitTrace trace;
};

/// Divergence (NaN/Inf objective) carrying the trace up to the failure.
struct FitDivergedError : NumericError {
    FitTrace trace;
    FitDivergedError(const std::string& msg, FitTrace t)
        : NumericError(msg), trace(std::move(t)) {}
};

struct FitOptions {
    double tol = 1e-6;   // relative change of the log posterior
    int max_iters = 500;
    /// Update (mu, sigma) each iteration. Off by default: the marginal mean
    /// and covariance are duplicated by (d_m, F_m), so mu = 0, sigma = I are
    /// held fixed unless this is enabled.
    bool update_latent_distribution = false;
    /// See m_step_classifier.
    bool classifier_cross_term = true;
    /// For joint fits (M >= 2) without an explicit init: warm start from
    /// per-task single-task fits, rotating each task's latent basis so its
    /// fitted classifier lies on the first axis. The per-task latent gauge is
    /// arbitrary; aligning it is what lets one shared classifier serve every
    /// task from the first iteration.
    bool warm_start = true;
    std::uint64_t seed = 0;               // drives default initialization
    std::optional<LpmParams> init;        // overrides default initialization
    ReweightOptions reweight;
};

/// Data-driven starting point: per-task feature means as translations,
/// scaled principal directions as transforms, small random classifier
/// weights, probit of the labeled positive fraction as bias. All transform
/// and classifier entries are kept away from exact zero (magnitude >= 1e-6)
/// so the reweighting never locks them prematurely.
LpmParams default_init(const std::vector<TaskDataset>& data, const Hyperparams& hyper,
                       std::uint64_t seed);

/// MAP estimation: per iteration, optionally (mu, sigma), then per-task
/// (F_m, d_m), then (w, b), with moments recomputed before each block; stops
/// when the relative change of the log posterior drops below tol or after
/// max_iters iterations. With zero labels the classifier update is skipped
/// (warning in the trace).
FitResult fit(const std::vector<TaskDataset>& data, const Hyperparams& hyper,
              const FitOptions& options = {});

/// Thread-local tally of scalar multiply-accumulate operations performed by
/// the E/M-step linear algebra (matrix products and factorizations count
/// their dimension products). For complexity measurements in tests.
std::uint64_t flop_counter();
void reset_flop_counter();

}  // namespace lpm
