#pragma once

#include <cstdint>
#include <vector>

#include "lpm/rng.hpp"
#include "lpm/types.hpp"

namespace lpm {

/// Inputs for drawing whole synthetic problems from the generative process.
struct GenConfig {
    Hyperparams hyper;
    std::vector<int> task_dims;              // d_m per task
    std::vector<int> n_per_task;             // n_m per task
    std::vector<double> labeled_fraction;    // in [0, 1], per task
    std::uint64_t seed = 0;

    int task_count() const { return static_cast<int>(task_dims.size()); }
};

void ensure_valid(const GenConfig& config);

/// Classifier draw: u_j ~ Exp(rate lambda/2), w_j ~ N(0, u_j). Marginally each
/// w_j is Laplace with rate sqrt(lambda). Requires lambda > 0.
struct ClassifierDraw {
    Eigen::VectorXd w;
    Eigen::VectorXd u;
};
ClassifierDraw sample_classifier(const Hyperparams& hyper, Rng& rng);

/// Transform draw: tau_kj ~ Exp(rate gamma/2), f_kj ~ N(0, tau_kj). Marginally
/// Laplace with rate sqrt(gamma). Requires gamma > 0.
struct TransformDraw {
    Eigen::MatrixXd f;    // d_m x f0
    Eigen::MatrixXd tau;  // d_m x f0
};
TransformDraw sample_transform(int d_m, const Hyperparams& hyper, Rng& rng);

/// One task drawn from the model, with the hidden variables kept for tests.
struct TaskDraw {
    TaskDataset data;      // labels retained only for the labeled subset
    Eigen::MatrixXd s;     // latent features, f0 x n_m
    Eigen::VectorXd z;     // latent probit responses
    std::vector<int> y;    // labels of every example (before masking)
};

/// Draw n_m examples of task `task_index` from params: s ~ N(mu, sigma),
/// x ~ N(F s + d, eta I), z ~ N(w's + b, 1), y = +1 iff z >= 0. A
/// labeled_fraction subset (chosen uniformly at random, no class balancing)
/// keeps its labels.
TaskDraw sample_task(const LpmParams& params, const Hyperparams& hyper, int task_index,
                     int n_m, double labeled_fraction, Rng& rng);

/// Draw a full parameter set per the generative process (w and F_m from the
/// Laplacian hierarchy, mu = 0, sigma = I, b = 0, d_m = 0).
struct ParamsDraw {
    LpmParams params;
    SparsityScales scales;
};
ParamsDraw sample_params(const GenConfig& config, Rng& rng);

/// Full synthetic problem: parameters plus one dataset per task, drawn on
/// deterministic per-task substreams of config.seed.
struct ProblemDraw {
    LpmParams params;
    SparsityScales scales;
    std::vector<TaskDraw> tasks;
};
ProblemDraw sample_problem(const GenConfig& config);

/// Sparse vector with `nonzeros` entries at distinct random positions,
/// magnitudes uniform in [0.5, 1.5] with random signs.
Eigen::VectorXd sample_sparse_weights(int f0, int nonzeros, Rng& rng);

/// Sparse d x f0 matrix with approximately `density` fraction of nonzero
/// standard-normal entries; resampled until it has full column rank (and at
/// least one nonzero per column).
Eigen::MatrixXd sample_sparse_transform(int d, int f0, double density, Rng& rng);

}  // namespace lpm
