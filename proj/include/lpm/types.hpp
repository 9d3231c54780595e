#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lpm {

/// Fixed inputs to learning: Laplacian rates (gamma, lambda), observation
/// noise variance eta, latent dimensionality f0, and the derived regularizers
/// alpha = eta*sqrt(gamma), vartheta = sqrt(lambda).
///
/// Construct through from_rates() or from_regularizers(); both populate all
/// six fields so either parameterization can be read back.
struct Hyperparams {
    double gamma = 0.0;
    double lambda = 0.0;
    double eta = 1.0;
    int f0 = 1;
    double alpha = 0.0;
    double vartheta = 0.0;

    static Hyperparams from_rates(double gamma, double lambda, double eta, int f0);
    static Hyperparams from_regularizers(double alpha, double vartheta, double eta, int f0);
};

/// Full model parameter set: shared latent Gaussian (mu, sigma), probit
/// classifier (w, b), and one (transform, translation) pair per task.
///
/// Value object; treat as immutable after construction. Use lpm::validate /
/// lpm::ensure_valid for the structural invariants (sigma PD, shared column
/// count f0, matching translation lengths).
struct LpmParams {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    double b = 0.0;
    Eigen::VectorXd w;
    std::vector<Eigen::MatrixXd> transforms;    // F_m, each d_m x f0
    std::vector<Eigen::VectorXd> translations;  // d_m offsets, each length d_m

    int f0() const { return static_cast<int>(mu.size()); }
    int task_count() const { return static_cast<int>(transforms.size()); }
};

/// One task's observations: feature matrix (one column per example) and a
/// partial labeling. label[i] is +1/-1 when example i is labeled, nullopt
/// when it is not.
struct TaskDataset {
    Eigen::MatrixXd x;  // d_m x n_m
    std::vector<std::optional<int>> labels;

    int dim() const { return static_cast<int>(x.rows()); }
    int size() const { return static_cast<int>(x.cols()); }
    std::vector<int> labeled_indices() const;
    std::vector<int> unlabeled_indices() const;
    int labeled_count() const;
};

/// Per-entry prior variances drawn inside the generative sampler (they are
/// integrated out during learning and exist only there).
struct SparsityScales {
    std::vector<Eigen::MatrixXd> tau;  // per task, d_m x f0
    Eigen::VectorXd u;                 // length f0
};

/// Outcome of structural validation; empty() means all invariants hold.
struct ValidationReport {
    std::vector<std::string> violations;

    bool empty() const { return violations.empty(); }
    std::string joined() const;
};

/// Check LpmParams invariants (sigma symmetric PD via Cholesky, consistent
/// f0 across transforms, translation lengths).
ValidationReport validate(const LpmParams& params);

/// Additionally cross-check params against datasets (task count, feature
/// dimensions, label values, finite entries).
ValidationReport validate(const LpmParams& params, const std::vector<TaskDataset>& data);

ValidationReport validate(const TaskDataset& task);

/// Throw std::invalid_argument with the joined report when validation fails.
void ensure_valid(const LpmParams& params);
void ensure_valid(const LpmParams& params, const std::vector<TaskDataset>& data);

}  // namespace lpm
