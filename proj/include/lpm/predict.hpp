#pragma once

#include <vector>

#include "lpm/em.hpp"
#include "lpm/types.hpp"

namespace lpm {

/// Probit prediction for one example: P(y = +1 | x) = cdf(zeta / sqrt(rho))
/// under the conditional response law z | x ~ N(zeta, rho).
struct Prediction {
    double prob_positive;
    double zeta;
    double rho;
};

Prediction predict(const LpmParams& params, const Hyperparams& hyper, int task_index,
                   const Eigen::VectorXd& x);

/// Batched scores P(y = +1 | x_i) for the columns of x.
Eigen::VectorXd predict_scores(const LpmParams& params, const Hyperparams& hyper,
                               int task_index, const Eigen::MatrixXd& x);

/// Area under the ROC curve (Mann-Whitney statistic, ties counted 1/2).
/// Throws std::invalid_argument unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Single-task baseline: the same model and hyperparameters fit on one task
/// alone, isolating the effect of cross-task sharing. Requires labels.
FitResult fit_stl(const TaskDataset& task, const Hyperparams& hyper,
                  const FitOptions& options = {});

/// CSV export (example id, score, label; label blank when absent).
void write_scores_csv(const Eigen::VectorXd& scores,
                      const std::vector<std::optional<int>>& labels, std::ostream& out);

}  // namespace lpm
