#include "lpm/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lpm/normal.hpp"

namespace lpm {

Prediction predict(const LpmParams& params, const Hyperparams& hyper, int task_index,
                   const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw std::invalid_argument("predict: non-finite features");
    const ResponseLaw law = latent_response_law(params, hyper, task_index, x);
    Prediction p;
    p.zeta = law.zeta(0);
    p.rho = law.rho;
    p.prob_positive = norm_cdf(p.zeta / std::sqrt(p.rho));
    return p;
}

Eigen::VectorXd predict_scores(const LpmParams& params, const Hyperparams& hyper,
                               int task_index, const Eigen::MatrixXd& x) {
    const ResponseLaw law = latent_response_law(params, hyper, task_index, x);
    const double sr = std::sqrt(law.rho);
    Eigen::VectorXd out(law.zeta.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = norm_cdf(law.zeta(i) / sr);
    return out;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: scores/labels size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l == 1)
            ++n_pos;
        else if (l == -1)
            ++n_neg;
        else
            throw std::invalid_argument("auc: labels must be +1/-1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank-sum with average ranks over tied score groups.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                                        (static_cast<double>(n_pos) + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

FitResult fit_stl(const TaskDataset& task, const Hyperparams& hyper, const FitOptions& options) {
    if (task.labeled_count() == 0)
        throw std::invalid_argument("fit_stl: task has no labels");
    return fit({task}, hyper, options);
}

void write_scores_csv(const Eigen::VectorXd& scores,
                      const std::vector<std::optional<int>>& labels, std::ostream& out) {
    if (static_cast<Eigen::Index>(labels.size()) != scores.size())
        throw std::invalid_argument("write_scores_csv: size mismatch");
    out << "example,score,label\n";
    char buf[64];
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,", static_cast<long long>(i), scores(i));
        out << buf;
        if (labels[i].has_value()) out << (*labels[i] > 0 ? "+1" : "-1");
        out << '\n';
    }
}

}  // namespace lpm
