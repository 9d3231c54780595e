#include "lpm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lpm/csv.hpp"
#include "lpm/errors.hpp"
#include "lpm/predict.hpp"

namespace lpm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v, const char* format = "%.12g") {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

void shuffle(std::vector<int>& v, Rng& rng) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const std::size_t j = i + rng.uniform_int(v.size() - i);
        std::swap(v[i], v[j]);
    }
}

int resolve_f0(const ExperimentConfig& config, const std::vector<TaskDataset>& tasks) {
    if (config.f0 > 0) return config.f0;
    int f0 = tasks.front().dim();
    for (const auto& t : tasks) f0 = std::min(f0, t.dim());
    return f0;
}

void require_fully_labeled(const std::vector<TaskDataset>& tasks) {
    for (std::size_t m = 0; m < tasks.size(); ++m) {
        if (tasks[m].labeled_count() != tasks[m].size()) {
            std::ostringstream os;
            os << "task " << m
               << ": experiment protocols need fully labeled input files (labels are hidden "
                  "by the split, not by the file)";
            throw DataError(os.str());
        }
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

FitOptions fit_options(const ExperimentConfig& config, std::uint64_t seed) {
    FitOptions opt;
    opt.tol = config.em_tol;
    opt.max_iters = config.em_max_iters;
    opt.update_latent_distribution = config.update_latent_distribution;
    opt.classifier_cross_term = config.classifier_cross_term;
    opt.seed = seed;
    return opt;
}

std::uint64_t derived_seed(Rng base, std::uint64_t a, std::uint64_t b) {
    Rng r = base.substream(a).substream(b);
    return r.next_u64();
}

}  // namespace

SplitIndices stratified_split(const TaskDataset& full, double train_fraction, int labeled_count,
                              Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("stratified_split: train_fraction must lie in (0, 1)");
    std::vector<int> pos, neg;
    for (int i = 0; i < full.size(); ++i) {
        if (!full.labels[i].has_value())
            throw DataError("stratified_split: every example must be labeled");
        (*full.labels[i] == 1 ? pos : neg).push_back(i);
    }
    if (pos.size() < 2 || neg.size() < 2)
        throw DataError("stratified_split: need at least two examples of each class");
    shuffle(pos, rng);
    shuffle(neg, rng);

    auto train_count = [&](std::size_t n) {
        return static_cast<int>(std::llround(train_fraction * static_cast<double>(n)));
    };
    int train_pos = std::clamp(train_count(pos.size()), 1, static_cast<int>(pos.size()) - 1);
    int train_neg = std::clamp(train_count(neg.size()), 1, static_cast<int>(neg.size()) - 1);
    const int n_train = train_pos + train_neg;
    if (labeled_count > n_train) {
        std::ostringstream os;
        os << "stratified_split: labeled count " << labeled_count << " exceeds the " << n_train
           << " training examples available";
        throw DataError(os.str());
    }

    // Labeled subset drawn stratified from train, at least one per class when
    // the budget allows it.
    int lab_pos = static_cast<int>(std::llround(static_cast<double>(labeled_count) * train_pos /
                                                static_cast<double>(n_train)));
    lab_pos = std::clamp(lab_pos, std::max(0, labeled_count - train_neg),
                         std::min(labeled_count, train_pos));
    if (labeled_count >= 2) {
        if (lab_pos == 0 && train_pos > 0 && labeled_count - 1 <= train_neg) lab_pos = 1;
        if (lab_pos == labeled_count && train_neg > 0 && labeled_count - 1 <= train_pos)
            lab_pos = labeled_count - 1;
    }
    const int lab_neg = labeled_count - lab_pos;

    SplitIndices out;
    for (int i = 0; i < train_pos; ++i)
        (i < lab_pos ? out.labeled : out.unlabeled).push_back(pos[i]);
    for (int i = 0; i < train_neg; ++i)
        (i < lab_neg ? out.labeled : out.unlabeled).push_back(neg[i]);
    for (std::size_t i = train_pos; i < pos.size(); ++i) out.test.push_back(pos[i]);
    for (std::size_t i = train_neg; i < neg.size(); ++i) out.test.push_back(neg[i]);
    std::sort(out.labeled.begin(), out.labeled.end());
    std::sort(out.unlabeled.begin(), out.unlabeled.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitView make_split_view(const TaskDataset& full, const SplitIndices& split, bool normalize) {
    std::vector<int> train = split.labeled;
    train.insert(train.end(), split.unlabeled.begin(), split.unlabeled.end());
    std::sort(train.begin(), train.end());
    std::vector<bool> is_labeled(full.size(), false);
    for (int i : split.labeled) is_labeled[static_cast<std::size_t>(i)] = true;

    SplitView view;
    view.train.x.resize(full.dim(), static_cast<Eigen::Index>(train.size()));
    view.train.labels.resize(train.size());
    for (std::size_t c = 0; c < train.size(); ++c) {
        view.train.x.col(static_cast<Eigen::Index>(c)) = full.x.col(train[c]);
        view.train.labels[c] =
            is_labeled[static_cast<std::size_t>(train[c])] ? full.labels[train[c]] : std::nullopt;
    }
    view.test_x.resize(full.dim(), static_cast<Eigen::Index>(split.test.size()));
    for (std::size_t c = 0; c < split.test.size(); ++c) {
        view.test_x.col(static_cast<Eigen::Index>(c)) = full.x.col(split.test[c]);
        view.test_y.push_back(*full.labels[split.test[c]]);
    }

    if (normalize) {
        // Statistics from the training examples only.
        for (int k = 0; k < full.dim(); ++k) {
            const double mean = view.train.x.row(k).mean();
            const double sd = std::sqrt(
                (view.train.x.row(k).array() - mean).square().sum() / view.train.x.cols());
            view.train.x.row(k).array() -= mean;
            if (view.test_x.cols() > 0) view.test_x.row(k).array() -= mean;
            if (sd > 0.0) {
                view.train.x.row(k) /= sd;
                if (view.test_x.cols() > 0) view.test_x.row(k) /= sd;
            }
        }
    }
    return view;
}

namespace {

struct RunAccumulator {
    std::vector<double> lpm;  // per-run AUC (mean over evaluated tasks)
    std::vector<double> stl;
};

ResultRow make_method_row(const std::string& method, int labeled, double alpha, double vartheta,
                          const std::vector<double>& aucs, const std::vector<double>& stl_aucs) {
    ResultRow row;
    row.method = method;
    row.labeled_count = labeled;
    row.alpha = alpha;
    row.vartheta = vartheta;
    row.mean_auc = mean_of(aucs);
    row.std_auc = sample_std(aucs);
    std::vector<double> finite_stl;
    for (double v : stl_aucs)
        if (!std::isnan(v)) finite_stl.push_back(v);
    if (!finite_stl.empty()) {
        row.stl_mean_auc = mean_of(finite_stl);
        row.improvement_vs_stl = row.mean_auc - row.stl_mean_auc;
    } else {
        row.stl_mean_auc = kNaN;
        row.improvement_vs_stl = kNaN;
    }
    return row;
}

ResultRow make_stl_row(int labeled, double alpha, double vartheta,
                       const std::vector<double>& stl_aucs) {
    ResultRow row;
    row.method = "stl";
    row.labeled_count = labeled;
    row.alpha = alpha;
    row.vartheta = vartheta;
    std::vector<double> finite;
    for (double v : stl_aucs)
        if (!std::isnan(v)) finite.push_back(v);
    if (!finite.empty()) {
        row.mean_auc = mean_of(finite);
        row.std_auc = sample_std(finite);
    } else {
        row.mean_auc = kNaN;
        row.std_auc = kNaN;
    }
    row.stl_mean_auc = kNaN;
    row.improvement_vs_stl = kNaN;
    return row;
}

std::vector<double> scores_to_vector(const Eigen::VectorXd& s) {
    return {s.data(), s.data() + s.size()};
}

}  // namespace

ExperimentOutputs run_mtl(const ExperimentConfig& config,
                          const std::vector<TaskDataset>& full_tasks) {
    if (full_tasks.size() < 2) throw std::invalid_argument("run_mtl: need at least 2 tasks");
    if (config.runs < 1) throw std::invalid_argument("run_mtl: runs must be >= 1");
    require_fully_labeled(full_tasks);
    const int f0 = resolve_f0(config, full_tasks);
    const std::size_t n_tasks = full_tasks.size();
    Rng root(config.seed);

    ExperimentOutputs out;
    for (std::size_t lc_idx = 0; lc_idx < config.labeled_counts.size(); ++lc_idx) {
        const int labeled = config.labeled_counts[lc_idx];
        // Accumulators per grid point; splits are shared across the grid
        // within a run so every comparison sees identical data.
        std::map<std::pair<double, double>, RunAccumulator> acc;
        for (int run = 0; run < config.runs; ++run) {
            std::vector<SplitView> views;
            std::vector<TaskDataset> train_tasks;
            for (std::size_t m = 0; m < n_tasks; ++m) {
                Rng split_rng = root.substream(lc_idx).substream(
                    static_cast<std::uint64_t>(run) * n_tasks + m);
                const SplitIndices split =
                    stratified_split(full_tasks[m], config.train_fraction, labeled, split_rng);
                views.push_back(make_split_view(full_tasks[m], split, config.normalize));
                train_tasks.push_back(views.back().train);
            }
            const std::uint64_t fit_seed = derived_seed(root, 1000 + lc_idx, run);

            for (double alpha : config.alpha_grid) {
                for (double vartheta : config.vartheta_grid) {
                    const Hyperparams hyper =
                        Hyperparams::from_regularizers(alpha, vartheta, config.eta, f0);
                    const FitResult joint =
                        fit(train_tasks, hyper, fit_options(config, fit_seed));
                    std::vector<double> task_aucs, stl_aucs;
                    for (std::size_t m = 0; m < n_tasks; ++m) {
                        const Eigen::VectorXd scores = predict_scores(
                            joint.params, hyper, static_cast<int>(m), views[m].test_x);
                        task_aucs.push_back(auc(scores_to_vector(scores), views[m].test_y));
                        const FitResult single = fit_stl(views[m].train, hyper,
                                                         fit_options(config, fit_seed + m + 1));
                        const Eigen::VectorXd stl_scores =
                            predict_scores(single.params, hyper, 0, views[m].test_x);
                        stl_aucs.push_back(auc(scores_to_vector(stl_scores), views[m].test_y));
                    }
                    auto& a = acc[{alpha, vartheta}];
                    a.lpm.push_back(mean_of(task_aucs));
                    a.stl.push_back(mean_of(stl_aucs));
                    if (run == 0) {
                        std::ostringstream tag;
                        tag << "mtl_labeled" << labeled << "_alpha" << fmt(alpha) << "_vartheta"
                            << fmt(vartheta);
                        out.traces.emplace_back(tag.str(), joint.trace);
                    }
                }
            }
        }
        for (double alpha : config.alpha_grid) {
            for (double vartheta : config.vartheta_grid) {
                const auto& a = acc[{alpha, vartheta}];
                out.table.rows.push_back(
                    make_method_row("lpm-mtl", labeled, alpha, vartheta, a.lpm, a.stl));
                out.table.rows.push_back(make_stl_row(labeled, alpha, vartheta, a.stl));
            }
        }
    }
    return out;
}

ExperimentOutputs run_transfer(const ExperimentConfig& config,
                               const std::vector<TaskDataset>& full_tasks) {
    if (full_tasks.size() != 2)
        throw std::invalid_argument("run_transfer: exactly 2 tasks (source, target) required");
    if (config.source == config.target || config.source < 0 || config.source > 1 ||
        config.target < 0 || config.target > 1)
        throw std::invalid_argument("run_transfer: source/target must designate the two tasks");
    require_fully_labeled(full_tasks);
    const TaskDataset& source_full = full_tasks[static_cast<std::size_t>(config.source)];
    const TaskDataset& target_full = full_tasks[static_cast<std::size_t>(config.target)];
    const int f0 = resolve_f0(config, full_tasks);
    Rng root(config.seed);

    ExperimentOutputs out;
    for (std::size_t lc_idx = 0; lc_idx < config.labeled_counts.size(); ++lc_idx) {
        const int labeled = config.labeled_counts[lc_idx];
        std::map<std::pair<double, double>, RunAccumulator> acc;
        for (int run = 0; run < config.runs; ++run) {
            Rng target_rng = root.substream(lc_idx).substream(2ULL * run);
            const SplitIndices target_split =
                stratified_split(target_full, config.train_fraction, labeled, target_rng);
            const SplitView target_view =
                make_split_view(target_full, target_split, config.normalize);

            // Source enters fully labeled (or capped); it has no test side.
            SplitIndices source_split;
            if (config.source_labeled_cap < 0) {
                for (int i = 0; i < source_full.size(); ++i) source_split.labeled.push_back(i);
            } else {
                Rng source_rng = root.substream(lc_idx).substream(2ULL * run + 1);
                std::vector<int> all(static_cast<std::size_t>(source_full.size()));
                std::iota(all.begin(), all.end(), 0);
                shuffle(all, source_rng);
                for (std::size_t i = 0; i < all.size(); ++i) {
                    if (static_cast<long>(i) < config.source_labeled_cap)
                        source_split.labeled.push_back(all[i]);
                    else
                        source_split.unlabeled.push_back(all[i]);
                }
                std::sort(source_split.labeled.begin(), source_split.labeled.end());
                std::sort(source_split.unlabeled.begin(), source_split.unlabeled.end());
            }
            const SplitView source_view =
                make_split_view(source_full, source_split, config.normalize);

            const std::vector<TaskDataset> train_tasks = {source_view.train, target_view.train};
            const std::uint64_t fit_seed = derived_seed(root, 2000 + lc_idx, run);

            for (double alpha : config.alpha_grid) {
                for (double vartheta : config.vartheta_grid) {
                    const Hyperparams hyper =
                        Hyperparams::from_regularizers(alpha, vartheta, config.eta, f0);
                    const FitResult joint =
                        fit(train_tasks, hyper, fit_options(config, fit_seed));
                    const Eigen::VectorXd scores =
                        predict_scores(joint.params, hyper, 1, target_view.test_x);
                    double stl_auc = kNaN;
                    if (target_view.train.labeled_count() > 0) {
                        const FitResult single = fit_stl(target_view.train, hyper,
                                                         fit_options(config, fit_seed + 1));
                        const Eigen::VectorXd stl_scores =
                            predict_scores(single.params, hyper, 0, target_view.test_x);
                        stl_auc = auc(scores_to_vector(stl_scores), target_view.test_y);
                    }
                    auto& a = acc[{alpha, vartheta}];
                    a.lpm.push_back(auc(scores_to_vector(scores), target_view.test_y));
                    a.stl.push_back(stl_auc);
                    if (run == 0) {
                        std::ostringstream tag;
                        tag << "transfer_labeled" << labeled << "_alpha" << fmt(alpha)
                            << "_vartheta" << fmt(vartheta);
                        out.traces.emplace_back(tag.str(), joint.trace);
                    }
                }
            }
        }
        for (double alpha : config.alpha_grid) {
            for (double vartheta : config.vartheta_grid) {
                const auto& a = acc[{alpha, vartheta}];
                out.table.rows.push_back(
                    make_method_row("lpm-transfer", labeled, alpha, vartheta, a.lpm, a.stl));
                out.table.rows.push_back(make_stl_row(labeled, alpha, vartheta, a.stl));
            }
        }
    }
    return out;
}

ExperimentOutputs run_stl(const ExperimentConfig& config,
                          const std::vector<TaskDataset>& full_tasks) {
    if (full_tasks.empty()) throw std::invalid_argument("run_stl: need at least 1 task");
    require_fully_labeled(full_tasks);
    const int f0 = resolve_f0(config, full_tasks);
    const std::size_t n_tasks = full_tasks.size();
    Rng root(config.seed);

    ExperimentOutputs out;
    for (std::size_t lc_idx = 0; lc_idx < config.labeled_counts.size(); ++lc_idx) {
        const int labeled = config.labeled_counts[lc_idx];
        std::map<std::pair<double, double>, RunAccumulator> acc;
        for (int run = 0; run < config.runs; ++run) {
            std::vector<SplitView> views;
            for (std::size_t m = 0; m < n_tasks; ++m) {
                Rng split_rng = root.substream(lc_idx).substream(
                    static_cast<std::uint64_t>(run) * n_tasks + m);
                const SplitIndices split =
                    stratified_split(full_tasks[m], config.train_fraction, labeled, split_rng);
                views.push_back(make_split_view(full_tasks[m], split, config.normalize));
            }
            const std::uint64_t fit_seed = derived_seed(root, 3000 + lc_idx, run);
            for (double alpha : config.alpha_grid) {
                for (double vartheta : config.vartheta_grid) {
                    const Hyperparams hyper =
                        Hyperparams::from_regularizers(alpha, vartheta, config.eta, f0);
                    std::vector<double> task_aucs;
                    for (std::size_t m = 0; m < n_tasks; ++m) {
                        const FitResult single = fit_stl(views[m].train, hyper,
                                                         fit_options(config, fit_seed + m + 1));
                        const Eigen::VectorXd scores =
                            predict_scores(single.params, hyper, 0, views[m].test_x);
                        task_aucs.push_back(auc(scores_to_vector(scores), views[m].test_y));
                    }
                    acc[{alpha, vartheta}].stl.push_back(mean_of(task_aucs));
                }
            }
        }
        for (double alpha : config.alpha_grid) {
            for (double vartheta : config.vartheta_grid) {
                out.table.rows.push_back(
                    make_stl_row(labeled, alpha, vartheta, acc[{alpha, vartheta}].stl));
            }
        }
    }
    return out;
}

CvChoice cross_validate(const ExperimentConfig& config,
                        const std::vector<TaskDataset>& train_tasks, Rng& rng) {
    if (config.alpha_grid.empty() || config.vartheta_grid.empty())
        throw std::invalid_argument("cross_validate: grids must be non-empty");
    if (config.cv_folds < 2) throw std::invalid_argument("cross_validate: need >= 2 folds");
    const int k = config.cv_folds;
    const int f0 = resolve_f0(config, train_tasks);

    // Stratified fold assignment over each task's labeled examples.
    std::vector<std::vector<int>> fold_of(train_tasks.size());
    for (std::size_t m = 0; m < train_tasks.size(); ++m) {
        fold_of[m].assign(static_cast<std::size_t>(train_tasks[m].size()), -1);
        std::vector<int> pos, neg;
        for (int i = 0; i < train_tasks[m].size(); ++i) {
            if (!train_tasks[m].labels[i].has_value()) continue;
            (*train_tasks[m].labels[i] == 1 ? pos : neg).push_back(i);
        }
        Rng fold_rng = rng.substream(m);
        shuffle(pos, fold_rng);
        shuffle(neg, fold_rng);
        for (std::size_t i = 0; i < pos.size(); ++i) fold_of[m][pos[i]] = static_cast<int>(i) % k;
        for (std::size_t i = 0; i < neg.size(); ++i) fold_of[m][neg[i]] = static_cast<int>(i) % k;
    }

    CvChoice best;
    bool have_best = false;
    const std::uint64_t fit_seed = rng.substream(9999).next_u64();
    for (double alpha : config.alpha_grid) {
        for (double vartheta : config.vartheta_grid) {
            const Hyperparams hyper =
                Hyperparams::from_regularizers(alpha, vartheta, config.eta, f0);
            std::vector<double> fold_aucs;
            for (int fold = 0; fold < k; ++fold) {
                // Hide the fold's labels, fit, score the held-out examples.
                std::vector<TaskDataset> masked = train_tasks;
                for (std::size_t m = 0; m < masked.size(); ++m)
                    for (int i = 0; i < masked[m].size(); ++i)
                        if (fold_of[m][i] == fold) masked[m].labels[i] = std::nullopt;
                const FitResult res = fit(masked, hyper, fit_options(config, fit_seed));
                std::vector<double> task_aucs;
                for (std::size_t m = 0; m < masked.size(); ++m) {
                    std::vector<double> scores;
                    std::vector<int> labels;
                    const Eigen::VectorXd all_scores = predict_scores(
                        res.params, hyper, static_cast<int>(m), train_tasks[m].x);
                    for (int i = 0; i < train_tasks[m].size(); ++i) {
                        if (fold_of[m][i] == fold) {
                            scores.push_back(all_scores(i));
                            labels.push_back(*train_tasks[m].labels[i]);
                        }
                    }
                    const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
                    const bool has_neg = std::count(labels.begin(), labels.end(), -1) > 0;
                    if (!has_pos || !has_neg) {
                        std::ostringstream os;
                        os << "fold " << fold << ", task " << m
                           << ": single-class validation set skipped";
                        best.warnings.push_back(os.str());
                        continue;
                    }
                    task_aucs.push_back(auc(scores, labels));
                }
                if (task_aucs.empty()) {
                    std::ostringstream os;
                    os << "fold " << fold << " skipped entirely";
                    best.warnings.push_back(os.str());
                    continue;
                }
                fold_aucs.push_back(mean_of(task_aucs));
            }
            if (fold_aucs.empty())
                throw DataError("cross_validate: every fold was skipped (single-class folds)");
            const double score = mean_of(fold_aucs);
            const bool better =
                !have_best || score > best.mean_auc ||
                (score == best.mean_auc &&
                 std::make_pair(alpha, vartheta) > std::make_pair(best.alpha, best.vartheta));
            if (better) {
                best.alpha = alpha;
                best.vartheta = vartheta;
                best.mean_auc = score;
                have_best = true;
            }
        }
    }
    return best;
}

void write_results_csv(const ResultTable& table, std::ostream& out) {
    out << "method,labeled_count,alpha,vartheta,mean_auc,std_auc,stl_mean_auc,"
           "improvement_vs_stl\n";
    for (const auto& r : table.rows) {
        out << r.method << ',' << r.labeled_count << ',' << fmt(r.alpha) << ','
            << fmt(r.vartheta) << ',' << fmt(r.mean_auc) << ',' << fmt(r.std_auc) << ','
            << fmt(r.stl_mean_auc) << ',' << fmt(r.improvement_vs_stl) << '\n';
    }
}

namespace {

struct SeriesKey {
    std::string method;
    double alpha;
    double vartheta;
    bool operator<(const SeriesKey& o) const {
        return std::tie(method, alpha, vartheta) < std::tie(o.method, o.alpha, o.vartheta);
    }
};

void write_plot_svg(const ResultTable& table, std::ostream& out) {
    std::map<SeriesKey, std::vector<std::pair<int, double>>> series;
    for (const auto& r : table.rows) {
        if (std::isnan(r.mean_auc)) continue;
        series[{r.method, r.alpha, r.vartheta}].emplace_back(r.labeled_count, r.mean_auc);
    }
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (auto& [key, pts] : series) {
        std::sort(pts.begin(), pts.end());
        for (const auto& [x, y] : pts) {
            lo_x = std::min(lo_x, static_cast<double>(x));
            hi_x = std::max(hi_x, static_cast<double>(x));
            lo_y = std::min(lo_y, y);
            hi_y = std::max(hi_y, y);
        }
    }
    if (hi_x <= lo_x) {
        lo_x -= 1.0;
        hi_x += 1.0;
    }
    if (hi_y <= lo_y) {
        lo_y -= 0.05;
        hi_y += 0.05;
    }
    const double w = 640, h = 480, ml = 70, mr = 160, mt = 30, mb = 50;
    auto px = [&](double x) { return ml + (x - lo_x) / (hi_x - lo_x) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - lo_y) / (hi_y - lo_y) * (h - mt - mb); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  ml, h - mb, w - mr, h - mb);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  ml, mt, ml, h - mb);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"13\">labeled examples per "
                  "task</text>\n",
                  ml + 100.0, h - 12.0);
    out << buf;
    std::snprintf(
        buf, sizeof(buf),
        "<text x=\"16\" y=\"%.2f\" font-size=\"13\" transform=\"rotate(-90 16 %.2f)\">mean "
        "AUC</text>\n",
        (mt + h - mb) / 2, (mt + h - mb) / 2);
    out << buf;
    for (int tick = 0; tick <= 4; ++tick) {
        const double xv = lo_x + (hi_x - lo_x) * tick / 4.0;
        const double yv = lo_y + (hi_y - lo_y) * tick / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"middle\">%s"
                      "</text>\n",
                      px(xv), h - mb + 16.0, fmt(xv, "%.4g").c_str());
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">%s"
                      "</text>\n",
                      ml - 6.0, py(yv) + 4.0, fmt(yv, "%.4g").c_str());
        out << buf;
    }
    int idx = 0;
    for (const auto& [key, pts] : series) {
        const char* color = palette[idx % 8];
        out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(static_cast<double>(x)), py(y));
            out << buf;
        }
        out << "\"/>\n";
        std::ostringstream label;
        label << key.method << " (alpha=" << fmt(key.alpha)
              << ", vartheta=" << fmt(key.vartheta) << ")";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                      w - mr + 8.0, mt + 16.0 + 16.0 * idx, color, label.str().c_str());
        out << buf;
        ++idx;
    }
    out << "</svg>\n";
}

}  // namespace

void emit_outputs(const ExperimentOutputs& outputs, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

    {
        std::ofstream f(out_dir + "/results.csv");
        if (!f) throw DataError("cannot write " + out_dir + "/results.csv");
        write_results_csv(outputs.table, f);
    }
    for (const auto& [tag, trace] : outputs.traces) {
        std::string safe = tag;
        for (char& c : safe)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                  c == '.'))
                c = '_';
        std::ofstream f(out_dir + "/trace_" + safe + ".csv");
        if (!f) throw DataError("cannot write trace csv for " + tag);
        write_trace_csv(trace, f);
    }
    if (!outputs.table.rows.empty()) {
        std::ofstream f(out_dir + "/plot_auc_vs_labeled.svg");
        if (!f) throw DataError("cannot write plot");
        write_plot_svg(outputs.table, f);
    }
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ParseError("config: unknown key '" + key + "' in " + where);
    }
}

GenConfig parse_synth(const json& j) {
    reject_unknown(j,
                   {"gamma", "lambda", "eta", "f0", "task_dims", "n_per_task",
                    "labeled_fraction", "seed"},
                   "synth");
    GenConfig g;
    g.hyper = Hyperparams::from_rates(j.value("gamma", 4.0), j.value("lambda", 1.0),
                                      j.value("eta", 0.25), j.value("f0", 5));
    g.task_dims = j.value("task_dims", std::vector<int>{8, 10});
    g.n_per_task = j.value("n_per_task", std::vector<int>{200, 200});
    if (j.contains("labeled_fraction") && j["labeled_fraction"].is_number()) {
        g.labeled_fraction.assign(g.task_dims.size(), j["labeled_fraction"].get<double>());
    } else {
        g.labeled_fraction = j.value("labeled_fraction", std::vector<double>{});
        if (g.labeled_fraction.empty()) g.labeled_fraction.assign(g.task_dims.size(), 0.5);
    }
    g.seed = j.value("seed", std::uint64_t{0});
    return g;
}

BoundConfig parse_bound(const json& j) {
    reject_unknown(j,
                   {"f0", "s", "tasks", "examples_per_task", "dim_per_task", "density", "eta",
                    "a", "seed"},
                   "bound");
    BoundConfig b;
    b.f0 = j.value("f0", b.f0);
    b.s = j.value("s", b.s);
    b.tasks = j.value("tasks", b.tasks);
    b.examples_per_task = j.value("examples_per_task", b.examples_per_task);
    b.dim_per_task = j.value("dim_per_task", b.dim_per_task);
    b.density = j.value("density", b.density);
    b.eta = j.value("eta", b.eta);
    b.a = j.value("a", b.a);
    b.seed = j.value("seed", b.seed);
    return b;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    try {
        reject_unknown(j,
                       {"mode", "tasks", "labeled_counts", "runs", "f0", "eta", "alpha_grid",
                        "vartheta_grid", "cv_folds", "seed", "out_dir", "normalize",
                        "train_fraction", "source", "target", "source_labeled_cap", "em_tol",
                        "em_max_iters", "update_latent_distribution", "classifier_cross_term",
                        "synth", "bound", "bound_trials"},
                       "top level");
        ExperimentConfig c;
        c.mode = j.value("mode", std::string{});
        if (j.contains("tasks")) {
            for (const auto& t : j["tasks"]) {
                TaskSource src;
                if (t.is_string()) {
                    src.path = t.get<std::string>();
                } else {
                    reject_unknown(t, {"path", "label_column"}, "tasks[]");
                    src.path = t.at("path").get<std::string>();
                    src.label_column = t.value("label_column", src.label_column);
                }
                c.tasks.push_back(std::move(src));
            }
        }
        c.labeled_counts = j.value("labeled_counts", c.labeled_counts);
        c.runs = j.value("runs", c.runs);
        c.f0 = j.value("f0", c.f0);
        c.eta = j.value("eta", c.eta);
        c.alpha_grid = j.value("alpha_grid", c.alpha_grid);
        c.vartheta_grid = j.value("vartheta_grid", c.vartheta_grid);
        c.cv_folds = j.value("cv_folds", c.cv_folds);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.normalize = j.value("normalize", c.normalize);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.source = j.value("source", c.source);
        c.target = j.value("target", c.target);
        c.source_labeled_cap = j.value("source_labeled_cap", c.source_labeled_cap);
        c.em_tol = j.value("em_tol", c.em_tol);
        c.em_max_iters = j.value("em_max_iters", c.em_max_iters);
        c.update_latent_distribution =
            j.value("update_latent_distribution", c.update_latent_distribution);
        c.classifier_cross_term = j.value("classifier_cross_term", c.classifier_cross_term);
        c.synth = parse_synth(j.contains("synth") ? j["synth"] : json::object());
        if (j.contains("bound")) c.bound = parse_bound(j["bound"]);
        c.bound_trials = j.value("bound_trials", c.bound_trials);
        return c;
    } catch (const json::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
}

}  // namespace lpm
