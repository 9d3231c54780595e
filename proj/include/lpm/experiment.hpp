#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lpm/bound.hpp"
#include "lpm/em.hpp"
#include "lpm/rng.hpp"
#include "lpm/sampler.hpp"
#include "lpm/types.hpp"

namespace lpm {

struct TaskSource {
    std::string path;
    std::string label_column = "label";
};

/// Everything a CLI run needs; maps one-to-one onto the JSON config file.
struct ExperimentConfig {
    std::string mode;  // mtl | transfer | stl | synth | verify-bound | fit | cv
    std::vector<TaskSource> tasks;
    std::vector<int> labeled_counts = {50};
    int runs = 50;
    int f0 = 0;  // 0 = smallest task dimensionality
    double eta = 1e-3;
    std::vector<double> alpha_grid = {0.1};
    std::vector<double> vartheta_grid = {1.0};
    int cv_folds = 5;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool normalize = true;
    double train_fraction = 0.7;
    int source = 0;
    int target = 1;
    long source_labeled_cap = -1;  // -1 = label every source example
    double em_tol = 1e-6;
    int em_max_iters = 500;
    bool update_latent_distribution = false;
    bool classifier_cross_term = true;
    GenConfig synth;
    BoundConfig bound;
    int bound_trials = 200;
};

/// Parse the JSON config file; unknown keys are rejected to catch typos.
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
    std::string method;  // lpm-mtl, lpm-transfer, stl
    int labeled_count = 0;
    double alpha = 0.0;
    double vartheta = 0.0;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double stl_mean_auc = 0.0;         // NaN on stl rows
    double improvement_vs_stl = 0.0;   // mean_auc - stl_mean_auc; NaN on stl rows
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

void write_results_csv(const ResultTable& table, std::ostream& out);

/// Train/test indices of one run: test never intersects train; the labeled
/// subset is drawn stratified from train and the rest of train enters as
/// unlabeled.
struct SplitIndices {
    std::vector<int> labeled;
    std::vector<int> unlabeled;
    std::vector<int> test;
};

/// Stratified split of a fully labeled task. Throws DataError when
/// labeled_count exceeds the training examples available.
SplitIndices stratified_split(const TaskDataset& full, double train_fraction, int labeled_count,
                              Rng& rng);

/// Training view (features of train examples, labels only on the labeled
/// subset) and test view of one split; features z-scored with statistics of
/// the training examples when normalize is set.
struct SplitView {
    TaskDataset train;
    Eigen::MatrixXd test_x;
    std::vector<int> test_y;
};
SplitView make_split_view(const TaskDataset& full, const SplitIndices& split, bool normalize);

struct ExperimentOutputs {
    ResultTable table;
    std::vector<std::pair<std::string, FitTrace>> traces;  // (tag, trace)
};

/// Joint fit on all tasks vs. per-task single-task baseline on identical
/// splits, swept over labeled counts and the (alpha, vartheta) grid.
ExperimentOutputs run_mtl(const ExperimentConfig& config,
                          const std::vector<TaskDataset>& full_tasks);

/// Source/target transfer: source enters fully labeled (or capped), target
/// keeps the swept labeled count; evaluation on the target test split only.
ExperimentOutputs run_transfer(const ExperimentConfig& config,
                               const std::vector<TaskDataset>& full_tasks);

/// Single-task results alone (the baseline as its own experiment).
ExperimentOutputs run_stl(const ExperimentConfig& config,
                          const std::vector<TaskDataset>& full_tasks);

struct CvChoice {
    double alpha = 0.0;
    double vartheta = 0.0;
    double mean_auc = 0.0;
    std::vector<std::string> warnings;
};

/// k-fold cross-validation over the labeled part of the training tasks;
/// selects the grid point with the best mean validation AUC, ties broken
/// toward the (lexicographically) larger (alpha, vartheta).
CvChoice cross_validate(const ExperimentConfig& config, const std::vector<TaskDataset>& train_tasks,
                        Rng& rng);

/// Write results.csv, per-trace CSVs and the AUC-vs-labeled-count SVG plot
/// (one polyline per method/grid series) into out_dir. Re-emission of an
/// identical table is byte-identical.
void emit_outputs(const ExperimentOutputs& outputs, const std::string& out_dir);

}  // namespace lpm
