#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lpm/csv.hpp"
#include "lpm/errors.hpp"
#include "lpm/experiment.hpp"
#include "lpm/predict.hpp"
#include "lpm/serialize.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> runs;
    std::optional<int> labeled;
    std::optional<double> alpha;
    std::optional<double> vartheta;
    std::optional<int> f0;
    std::optional<double> eta;
    std::optional<bool> normalize;
};

struct ModeArgs {
    std::string config_path;
    Overrides over;
};

void add_common_flags(CLI::App* cmd, ModeArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON experiment config")->required();
    cmd->add_option("--seed", args.over.seed, "override config seed");
    cmd->add_option("--out", args.over.out, "override output directory");
    cmd->add_option("--runs", args.over.runs, "override run count");
    cmd->add_option("--labeled", args.over.labeled, "override labeled count (single value)");
    cmd->add_option("--alpha", args.over.alpha, "override alpha grid (single value)");
    cmd->add_option("--vartheta", args.over.vartheta, "override vartheta grid (single value)");
    cmd->add_option("--f0", args.over.f0, "override latent dimensionality");
    cmd->add_option("--eta", args.over.eta, "override observation noise variance");
    cmd->add_flag("--normalize,!--no-normalize", args.over.normalize,
                  "z-score features with training statistics");
}

lpm::ExperimentConfig resolve(const ModeArgs& args) {
    lpm::ExperimentConfig c = lpm::load_config(args.config_path);
    if (args.over.seed) c.seed = *args.over.seed;
    if (args.over.out) c.out_dir = *args.over.out;
    if (args.over.runs) c.runs = *args.over.runs;
    if (args.over.labeled) c.labeled_counts = {*args.over.labeled};
    if (args.over.alpha) c.alpha_grid = {*args.over.alpha};
    if (args.over.vartheta) c.vartheta_grid = {*args.over.vartheta};
    if (args.over.f0) c.f0 = *args.over.f0;
    if (args.over.eta) c.eta = *args.over.eta;
    if (args.over.normalize) c.normalize = *args.over.normalize;
    return c;
}

std::vector<lpm::TaskDataset> load_tasks(const lpm::ExperimentConfig& c) {
    if (c.tasks.empty()) throw lpm::DataError("config lists no task files");
    std::vector<lpm::TaskDataset> tasks;
    for (const auto& src : c.tasks) {
        lpm::CsvSchema schema;
        schema.label_column = src.label_column;
        tasks.push_back(lpm::ingest_csv(src.path, schema));
    }
    return tasks;
}

lpm::Hyperparams hyper_of(const lpm::ExperimentConfig& c,
                          const std::vector<lpm::TaskDataset>& tasks) {
    int f0 = c.f0;
    if (f0 <= 0) {
        f0 = tasks.front().dim();
        for (const auto& t : tasks) f0 = std::min(f0, t.dim());
    }
    return lpm::Hyperparams::from_regularizers(c.alpha_grid.front(), c.vartheta_grid.front(),
                                               c.eta, f0);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw lpm::DataError("cannot write " + path);
    f << text;
}

int run_fit(const lpm::ExperimentConfig& c) {
    auto tasks = load_tasks(c);
    const lpm::Hyperparams hyper = hyper_of(c, tasks);
    lpm::FitOptions opt;
    opt.tol = c.em_tol;
    opt.max_iters = c.em_max_iters;
    opt.update_latent_distribution = c.update_latent_distribution;
    opt.classifier_cross_term = c.classifier_cross_term;
    opt.seed = c.seed;
    const lpm::FitResult res = lpm::fit(tasks, hyper, opt);
    std::filesystem::create_directories(c.out_dir);
    lpm::save_params_file(res.params, c.out_dir + "/params.lpm");
    std::ofstream trace(c.out_dir + "/trace.csv");
    lpm::write_trace_csv(res.trace, trace);
    for (std::size_t m = 0; m < tasks.size(); ++m) {
        std::ofstream scores(c.out_dir + "/scores_task_" + std::to_string(m) + ".csv");
        lpm::write_scores_csv(
            lpm::predict_scores(res.params, hyper, static_cast<int>(m), tasks[m].x),
            tasks[m].labels, scores);
    }
    std::cout << "fit: " << res.trace.iterations.size() << " iterations, converged="
              << (res.trace.converged ? "yes" : "no") << ", log_posterior="
              << (res.trace.iterations.empty() ? 0.0
                                               : res.trace.iterations.back().log_posterior)
              << "\n";
    if (!res.trace.warning.empty()) std::cerr << "warning: " << res.trace.warning << "\n";
    return 0;
}

int run_experiment(const lpm::ExperimentConfig& c, const std::string& mode) {
    auto tasks = load_tasks(c);
    lpm::ExperimentOutputs out;
    if (mode == "mtl")
        out = lpm::run_mtl(c, tasks);
    else if (mode == "transfer")
        out = lpm::run_transfer(c, tasks);
    else
        out = lpm::run_stl(c, tasks);
    lpm::emit_outputs(out, c.out_dir);
    std::cout << mode << ": wrote " << out.table.rows.size() << " result rows to " << c.out_dir
              << "\n";
    return 0;
}

int run_synth(const lpm::ExperimentConfig& c) {
    lpm::GenConfig g = c.synth;
    g.seed = c.seed;
    const lpm::ProblemDraw draw = lpm::sample_problem(g);
    std::filesystem::create_directories(c.out_dir);
    lpm::save_params_file(draw.params, c.out_dir + "/true_params.lpm");
    for (std::size_t m = 0; m < draw.tasks.size(); ++m) {
        std::ofstream f(c.out_dir + "/task_" + std::to_string(m) + ".csv");
        if (!f) throw lpm::DataError("cannot write task csv");
        lpm::write_task_csv(draw.tasks[m].data, f);
    }
    std::cout << "synth: wrote " << draw.tasks.size() << " task files to " << c.out_dir << "\n";
    return 0;
}

int run_verify_bound(const lpm::ExperimentConfig& c) {
    lpm::BoundConfig b = c.bound;
    b.seed = c.seed;
    const lpm::VerifySummary summary = lpm::verify_error_bound(b, c.bound_trials);
    std::filesystem::create_directories(c.out_dir);
    std::ofstream f(c.out_dir + "/bound_trials.csv");
    if (!f) throw lpm::DataError("cannot write bound_trials.csv");
    lpm::write_bound_csv(summary, f);
    std::cout << "verify-bound: fraction held " << summary.empirical_fraction
              << " vs p_e " << summary.p_e << (summary.vacuous ? " (vacuous bound)" : "")
              << "\n";
    return 0;
}

int run_cv(const lpm::ExperimentConfig& c) {
    auto tasks = load_tasks(c);
    lpm::Rng rng(c.seed);
    const lpm::CvChoice choice = lpm::cross_validate(c, tasks, rng);
    std::filesystem::create_directories(c.out_dir);
    std::ostringstream os;
    os << "alpha,vartheta,mean_auc\n"
       << choice.alpha << ',' << choice.vartheta << ',' << choice.mean_auc << '\n';
    write_text(c.out_dir + "/cv.csv", os.str());
    for (const auto& w : choice.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "cv: alpha=" << choice.alpha << " vartheta=" << choice.vartheta
              << " mean_auc=" << choice.mean_auc << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space multitask probit learning"};
    app.require_subcommand(1);

    std::map<std::string, ModeArgs> args;
    for (const char* name : {"fit", "mtl", "transfer", "stl", "synth", "verify-bound", "cv"}) {
        auto* cmd = app.add_subcommand(name);
        add_common_flags(cmd, args[name]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    try {
        const lpm::ExperimentConfig config = resolve(args[mode]);
        if (mode == "fit") return run_fit(config);
        if (mode == "synth") return run_synth(config);
        if (mode == "verify-bound") return run_verify_bound(config);
        if (mode == "cv") return run_cv(config);
        return run_experiment(config, mode);
    } catch (const lpm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const lpm::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lpm::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
