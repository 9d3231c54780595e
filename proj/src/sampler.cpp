#include "lpm/sampler.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lpm/errors.hpp"

namespace lpm {

void ensure_valid(const GenConfig& c) {
    const std::size_t m = c.task_dims.size();
    if (m < 1) throw std::invalid_argument("GenConfig: need at least one task");
    if (c.n_per_task.size() != m || c.labeled_fraction.size() != m)
        throw std::invalid_argument("GenConfig: per-task lists must have equal length");
    for (std::size_t i = 0; i < m; ++i) {
        if (c.task_dims[i] < 1) throw std::invalid_argument("GenConfig: task_dims must be >= 1");
        if (c.n_per_task[i] < 1) throw std::invalid_argument("GenConfig: n_per_task must be >= 1");
        if (c.labeled_fraction[i] < 0.0 || c.labeled_fraction[i] > 1.0)
            throw std::invalid_argument("GenConfig: labeled_fraction must lie in [0, 1]");
    }
}

ClassifierDraw sample_classifier(const Hyperparams& hyper, Rng& rng) {
    if (!(hyper.lambda > 0.0))
        throw std::invalid_argument("sample_classifier: lambda must be > 0");
    ClassifierDraw out;
    out.u.resize(hyper.f0);
    out.w.resize(hyper.f0);
    for (int j = 0; j < hyper.f0; ++j) {
        out.u(j) = rng.exponential(hyper.lambda / 2.0);
        out.w(j) = std::sqrt(out.u(j)) * rng.normal();
    }
    return out;
}

TransformDraw sample_transform(int d_m, const Hyperparams& hyper, Rng& rng) {
    if (d_m < 1) throw std::invalid_argument("sample_transform: d_m must be >= 1");
    if (!(hyper.gamma > 0.0))
        throw std::invalid_argument("sample_transform: gamma must be > 0");
    TransformDraw out;
    out.tau.resize(d_m, hyper.f0);
    out.f.resize(d_m, hyper.f0);
    for (int k = 0; k < d_m; ++k) {
        for (int j = 0; j < hyper.f0; ++j) {
            out.tau(k, j) = rng.exponential(hyper.gamma / 2.0);
            out.f(k, j) = std::sqrt(out.tau(k, j)) * rng.normal();
        }
    }
    return out;
}

TaskDraw sample_task(const LpmParams& params, const Hyperparams& hyper, int task_index,
                     int n_m, double labeled_fraction, Rng& rng) {
    ensure_valid(params);
    if (task_index < 0 || task_index >= params.task_count())
        throw std::invalid_argument("sample_task: task_index out of range");
    if (n_m < 1) throw std::invalid_argument("sample_task: n_m must be >= 1");
    if (labeled_fraction < 0.0 || labeled_fraction > 1.0)
        throw std::invalid_argument("sample_task: labeled_fraction must lie in [0, 1]");

    const int f0 = params.f0();
    const auto& f = params.transforms[task_index];
    const auto& d = params.translations[task_index];
    const int dim = static_cast<int>(f.rows());

    Eigen::LLT<Eigen::MatrixXd> llt(params.sigma);
    if (llt.info() != Eigen::Success) throw NumericError("sample_task: sigma not PD");
    const Eigen::MatrixXd chol = llt.matrixL();
    const double noise_sd = std::sqrt(hyper.eta);

    TaskDraw out;
    out.s.resize(f0, n_m);
    out.data.x.resize(dim, n_m);
    out.z.resize(n_m);
    out.y.resize(n_m);
    Eigen::VectorXd e(f0);
    for (int i = 0; i < n_m; ++i) {
        for (int j = 0; j < f0; ++j) e(j) = rng.normal();
        out.s.col(i) = params.mu + chol * e;
        Eigen::VectorXd x = f * out.s.col(i) + d;
        for (int k = 0; k < dim; ++k) x(k) += noise_sd * rng.normal();
        out.data.x.col(i) = x;
        out.z(i) = params.w.dot(out.s.col(i)) + params.b + rng.normal();
        out.y[i] = out.z(i) >= 0.0 ? 1 : -1;  // tie at z = 0 goes to +1
    }

    const int n_labeled =
        static_cast<int>(std::llround(labeled_fraction * static_cast<double>(n_m)));
    std::vector<int> order(n_m);
    for (int i = 0; i < n_m; ++i) order[i] = i;
    for (int i = 0; i < n_labeled; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_m - i)));
        std::swap(order[i], order[j]);
    }
    out.data.labels.assign(n_m, std::nullopt);
    for (int i = 0; i < n_labeled; ++i) out.data.labels[order[i]] = out.y[order[i]];
    return out;
}

ParamsDraw sample_params(const GenConfig& config, Rng& rng) {
    ensure_valid(config);
    const int f0 = config.hyper.f0;
    ParamsDraw out;
    out.params.mu = Eigen::VectorXd::Zero(f0);
    out.params.sigma = Eigen::MatrixXd::Identity(f0, f0);
    out.params.b = 0.0;
    ClassifierDraw cd = sample_classifier(config.hyper, rng);
    out.params.w = cd.w;
    out.scales.u = cd.u;
    for (int m = 0; m < config.task_count(); ++m) {
        TransformDraw td = sample_transform(config.task_dims[m], config.hyper, rng);
        out.params.transforms.push_back(td.f);
        out.params.translations.push_back(Eigen::VectorXd::Zero(config.task_dims[m]));
        out.scales.tau.push_back(td.tau);
    }
    return out;
}

ProblemDraw sample_problem(const GenConfig& config) {
    ensure_valid(config);
    Rng root(config.seed);
    Rng param_stream = root.substream(0);
    ParamsDraw pd = sample_params(config, param_stream);
    ProblemDraw out;
    out.params = std::move(pd.params);
    out.scales = std::move(pd.scales);
    for (int m = 0; m < config.task_count(); ++m) {
        Rng task_stream = root.substream(static_cast<std::uint64_t>(m) + 1);
        out.tasks.push_back(sample_task(out.params, config.hyper, m, config.n_per_task[m],
                                        config.labeled_fraction[m], task_stream));
    }
    return out;
}

Eigen::VectorXd sample_sparse_weights(int f0, int nonzeros, Rng& rng) {
    if (nonzeros < 0 || nonzeros > f0)
        throw std::invalid_argument("sample_sparse_weights: nonzeros out of range");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(f0);
    std::vector<int> order(f0);
    for (int i = 0; i < f0; ++i) order[i] = i;
    for (int i = 0; i < nonzeros; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(f0 - i)));
        std::swap(order[i], order[j]);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        w(order[i]) = sign * rng.uniform(0.5, 1.5);
    }
    return w;
}

Eigen::MatrixXd sample_sparse_transform(int d, int f0, double density, Rng& rng) {
    if (d < f0) throw std::invalid_argument("sample_sparse_transform: need d >= f0 for full column rank");
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("sample_sparse_transform: density must lie in (0, 1]");
    for (int attempt = 0; attempt < 256; ++attempt) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(d, f0);
        for (int j = 0; j < f0; ++j) {
            int filled = 0;
            for (int k = 0; k < d; ++k) {
                if (rng.uniform() < density) {
                    f(k, j) = rng.normal();
                    ++filled;
                }
            }
            if (filled == 0) f(static_cast<int>(rng.uniform_int(d)), j) = rng.normal();
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f);
        if (qr.rank() == f0) return f;
    }
    throw NumericError("sample_sparse_transform: failed to draw a full-rank sparse matrix");
}

}  // namespace lpm
