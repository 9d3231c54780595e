#include "lpm/em.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "lpm/normal.hpp"
#include "lpm/rng.hpp"
#include "lpm/truncated_normal.hpp"

namespace lpm {

namespace {

thread_local std::uint64_t g_flops = 0;

inline void count_flops(std::uint64_t n) { g_flops += n; }

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Shared precomputation for the label-free conditional law of (s, z) given x.
struct QPart {
    Eigen::MatrixXd sigma_inv;
    Eigen::MatrixXd a_q;    // sigma_inv + F'F/eta (precision of s | x)
    Eigen::MatrixXd q;      // a_q^{-1}
    Eigen::VectorXd qw;     // Q w
    double rho = 1.0;       // 1 + w' Q w
    Eigen::VectorXd zeta;   // per-example response mean
    Eigen::MatrixXd xc;     // x - d
};

QPart compute_q_part(const LpmParams& params, const Hyperparams& hyper, int task_index,
                     const Eigen::MatrixXd& x) {
    const int f0 = params.f0();
    const auto& f = params.transforms[task_index];
    const auto& d = params.translations[task_index];
    if (x.rows() != f.rows()) {
        std::ostringstream os;
        os << "task " << task_index << ": feature dimension " << x.rows()
           << " does not match transform rows " << f.rows();
        throw std::invalid_argument(os.str());
    }
    const auto dim = f.rows();
    const auto n = x.cols();

    Eigen::LLT<Eigen::MatrixXd> sigma_llt(params.sigma);
    if (sigma_llt.info() != Eigen::Success)
        throw NumericError("e_step: sigma is not positive definite");
    QPart out;
    out.sigma_inv = sigma_llt.solve(Eigen::MatrixXd::Identity(f0, f0));

    Eigen::MatrixXd ftf(f0, f0);
    ftf.noalias() = f.transpose() * f;
    count_flops(static_cast<std::uint64_t>(dim) * f0 * f0);
    out.a_q = out.sigma_inv + ftf / hyper.eta;
    Eigen::LLT<Eigen::MatrixXd> q_llt(out.a_q);
    if (q_llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "e_step: posterior precision not PD for task " << task_index;
        throw NumericError(os.str());
    }
    out.q = q_llt.solve(Eigen::MatrixXd::Identity(f0, f0));
    count_flops(2ULL * f0 * f0 * f0);

    out.qw.noalias() = out.q * params.w;
    out.rho = 1.0 + params.w.dot(out.qw);

    out.xc = x.colwise() - d;
    Eigen::VectorXd fqw(dim);
    fqw.noalias() = f * out.qw;
    const double base =
        params.w.dot(params.mu) + params.b - fqw.dot(f * params.mu) / hyper.eta;
    out.zeta.resize(n);
    out.zeta.noalias() = out.xc.transpose() * fqw / hyper.eta;
    out.zeta.array() += base;
    count_flops(static_cast<std::uint64_t>(dim) * n);
    return out;
}

std::uint64_t total_labeled(const std::vector<TaskDataset>& data) {
    std::uint64_t n = 0;
    for (const auto& t : data) n += static_cast<std::uint64_t>(t.labeled_count());
    return n;
}

}  // namespace

std::uint64_t flop_counter() { return g_flops; }
void reset_flop_counter() { g_flops = 0; }

EStepMoments e_step_task(const LpmParams& params, const Hyperparams& hyper,
                         const TaskDataset& task, int task_index) {
    if (task_index < 0 || task_index >= params.task_count())
        throw std::invalid_argument("e_step_task: task_index out of range");
    const int f0 = params.f0();
    const auto& f = params.transforms[task_index];
    const auto n = task.x.cols();

    QPart qp = compute_q_part(params, hyper, task_index, task.x);

    EStepMoments out;
    out.q = qp.q;
    Eigen::MatrixXd a_r = qp.a_q;
    a_r.noalias() += params.w * params.w.transpose();
    Eigen::LLT<Eigen::MatrixXd> r_llt(a_r);
    if (r_llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "e_step: labeled posterior precision not PD for task " << task_index;
        throw NumericError(os.str());
    }
    out.r = r_llt.solve(Eigen::MatrixXd::Identity(f0, f0));
    count_flops(2ULL * f0 * f0 * f0);

    out.zeta = qp.zeta;
    out.rho = Eigen::VectorXd::Constant(n, qp.rho);
    out.xi.resize(n);
    out.beta.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (task.labels[i].has_value()) {
            const TruncatedMoments tm =
                truncated_normal_moments(qp.zeta(i), qp.rho, *task.labels[i]);
            out.xi(i) = tm.xi;
            out.beta(i) = tm.beta;
        } else {
            out.xi(i) = qp.zeta(i);
            out.beta(i) = qp.rho;
        }
    }

    // phi_i = R (sigma^{-1} mu + w (xi_i - b) + F'(x_i - d)/eta)
    Eigen::MatrixXd proj(f0, n);
    proj.noalias() = f.transpose() * qp.xc / hyper.eta;
    count_flops(static_cast<std::uint64_t>(f.rows()) * f0 * n);
    out.phi.resize(f0, n);
    out.phi.noalias() = out.r * proj;
    count_flops(static_cast<std::uint64_t>(f0) * f0 * n);
    const Eigen::VectorXd r_base = out.r * (qp.sigma_inv * params.mu);
    out.phi.colwise() += r_base;
    const Eigen::VectorXd rw = out.r * params.w;
    out.phi.noalias() += rw * (out.xi.array() - params.b).matrix().transpose();
    count_flops(static_cast<std::uint64_t>(f0) * n);
    return out;
}

Eigen::VectorXd reweighted_l1_minimize(const Eigen::MatrixXd& quad, const Eigen::VectorXd& lin,
                                       double penalty, Eigen::VectorXd start,
                                       const ReweightOptions& opt) {
    const auto n = start.size();
    if (quad.rows() != n || quad.cols() != n || lin.size() != n)
        throw std::invalid_argument("reweighted_l1_minimize: dimension mismatch");
    if (penalty < 0.0)
        throw std::invalid_argument("reweighted_l1_minimize: penalty must be >= 0");
    Eigen::VectorXd f = std::move(start);
    Eigen::VectorXd v(n), rhs(n), sol(n), f_new(n);
    Eigen::MatrixXd m(n, n);
    for (int iter = 0; iter < opt.max_iters; ++iter) {
        v = f.cwiseAbs().cwiseSqrt();
        m = v.asDiagonal() * quad * v.asDiagonal();
        m.diagonal().array() += penalty;
        rhs = v.cwiseProduct(lin);
        count_flops(static_cast<std::uint64_t>(n) * n * n + 2ULL * n * n);
        if (penalty > 0.0) {
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() == Eigen::Success) {
                sol = llt.solve(rhs);
            } else {
                sol = m.completeOrthogonalDecomposition().solve(rhs);
            }
        } else {
            // Documented fallback: with a zero penalty and zero weights the
            // system is singular; minimal-norm pseudo-inverse solution.
            sol = m.completeOrthogonalDecomposition().solve(rhs);
        }
        f_new = v.cwiseProduct(sol);
        const double change = (f_new - f).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, f_new.cwiseAbs().maxCoeff());
        f.swap(f_new);
        if (change <= opt.tol * scale) break;
    }
    return f;
}

LatentUpdate m_step_latent(const std::vector<EStepMoments>& moments, const LpmParams& params) {
    if (moments.empty()) throw std::invalid_argument("m_step_latent: no moments");
    const int f0 = params.f0();
    std::uint64_t n_a = 0;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(f0);
    for (const auto& m : moments) {
        mu += m.phi.rowwise().sum();
        n_a += static_cast<std::uint64_t>(m.phi.cols());
    }
    mu /= static_cast<double>(n_a);

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(f0, f0);
    for (const auto& m : moments) {
        const Eigen::MatrixXd centered = m.phi.colwise() - mu;
        s.noalias() += centered * centered.transpose();
        count_flops(static_cast<std::uint64_t>(f0) * f0 * centered.cols());
        const Eigen::VectorXd rw = m.r * params.w;
        s.noalias() += m.beta.sum() * (rw * rw.transpose());
        s += static_cast<double>(m.phi.cols()) * m.r;
    }
    s /= static_cast<double>(n_a);
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        const double tr = s.trace();
        const double jitter = tr > 0.0 ? 1e-10 * tr / f0 : 1e-12;
        s.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> retry(s);
        if (retry.info() != Eigen::Success)
            throw NumericError("m_step_latent: covariance update not PD even with jitter");
    }
    return {std::move(mu), std::move(s)};
}

DomainUpdate m_step_domain(const EStepMoments& moments, const TaskDataset& task,
                           const Hyperparams& hyper, const LpmParams& params, int task_index,
                           const ReweightOptions& opt) {
    if (task_index < 0 || task_index >= params.task_count())
        throw std::invalid_argument("m_step_domain: task_index out of range");
    const auto& f_old = params.transforms[task_index];
    const auto& phi = moments.phi;
    const auto n = phi.cols();
    const auto dim = f_old.rows();
    const int f0 = params.f0();

    DomainUpdate out;
    out.d = (task.x - f_old * phi).rowwise().mean();
    count_flops(static_cast<std::uint64_t>(dim) * f0 * n);

    Eigen::MatrixXd gamma1(f0, f0);
    gamma1.noalias() = phi * phi.transpose();
    count_flops(static_cast<std::uint64_t>(f0) * f0 * n);
    const Eigen::VectorXd rw = moments.r * params.w;
    gamma1.noalias() += moments.beta.sum() * (rw * rw.transpose());
    gamma1 += static_cast<double>(n) * moments.r;
    gamma1 = 0.5 * (gamma1 + gamma1.transpose()).eval();

    // pull(:, k) = sum_i phi_i (x_ik - d_k)
    Eigen::MatrixXd pull(f0, dim);
    pull.noalias() = phi * (task.x.colwise() - out.d).transpose();
    count_flops(static_cast<std::uint64_t>(f0) * dim * n);

    out.f.resize(dim, f0);
    for (Eigen::Index k = 0; k < dim; ++k) {
        out.f.row(k) =
            reweighted_l1_minimize(gamma1, pull.col(k), hyper.alpha, f_old.row(k), opt)
                .transpose();
    }
    return out;
}

ClassifierUpdate m_step_classifier(const std::vector<EStepMoments>& moments,
                                   const std::vector<TaskDataset>& data, const LpmParams& params,
                                   const Hyperparams& hyper, bool cross_term,
                                   const ReweightOptions& opt) {
    if (moments.size() != data.size())
        throw std::invalid_argument("m_step_classifier: moments/data size mismatch");
    const std::uint64_t n_l = total_labeled(data);
    if (n_l == 0) throw std::invalid_argument("classifier update requires labels");

    const int f0 = params.f0();
    Eigen::MatrixXd gamma2 = Eigen::MatrixXd::Zero(f0, f0);
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(f0);
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto labeled = data[m].labeled_indices();
        if (labeled.empty()) continue;
        const auto& mom = moments[m];
        double beta_sum = 0.0;
        for (int i : labeled) {
            gamma2.noalias() += mom.phi.col(i) * mom.phi.col(i).transpose();
            lin += mom.phi.col(i) * (mom.xi(i) - params.b);
            beta_sum += mom.beta(i);
        }
        count_flops(static_cast<std::uint64_t>(f0) * f0 * labeled.size());
        gamma2 += static_cast<double>(labeled.size()) * mom.r;
        const Eigen::VectorXd rw = mom.r * params.w;
        gamma2.noalias() += beta_sum * (rw * rw.transpose());
        if (cross_term) lin += beta_sum * rw;
    }
    gamma2 = 0.5 * (gamma2 + gamma2.transpose()).eval();

    ClassifierUpdate out;
    out.w = reweighted_l1_minimize(gamma2, lin, hyper.vartheta, params.w, opt);
    double resid = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        for (int i : data[m].labeled_indices())
            resid += moments[m].xi(i) - moments[m].phi.col(i).dot(out.w);
    }
    out.b = resid / static_cast<double>(n_l);
    return out;
}

ResponseLaw latent_response_law(const LpmParams& params, const Hyperparams& hyper,
                                int task_index, const Eigen::MatrixXd& x) {
    if (task_index < 0 || task_index >= params.task_count())
        throw std::invalid_argument("latent_response_law: task_index out of range");
    QPart qp = compute_q_part(params, hyper, task_index, x);
    return {std::move(qp.zeta), qp.rho};
}

double log_posterior(const LpmParams& params, const Hyperparams& hyper,
                     const std::vector<TaskDataset>& data) {
    if (static_cast<std::size_t>(params.task_count()) != data.size())
        throw std::invalid_argument("log_posterior: task count mismatch");
    const int f0 = params.f0();
    Eigen::LLT<Eigen::MatrixXd> sigma_llt(params.sigma);
    if (sigma_llt.info() != Eigen::Success)
        throw NumericError("log_posterior: sigma is not positive definite");
    const Eigen::MatrixXd chol = sigma_llt.matrixL();

    double total = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& f = params.transforms[m];
        const auto& x = data[m].x;
        const auto dim = f.rows();
        const auto n = x.cols();
        if (x.rows() != dim)
            throw std::invalid_argument("log_posterior: feature dimension mismatch");

        // Marginal N(F mu + d, eta I + F sigma F') evaluated via the
        // low-rank (Woodbury) identity in the f0-dimensional space.
        Eigen::MatrixXd b(dim, f0);
        b.noalias() = f * chol;
        count_flops(static_cast<std::uint64_t>(dim) * f0 * f0);
        Eigen::MatrixXd core(f0, f0);
        core.noalias() = b.transpose() * b;
        core.diagonal().array() += hyper.eta;
        count_flops(static_cast<std::uint64_t>(dim) * f0 * f0);
        Eigen::LLT<Eigen::MatrixXd> core_llt(core);
        if (core_llt.info() != Eigen::Success)
            throw NumericError("log_posterior: marginal covariance not PD");
        double logdet = (static_cast<double>(dim) - f0) * std::log(hyper.eta);
        const Eigen::MatrixXd core_l = core_llt.matrixL();
        for (int j = 0; j < f0; ++j) logdet += 2.0 * std::log(core_l(j, j));

        Eigen::MatrixXd centered = x.colwise() - (f * params.mu + params.translations[m]);
        Eigen::MatrixXd u(f0, n);
        u.noalias() = b.transpose() * centered;
        count_flops(static_cast<std::uint64_t>(dim) * f0 * n);
        const Eigen::MatrixXd solved = core_llt.solve(u);
        count_flops(static_cast<std::uint64_t>(f0) * f0 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double quad =
                (centered.col(i).squaredNorm() - u.col(i).dot(solved.col(i))) / hyper.eta;
            total += -0.5 * (static_cast<double>(dim) * std::log(kTwoPi) + logdet + quad);
        }
        count_flops(static_cast<std::uint64_t>(dim) * n);

        if (data[m].labeled_count() > 0) {
            const ResponseLaw law = latent_response_law(params, hyper, static_cast<int>(m), x);
            const double sr = std::sqrt(law.rho);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (data[m].labels[i].has_value())
                    total += norm_logcdf(*data[m].labels[i] * law.zeta(i) / sr);
            }
        }
    }

    // Laplace log-priors (flat when the corresponding rate is zero).
    if (hyper.gamma > 0.0) {
        const double root = std::sqrt(hyper.gamma);
        for (const auto& f : params.transforms) {
            total += static_cast<double>(f.size()) * std::log(root / 2.0);
            total -= root * f.cwiseAbs().sum();
        }
    }
    if (hyper.lambda > 0.0) {
        const double root = std::sqrt(hyper.lambda);
        total += static_cast<double>(f0) * std::log(root / 2.0);
        total -= root * params.w.cwiseAbs().sum();
    }
    return total;
}

namespace {

// Latent coordinates are identified only up to a rotation per task; the
// shared classifier needs one common gauge. Rotate each task's basis so its
// own label-informative direction (ridge fit of labels on recovered latent
// scores) becomes the first axis. Rotating F within its column space leaves
// the feature marginal F sigma F' + eta I unchanged under sigma = I.
Eigen::VectorXd label_direction(const Eigen::MatrixXd& f, const Eigen::VectorXd& d,
                                const TaskDataset& task) {
    const auto labeled = task.labeled_indices();
    if (labeled.size() < 2) return Eigen::VectorXd::Zero(f.cols());
    const Eigen::MatrixXd gram = f.transpose() * f;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    Eigen::MatrixXd scores(f.cols(), labeled.size());
    Eigen::VectorXd y(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        scores.col(i) = solver.solve(f.transpose() * (task.x.col(labeled[i]) - d));
        y(i) = static_cast<double>(*task.labels[labeled[i]]);
    }
    Eigen::MatrixXd a = scores * scores.transpose();
    a.diagonal().array() += 1e-3 * static_cast<double>(labeled.size());
    return a.ldlt().solve(scores * y);
}

Eigen::MatrixXd rotation_to_first_axis(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    const double norm = v.norm();
    if (norm < 1e-12) return Eigen::MatrixXd::Identity(n, n);
    // Householder reflection mapping v/|v| onto e_1.
    Eigen::VectorXd u = v / norm;
    u(0) -= 1.0;
    const double un = u.squaredNorm();
    if (un < 1e-24) return Eigen::MatrixXd::Identity(n, n);
    return Eigen::MatrixXd::Identity(n, n) - (2.0 / un) * (u * u.transpose());
}

}  // namespace

LpmParams default_init(const std::vector<TaskDataset>& data, const Hyperparams& hyper,
                       std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("default_init: need at least one task");
    const int f0 = hyper.f0;
    Rng root(seed);
    LpmParams p;
    p.mu = Eigen::VectorXd::Zero(f0);
    p.sigma = Eigen::MatrixXd::Identity(f0, f0);

    const auto nudge = [](double v) {
        if (std::fabs(v) >= 1e-6) return v;
        return v >= 0.0 ? 1e-6 : -1e-6;
    };

    double pull_scale_sum = 0.0;
    int pull_count = 0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto& x = data[m].x;
        const auto dim = x.rows();
        const auto n = x.cols();
        Eigen::VectorXd d = x.rowwise().mean();
        Eigen::MatrixXd centered = x.colwise() - d;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, f0);
        Rng task_rng = root.substream(m + 1);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (int k = 0; k < f0; ++k) {
            if (k < sv.size() && sv(k) > 1e-12) {
                f.col(k) = svd.matrixU().col(k) * (sv(k) * scale);
            } else {
                for (Eigen::Index r = 0; r < dim; ++r) f(r, k) = 1e-3 * task_rng.normal();
            }
        }

        const Eigen::VectorXd dir = label_direction(f, d, data[m]);
        if (dir.norm() > 1e-12) {
            const Eigen::MatrixXd rot = rotation_to_first_axis(dir);
            f = (f * rot.transpose()).eval();
            pull_scale_sum += dir.norm();
            ++pull_count;
        }

        for (Eigen::Index r = 0; r < dim; ++r)
            for (int c = 0; c < f0; ++c) f(r, c) = nudge(f(r, c));
        p.transforms.push_back(std::move(f));
        p.translations.push_back(std::move(d));
    }

    Rng w_rng = root.substream(0);
    p.w.resize(f0);
    for (int j = 0; j < f0; ++j) p.w(j) = nudge(0.1 * w_rng.normal());
    if (pull_count > 0) {
        // Every aligned task now carries its classifier pull along the first
        // latent axis; seed the shared weights there.
        p.w(0) = nudge(pull_scale_sum / pull_count);
    }

    long long n_l = 0, n_pos = 0;
    for (const auto& t : data) {
        for (const auto& l : t.labels) {
            if (l.has_value()) {
                ++n_l;
                if (*l == 1) ++n_pos;
            }
        }
    }
    p.b = n_l > 0 ? norm_quantile((static_cast<double>(n_pos) + 0.5) /
                                  (static_cast<double>(n_l) + 1.0))
                  : 0.0;
    return p;
}

void write_trace_csv(const FitTrace& trace, std::ostream& out) {
    out << "iteration,log_posterior,delta_mu,delta_sigma,delta_transform,delta_translation,"
           "delta_w,delta_b,flops\n";
    char buf[512];
    for (const auto& it : trace.iterations) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n",
                      it.iteration, it.log_posterior, it.delta_mu, it.delta_sigma,
                      it.delta_transform, it.delta_translation, it.delta_w, it.delta_b,
                      static_cast<unsigned long long>(it.flops));
        out << buf;
    }
}

namespace {

// Warm start for joint fits: fit each labeled task alone, rotate its latent
// basis so the fitted classifier lies along the first axis (the latent gauge
// is free per task; the joint model needs one shared gauge), and pool the
// per-task classifiers. Unlabeled tasks keep the plain initialization.
LpmParams warm_start_init(const std::vector<TaskDataset>& data, const Hyperparams& hyper,
                          const FitOptions& options) {
    LpmParams init = default_init(data, hyper, options.seed);
    FitOptions single = options;
    single.init.reset();
    single.warm_start = false;
    single.max_iters = std::min(options.max_iters, 150);
    single.tol = std::max(options.tol, 1e-5);

    const auto nudge = [](double v) {
        if (std::fabs(v) >= 1e-6) return v;
        return v >= 0.0 ? 1e-6 : -1e-6;
    };

    double w_scale_sum = 0.0, b_sum = 0.0;
    int fitted = 0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        if (data[m].labeled_count() == 0) continue;
        single.seed = options.seed ^ (0x5851F42D4C957F2DULL * (m + 1));
        const FitResult stl = fit({data[m]}, hyper, single);
        const double norm = stl.params.w.norm();
        Eigen::MatrixXd f = stl.params.transforms[0];
        if (norm > 1e-10) {
            const Eigen::MatrixXd rot = rotation_to_first_axis(stl.params.w);
            f = (f * rot.transpose()).eval();
            w_scale_sum += norm;
            b_sum += stl.params.b;
            ++fitted;
        }
        for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = nudge(f(i));
        init.transforms[m] = std::move(f);
        init.translations[m] = stl.params.translations[0];
    }
    if (fitted > 0) {
        init.w(0) = nudge(w_scale_sum / fitted);
        init.b = b_sum / fitted;
    }
    return init;
}

}  // namespace

FitResult fit(const std::vector<TaskDataset>& data, const Hyperparams& hyper,
              const FitOptions& options) {
    if (data.empty()) throw std::invalid_argument("fit: need at least one task");
    for (std::size_t m = 0; m < data.size(); ++m) {
        ValidationReport r = validate(data[m]);
        if (!r.empty()) {
            std::ostringstream os;
            os << "fit: task " << m << ": " << r.joined();
            throw DataError(os.str());
        }
    }

    LpmParams params = options.init.has_value()
                           ? *options.init
                           : (options.warm_start && data.size() > 1
                                  ? warm_start_init(data, hyper, options)
                                  : default_init(data, hyper, options.seed));
    if (params.f0() != hyper.f0)
        throw std::invalid_argument("fit: init f0 does not match hyperparameters");
    ensure_valid(params, data);

    FitTrace trace;
    for (const auto& t : data) trace.n_total += t.size();
    trace.n_labeled = static_cast<long long>(total_labeled(data));
    const bool have_labels = trace.n_labeled > 0;
    if (!have_labels) trace.warning = "classifier update skipped: no labeled examples";

    double prev_ll = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 0; iter < options.max_iters; ++iter) {
        const std::uint64_t flops_before = flop_counter();
        const LpmParams before = params;

        if (options.update_latent_distribution) {
            std::vector<EStepMoments> moments;
            moments.reserve(data.size());
            for (std::size_t m = 0; m < data.size(); ++m)
                moments.push_back(e_step_task(params, hyper, data[m], static_cast<int>(m)));
            LatentUpdate lat = m_step_latent(moments, params);
            params.mu = std::move(lat.mu);
            params.sigma = std::move(lat.sigma);
        }

        for (std::size_t m = 0; m < data.size(); ++m) {
            const EStepMoments moments =
                e_step_task(params, hyper, data[m], static_cast<int>(m));
            DomainUpdate dom = m_step_domain(moments, data[m], hyper, params,
                                             static_cast<int>(m), options.reweight);
            params.transforms[m] = std::move(dom.f);
            params.translations[m] = std::move(dom.d);
        }

        if (have_labels) {
            std::vector<EStepMoments> moments;
            moments.reserve(data.size());
            for (std::size_t m = 0; m < data.size(); ++m)
                moments.push_back(e_step_task(params, hyper, data[m], static_cast<int>(m)));
            ClassifierUpdate cls =
                m_step_classifier(moments, data, params, hyper, options.classifier_cross_term,
                                  options.reweight);
            params.w = std::move(cls.w);
            params.b = cls.b;
        }

        const double ll = log_posterior(params, hyper, data);

        FitIterationStats stats;
        stats.iteration = iter;
        stats.log_posterior = ll;
        stats.delta_mu = (params.mu - before.mu).norm();
        stats.delta_sigma = (params.sigma - before.sigma).norm();
        for (std::size_t m = 0; m < data.size(); ++m) {
            stats.delta_transform = std::max(
                stats.delta_transform, (params.transforms[m] - before.transforms[m]).norm());
            stats.delta_translation = std::max(
                stats.delta_translation,
                (params.translations[m] - before.translations[m]).norm());
        }
        stats.delta_w = (params.w - before.w).norm();
        stats.delta_b = std::fabs(params.b - before.b);
        stats.flops = flop_counter() - flops_before;
        trace.iterations.push_back(stats);

        if (!std::isfinite(ll))
            throw FitDivergedError("fit: log posterior diverged (NaN/Inf)", trace);
        if (iter > 0 &&
            std::fabs(ll - prev_ll) < options.tol * std::max(std::fabs(ll), 1e-12)) {
            trace.converged = true;
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }

    for (const auto& f : params.transforms) {
        trace.transform_entries += f.size();
        trace.transform_nonzeros += (f.cwiseAbs().array() > 1e-8).count();
    }
    trace.classifier_nonzeros = (params.w.cwiseAbs().array() > 1e-8).count();
    return {std::move(params), std::move(trace)};
}

}  // namespace lpm
