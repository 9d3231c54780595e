#include "lpm/bound.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "lpm/errors.hpp"
#include "lpm/rng.hpp"
#include "lpm/sampler.hpp"

namespace lpm {

Eigen::MatrixXd two_step_latent(const Eigen::MatrixXd& f, const Eigen::MatrixXd& x) {
    if (f.rows() != x.rows())
        throw std::invalid_argument("two_step_latent: row dimension mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f);
    if (qr.rank() < f.cols())
        throw NumericError("two_step_latent: transform is column-rank deficient");
    return qr.solve(x);
}

Eigen::MatrixXd pool_psi(const std::vector<Eigen::MatrixXd>& s_hats) {
    if (s_hats.empty()) throw std::invalid_argument("pool_psi: no matrices");
    const auto f0 = s_hats.front().rows();
    Eigen::Index n_t = 0;
    for (const auto& s : s_hats) {
        if (s.rows() != f0) throw std::invalid_argument("pool_psi: latent dimension mismatch");
        n_t += s.cols();
    }
    Eigen::MatrixXd psi(f0, n_t);
    Eigen::Index at = 0;
    for (const auto& s : s_hats) {
        psi.middleCols(at, s.cols()) = s;
        at += s.cols();
    }
    return psi;
}

Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z, double r,
                            const LassoOptions& opt) {
    if (psi.cols() != z.size()) throw std::invalid_argument("lasso_solve: size mismatch");
    if (!(r >= 0.0)) throw std::invalid_argument("lasso_solve: penalty must be >= 0");
    if (!psi.allFinite() || !z.allFinite())
        throw std::invalid_argument("lasso_solve: non-finite inputs");
    const auto f0 = psi.rows();
    const double n = static_cast<double>(psi.cols());

    const Eigen::MatrixXd gram = psi * psi.transpose();
    const Eigen::VectorXd target = psi * z;
    const double threshold = 0.5 * r * n;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(f0);
    Eigen::VectorXd gw = Eigen::VectorXd::Zero(f0);  // gram * w, kept incrementally
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < f0; ++j) {
            const double gjj = gram(j, j);
            if (gjj <= 0.0) continue;  // empty row of psi; keep w_j at zero
            const double c = target(j) - (gw(j) - gjj * w(j));
            double wj;
            if (c > threshold)
                wj = (c - threshold) / gjj;
            else if (c < -threshold)
                wj = (c + threshold) / gjj;
            else
                wj = 0.0;
            const double delta = wj - w(j);
            if (delta != 0.0) {
                gw += delta * gram.col(j);
                w(j) = wj;
                max_change = std::max(max_change, std::fabs(delta));
            }
        }
        if (max_change <= opt.coord_tol) break;
    }
    return w;
}

double lasso_kkt_violation(const Eigen::MatrixXd& psi, const Eigen::VectorXd& z, double r,
                           const Eigen::VectorXd& w) {
    const double n = static_cast<double>(psi.cols());
    const Eigen::VectorXd grad = 2.0 / n * (psi * (z - psi.transpose() * w));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (w(j) == 0.0)
            worst = std::max(worst, std::fabs(grad(j)) - r);
        else
            worst = std::max(worst, std::fabs(grad(j) - r * (w(j) > 0 ? 1.0 : -1.0)));
    }
    return worst;
}

double byrne_max_eig_bound(const Eigen::MatrixXd& f) {
    Eigen::VectorXd col_nnz(f.cols());
    for (Eigen::Index j = 0; j < f.cols(); ++j)
        col_nnz(j) = static_cast<double>((f.col(j).array() != 0.0).count());
    double best = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < f.cols(); ++j) row_sum += col_nnz(j) * f(i, j) * f(i, j);
        best = std::max(best, row_sum);
    }
    return best;
}

double error_bound_value(double a, double eps_psi, int n_t, int s, double c0, int f0,
                    const std::vector<Eigen::MatrixXd>& xs,
                    const std::vector<Eigen::MatrixXd>& fs) {
    if (f0 < 2) throw std::invalid_argument("error_bound_value: requires f0 >= 2");
    if (a < std::sqrt(8.0)) throw std::invalid_argument("error_bound_value: requires a >= sqrt(8)");
    if (xs.size() != fs.size()) throw std::invalid_argument("error_bound_value: task count mismatch");
    if (s == 0) return 0.0;

    double denom = 0.0;
    for (std::size_t m = 0; m < xs.size(); ++m) {
        const Eigen::MatrixXd gram =
            xs[m] * xs[m].transpose() / static_cast<double>(n_t);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                           Eigen::EigenvaluesOnly);
        const double byrne = byrne_max_eig_bound(fs[m]);
        if (byrne <= 0.0) throw NumericError("error_bound_value: zero transform");
        denom += eig.eigenvalues().minCoeff() / byrne;
    }
    if (denom <= 0.0) throw NumericError("error_bound_value: degenerate data (zero denominator)");

    const double sd = static_cast<double>(s);
    const double numer = 2.0 * a * eps_psi / static_cast<double>(n_t) *
                         std::sqrt(sd * (1.0 + c0 * c0 * sd) * std::log(static_cast<double>(f0)));
    return numer / denom;
}

VerifySummary verify_error_bound(const BoundConfig& config, int trials) {
    if (trials < 1) throw std::invalid_argument("verify_error_bound: trials must be >= 1");
    if (config.f0 < 2) throw std::invalid_argument("verify_error_bound: f0 must be >= 2");
    if (config.a < std::sqrt(8.0))
        throw std::invalid_argument("verify_error_bound: a must be >= sqrt(8)");
    if (config.dim_per_task < config.f0)
        throw std::invalid_argument("verify_error_bound: dim_per_task must be >= f0");

    VerifySummary out;
    out.p_e = 1.0 - std::pow(static_cast<double>(config.f0),
                             1.0 - config.a * config.a / 8.0);
    out.vacuous = out.p_e <= 1e-12;  // a = sqrt(8) up to rounding
    Rng root(config.seed);
    const int n_t = config.tasks * config.examples_per_task;
    const double noise_sd = std::sqrt(config.eta);

    int held_count = 0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = root.substream(static_cast<std::uint64_t>(trial));
        const Eigen::VectorXd w_star = sample_sparse_weights(config.f0, config.s, rng);

        std::vector<Eigen::MatrixXd> fs, xs, s_hats;
        for (int m = 0; m < config.tasks; ++m) {
            Eigen::MatrixXd f =
                sample_sparse_transform(config.dim_per_task, config.f0, config.density, rng);
            Eigen::MatrixXd s(config.f0, config.examples_per_task);
            for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = rng.normal();
            Eigen::MatrixXd x = f * s;
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += noise_sd * rng.normal();
            s_hats.push_back(two_step_latent(f, x));
            fs.push_back(std::move(f));
            xs.push_back(std::move(x));
        }
        const Eigen::MatrixXd psi = pool_psi(s_hats);

        double eps_psi = 0.0;
        for (Eigen::Index j = 0; j < psi.rows(); ++j)
            eps_psi = std::max(eps_psi, psi.row(j).norm());

        // Responses are synthesized from the pooled matrix, after recovery.
        Eigen::VectorXd e(n_t);
        for (int i = 0; i < n_t; ++i) e(i) = rng.normal();
        const Eigen::VectorXd z = psi.transpose() * w_star + e;

        const double r = config.a * eps_psi *
                         std::sqrt(std::log(static_cast<double>(config.f0))) /
                         static_cast<double>(n_t);
        const Eigen::VectorXd w_hat = lasso_solve(psi, z, r);
        const Eigen::VectorXd delta = w_hat - w_star;

        double norm_on = 0.0, norm_off = 0.0;
        for (int j = 0; j < config.f0; ++j) {
            if (w_star(j) != 0.0)
                norm_on += std::fabs(delta(j));
            else
                norm_off += std::fabs(delta(j));
        }

        BoundReport rep;
        rep.s = config.s;
        rep.c0 = norm_on > 0.0 ? norm_off / norm_on : 0.0;
        rep.eps_psi = eps_psi;
        rep.a = config.a;
        rep.r = r;
        rep.n_t = n_t;
        rep.p_e = out.p_e;
        rep.r_e = (psi * e).cwiseAbs().maxCoeff() / static_cast<double>(n_t);
        rep.delta_norm = delta.norm();
        rep.w_star = w_star;
        rep.delta = delta;
        rep.rhs = error_bound_value(config.a, eps_psi, n_t, config.s, rep.c0, config.f0, xs, fs);
        double denom = 0.0;
        for (std::size_t m = 0; m < xs.size(); ++m) {
            const Eigen::MatrixXd gram = xs[m] * xs[m].transpose() / static_cast<double>(n_t);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
            denom += eig.eigenvalues().minCoeff() / byrne_max_eig_bound(fs[m]);
        }
        rep.denom = denom;
        rep.held = rep.delta_norm <= rep.rhs;
        if (rep.held) ++held_count;
        out.trials.push_back(rep);
    }
    out.empirical_fraction = static_cast<double>(held_count) / trials;
    return out;
}

void write_bound_csv(const VerifySummary& summary, std::ostream& out) {
    out << "trial,s,c0,eps_psi,a,r,delta_norm,rhs,held\n";
    char buf[512];
    for (std::size_t i = 0; i < summary.trials.size(); ++i) {
        const auto& t = summary.trials[i];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", i,
                      t.s, t.c0, t.eps_psi, t.a, t.r, t.delta_norm, t.rhs, t.held ? 1 : 0);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "# empirical_fraction=%.17g p_e=%.17g vacuous=%d\n",
                  summary.empirical_fraction, summary.p_e, summary.vacuous ? 1 : 0);
    out << buf;
}

}  // namespace lpm
