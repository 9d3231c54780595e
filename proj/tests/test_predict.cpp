#include <doctest.h>

#include <cmath>

#include "lpm/normal.hpp"
#include "lpm/predict.hpp"
#include "lpm/sampler.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lpm;

TEST_CASE("a null classifier predicts one half everywhere") {
    Rng rng(1);
    LpmParams p = testutil::random_params(3, {5}, rng);
    p.w.setZero();
    p.b = 0.0;
    const Hyperparams h = Hyperparams::from_rates(1.0, 1.0, 0.5, 3);
    for (int i = 0; i < 10; ++i) {
        const Prediction pr = predict(p, h, 0, Eigen::VectorXd::Random(5));
        CHECK(pr.prob_positive == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(pr.rho == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("a zero transform reduces prediction to the prior probit") {
    Rng rng(2);
    LpmParams p = testutil::random_params(4, {6}, rng);
    p.transforms[0].setZero();
    p.mu.setZero();
    p.sigma = Eigen::MatrixXd::Identity(4, 4);
    const Hyperparams h = Hyperparams::from_rates(1.0, 1.0, 0.5, 4);
    const Prediction pr = predict(p, h, 0, Eigen::VectorXd::Random(6));
    const double want = norm_cdf(p.b / std::sqrt(1.0 + p.w.squaredNorm()));
    CHECK(pr.prob_positive == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("prediction matches a Monte-Carlo estimate of P(z >= 0 | x)") {
    Rng prng(3);
    LpmParams p = testutil::random_params(3, {5}, prng);
    p.w *= 0.7;
    const double eta = 0.4;
    const Hyperparams h = Hyperparams::from_rates(1.0, 1.0, eta, 3);
    Rng data_rng(4);
    const TaskDraw draw = sample_task(p, h, 0, 3, 0.0, data_rng);

    Rng mc(5);
    for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXd x = draw.data.x.col(i);
        const Prediction pr = predict(p, h, 0, x);
        // Sample s | x from its Gaussian posterior, then z | s.
        const Eigen::MatrixXd sigma_inv = p.sigma.inverse();
        const Eigen::MatrixXd q =
            (sigma_inv + p.transforms[0].transpose() * p.transforms[0] / eta).inverse();
        const Eigen::VectorXd mean_q =
            q * (sigma_inv * p.mu +
                 p.transforms[0].transpose() * (x - p.translations[0]) / eta);
        const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(q).matrixL();
        const int n = 1'000'000;
        int hits = 0;
        Eigen::VectorXd e(3);
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < 3; ++j) e(j) = mc.normal();
            const Eigen::VectorXd s = mean_q + chol * e;
            const double z = p.w.dot(s) + p.b + mc.normal();
            hits += z >= 0.0;
        }
        CHECK(std::fabs(pr.prob_positive - static_cast<double>(hits) / n) < 0.005);
    }
}

TEST_CASE("prob_positive is strictly increasing in zeta at fixed rho") {
    double prev = -1.0;
    for (double zeta = -4.0; zeta <= 4.0; zeta += 0.5) {
        const double v = norm_cdf(zeta / std::sqrt(2.0));
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("auc handles perfect, tied and textbook orderings") {
    CHECK(auc({0.1, 0.2, 0.8, 0.9}, {-1, -1, 1, 1}) == doctest::Approx(1.0));
    CHECK(auc({0.9, 0.8, 0.2, 0.1}, {-1, -1, 1, 1}) == doctest::Approx(0.0));
    CHECK(auc({0.5, 0.5, 0.5, 0.5}, {-1, 1, -1, 1}) == doctest::Approx(0.5));
    // Hand-enumerated pairs: (0.35>0.1), (0.35<0.4), (0.8>0.1), (0.8>0.4) -> 3/4.
    CHECK(auc({0.1, 0.4, 0.35, 0.8}, {-1, -1, 1, 1}) == doctest::Approx(0.75));
    // Tie across classes counts half.
    CHECK(auc({0.3, 0.3}, {1, -1}) == doctest::Approx(0.5));
}

TEST_CASE("auc is invariant under strictly increasing score transforms") {
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 40; ++i) {
            // Coarse grid induces ties.
            scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0);
            labels.push_back(rng.uniform() < 0.4 ? 1 : -1);
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
        if (std::count(labels.begin(), labels.end(), -1) == 0) labels[1] = -1;
        const double base = auc(scores, labels);
        std::vector<double> warped = scores;
        for (double& s : warped) s = std::exp(3.0 * s) + s * s * s;
        CHECK(auc(warped, labels) == doctest::Approx(base).epsilon(1e-14));
    }
}

TEST_CASE("auc rejects degenerate inputs") {
    CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(auc({0.1, 0.2}, {-1, -1}), std::invalid_argument);
    CHECK_THROWS_AS(auc({0.1}, {1, -1}), std::invalid_argument);
    CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 0}), std::invalid_argument);
}

TEST_CASE("fit_stl requires labels and is deterministic") {
    Rng rng(7);
    const LpmParams truth = testutil::sparse_truth(3, {6}, 2, 0.5, 1.2, rng);
    const Hyperparams h = Hyperparams::from_regularizers(0.1, 1.0, 0.25, 3);
    Rng data_rng(8);
    const TaskDraw draw = sample_task(truth, h, 0, 80, 0.5, data_rng);

    TaskDataset unlabeled = draw.data;
    for (auto& l : unlabeled.labels) l = std::nullopt;
    CHECK_THROWS_AS(fit_stl(unlabeled, h), std::invalid_argument);

    FitOptions opt;
    opt.max_iters = 10;
    opt.seed = 9;
    const FitResult a = fit_stl(draw.data, h, opt);
    const FitResult b = fit_stl(draw.data, h, opt);
    CHECK(a.params.w == b.params.w);
    CHECK(a.params.b == b.params.b);
}

TEST_CASE("sharing two copies of a task does not hurt relative to one") {
    // Paired-seed experiment: joint fit on duplicated tasks vs single-task
    // fit, compared in mean held-out AUC over 20 seeds.
    double joint_sum = 0.0, single_sum = 0.0;
    const int seeds = 20;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        Rng rng(seed * 13);
        const LpmParams truth = testutil::sparse_truth(3, {6}, 2, 0.5, 1.5, rng);
        const Hyperparams h = Hyperparams::from_regularizers(0.1, 1.0, 0.25, 3);
        Rng data_rng(seed * 13 + 1);
        const TaskDraw train = sample_task(truth, h, 0, 60, 0.4, data_rng);
        const TaskDraw test = sample_task(truth, h, 0, 400, 0.0, data_rng);

        FitOptions opt;
        opt.max_iters = 60;
        opt.seed = seed;
        LpmParams twin = truth;
        twin.transforms.push_back(truth.transforms[0]);
        twin.translations.push_back(truth.translations[0]);
        const FitResult joint = fit({train.data, train.data}, h, opt);
        const FitResult single = fit_stl(train.data, h, opt);

        std::vector<int> y(test.y.begin(), test.y.end());
        const Eigen::VectorXd js = predict_scores(joint.params, h, 0, test.data.x);
        const Eigen::VectorXd ss = predict_scores(single.params, h, 0, test.data.x);
        joint_sum += auc({js.data(), js.data() + js.size()}, y);
        single_sum += auc({ss.data(), ss.data() + ss.size()}, y);
    }
    CHECK(joint_sum / seeds >= single_sum / seeds - 0.01);
}

TEST_CASE("score export lists example id, score and optional label") {
    Eigen::VectorXd scores(3);
    scores << 0.25, 0.5, 0.75;
    std::ostringstream os;
    write_scores_csv(scores, {std::optional<int>(1), std::nullopt, std::optional<int>(-1)}, os);
    CHECK(os.str() ==
          "example,score,label\n"
          "0,0.25,+1\n"
          "1,0.5,\n"
          "2,0.75,-1\n");
}

TEST_CASE("predict never reads labels") {
    // Same features, different labelings: identical scores.
    Rng rng(10);
    const LpmParams p = testutil::random_params(3, {5}, rng);
    const Hyperparams h = Hyperparams::from_rates(1.0, 1.0, 0.5, 3);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 9);
    const Eigen::VectorXd s = predict_scores(p, h, 0, x);
    CHECK(s.size() == 9);
    const Prediction one = predict(p, h, 0, x.col(4));
    CHECK(one.prob_positive == doctest::Approx(s(4)).epsilon(1e-15));
}
