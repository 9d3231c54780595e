#include "lpm/types.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lpm {

Hyperparams Hyperparams::from_rates(double gamma, double lambda, double eta, int f0) {
    if (!(eta > 0.0)) throw std::invalid_argument("Hyperparams: eta must be > 0");
    if (f0 < 1) throw std::invalid_argument("Hyperparams: f0 must be >= 1");
    if (gamma < 0.0 || lambda < 0.0)
        throw std::invalid_argument("Hyperparams: rates must be >= 0");
    Hyperparams h;
    h.gamma = gamma;
    h.lambda = lambda;
    h.eta = eta;
    h.f0 = f0;
    h.alpha = eta * std::sqrt(gamma);
    h.vartheta = std::sqrt(lambda);
    return h;
}

Hyperparams Hyperparams::from_regularizers(double alpha, double vartheta, double eta, int f0) {
    if (!(eta > 0.0)) throw std::invalid_argument("Hyperparams: eta must be > 0");
    if (f0 < 1) throw std::invalid_argument("Hyperparams: f0 must be >= 1");
    if (alpha < 0.0 || vartheta < 0.0)
        throw std::invalid_argument("Hyperparams: regularizers must be >= 0");
    Hyperparams h;
    h.alpha = alpha;
    h.vartheta = vartheta;
    h.eta = eta;
    h.f0 = f0;
    const double root = alpha / eta;
    h.gamma = root * root;
    h.lambda = vartheta * vartheta;
    return h;
}

std::vector<int> TaskDataset::labeled_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        if (labels[i].has_value()) idx.push_back(i);
    return idx;
}

std::vector<int> TaskDataset::unlabeled_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        if (!labels[i].has_value()) idx.push_back(i);
    return idx;
}

int TaskDataset::labeled_count() const {
    int n = 0;
    for (const auto& l : labels)
        if (l.has_value()) ++n;
    return n;
}

std::string ValidationReport::joined() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i];
    }
    return os.str();
}

namespace {

void check_sigma(const LpmParams& p, ValidationReport& r) {
    const auto n = p.sigma.rows();
    if (p.sigma.cols() != n || n != p.mu.size()) {
        r.violations.push_back("sigma dimensions do not match mu");
        return;
    }
    const double scale = std::max(1.0, p.sigma.cwiseAbs().maxCoeff());
    if ((p.sigma - p.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        r.violations.push_back("sigma not symmetric");
        return;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(p.sigma);
    if (llt.info() != Eigen::Success) {
        r.violations.push_back("sigma not PD");
    }
}

}  // namespace

ValidationReport validate(const LpmParams& p) {
    ValidationReport r;
    if (p.mu.size() < 1) r.violations.push_back("f0 must be >= 1");
    if (p.w.size() != p.mu.size()) r.violations.push_back("w length differs from f0");
    if (!p.mu.allFinite()) r.violations.push_back("mu has non-finite entries");
    if (!p.w.allFinite()) r.violations.push_back("w has non-finite entries");
    if (!std::isfinite(p.b)) r.violations.push_back("b is non-finite");
    if (p.sigma.size() > 0 && !p.sigma.allFinite())
        r.violations.push_back("sigma has non-finite entries");
    else
        check_sigma(p, r);
    if (p.transforms.size() != p.translations.size())
        r.violations.push_back("transform/translation task counts differ");
    const auto f0 = p.mu.size();
    for (std::size_t m = 0; m < p.transforms.size(); ++m) {
        const auto& f = p.transforms[m];
        std::ostringstream tag;
        tag << "task " << m << ": ";
        if (f.cols() != f0) {
            std::ostringstream os;
            os << tag.str() << "transform column count " << f.cols()
               << " does not match shared f0 " << f0;
            r.violations.push_back(os.str());
        }
        if (!f.allFinite()) r.violations.push_back(tag.str() + "transform has non-finite entries");
        if (m < p.translations.size()) {
            const auto& d = p.translations[m];
            if (d.size() != f.rows())
                r.violations.push_back(tag.str() + "translation length differs from transform rows");
            if (!d.allFinite())
                r.violations.push_back(tag.str() + "translation has non-finite entries");
        }
    }
    return r;
}

ValidationReport validate(const TaskDataset& task) {
    ValidationReport r;
    if (!task.x.allFinite()) r.violations.push_back("features contain non-finite entries");
    if (static_cast<Eigen::Index>(task.labels.size()) != task.x.cols())
        r.violations.push_back("label count differs from example count");
    for (std::size_t i = 0; i < task.labels.size(); ++i) {
        if (task.labels[i].has_value() && *task.labels[i] != 1 && *task.labels[i] != -1) {
            std::ostringstream os;
            os << "label at index " << i << " is not +1/-1";
            r.violations.push_back(os.str());
        }
    }
    return r;
}

ValidationReport validate(const LpmParams& p, const std::vector<TaskDataset>& data) {
    ValidationReport r = validate(p);
    if (p.transforms.size() != data.size()) {
        r.violations.push_back("task count differs between params and data");
        return r;
    }
    for (std::size_t m = 0; m < data.size(); ++m) {
        ValidationReport tr = validate(data[m]);
        for (auto& v : tr.violations) {
            std::ostringstream os;
            os << "task " << m << ": " << v;
            r.violations.push_back(os.str());
        }
        if (data[m].x.rows() != p.transforms[m].rows()) {
            std::ostringstream os;
            os << "task " << m << ": feature dimension " << data[m].x.rows()
               << " does not match transform rows " << p.transforms[m].rows();
            r.violations.push_back(os.str());
        }
    }
    return r;
}

void ensure_valid(const LpmParams& p) {
    ValidationReport r = validate(p);
    if (!r.empty()) throw std::invalid_argument("invalid LpmParams: " + r.joined());
}

void ensure_valid(const LpmParams& p, const std::vector<TaskDataset>& data) {
    ValidationReport r = validate(p, data);
    if (!r.empty()) throw std::invalid_argument("invalid model/data: " + r.joined());
}

}  // namespace lpm
