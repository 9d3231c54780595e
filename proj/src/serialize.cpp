#include "lpm/serialize.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lpm/errors.hpp"

namespace lpm {

namespace {

constexpr char kMagic[4] = {'L', 'P', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in, const char* field) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (in.gcount() != 8)
        throw ParseError(std::string("parameter stream truncated while reading ") + field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in, const char* field) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4)
        throw ParseError(std::string("parameter stream truncated while reading ") + field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const char* field) {
    return std::bit_cast<double>(get_u64(in, field));
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) put_f64(out, m(r, c));
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                           const char* field) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = get_f64(in, field);
    return m;
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index n, const char* field) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = get_f64(in, field);
    return v;
}

std::uint64_t get_dim(std::istream& in, const char* field) {
    const std::uint64_t v = get_u64(in, field);
    if (v > (1ULL << 32))
        throw ParseError(std::string("implausible dimension for ") + field);
    return v;
}

}  // namespace

void save_params(const LpmParams& p, std::ostream& out) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const auto f0 = static_cast<std::uint64_t>(p.mu.size());
    put_u64(out, f0);
    put_u64(out, static_cast<std::uint64_t>(p.transforms.size()));
    for (Eigen::Index i = 0; i < p.mu.size(); ++i) put_f64(out, p.mu(i));
    put_matrix(out, p.sigma);
    put_f64(out, p.b);
    for (Eigen::Index i = 0; i < p.w.size(); ++i) put_f64(out, p.w(i));
    for (std::size_t m = 0; m < p.transforms.size(); ++m) {
        put_u64(out, static_cast<std::uint64_t>(p.transforms[m].rows()));
        put_matrix(out, p.transforms[m]);
        for (Eigen::Index i = 0; i < p.translations[m].size(); ++i)
            put_f64(out, p.translations[m](i));
    }
    if (!out) throw ParseError("failed to write parameter stream");
}

LpmParams load_params(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || magic[0] != 'L' || magic[1] != 'P' || magic[2] != 'M' ||
        magic[3] != 'P')
        throw ParseError("not a parameter stream (bad magic)");
    const std::uint32_t version = get_u32(in, "version");
    if (version != kVersion) {
        std::ostringstream os;
        os << "unsupported parameter file version " << version << " (expected " << kVersion
           << ")";
        throw ParseError(os.str());
    }
    const auto f0 = static_cast<Eigen::Index>(get_dim(in, "f0"));
    const auto tasks = static_cast<std::size_t>(get_dim(in, "task count"));
    LpmParams p;
    p.mu = get_vector(in, f0, "mu");
    p.sigma = get_matrix(in, f0, f0, "sigma");
    p.b = get_f64(in, "b");
    p.w = get_vector(in, f0, "w");
    p.transforms.reserve(tasks);
    p.translations.reserve(tasks);
    for (std::size_t m = 0; m < tasks; ++m) {
        const auto dm = static_cast<Eigen::Index>(get_dim(in, "task dimension"));
        p.transforms.push_back(get_matrix(in, dm, f0, "transform"));
        p.translations.push_back(get_vector(in, dm, "translation"));
    }
    return p;
}

void save_params_file(const LpmParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    save_params(p, out);
}

LpmParams load_params_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return load_params(in);
}

}  // namespace lpm
