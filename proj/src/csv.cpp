#include "lpm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "lpm/errors.hpp"

namespace lpm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

TaskDataset ingest_csv_stream(std::istream& in, const CsvSchema& schema,
                              const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(name + ": empty file");
    const auto header = split_line(line);
    int label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (trimmed(header[c]) == schema.label_column) {
            label_col = static_cast<int>(c);
            break;
        }
    }
    if (label_col < 0)
        throw DataError(name + ": label column '" + schema.label_column + "' not found");
    const int n_features = static_cast<int>(header.size()) - 1;
    if (n_features < 1) throw DataError(name + ": no feature columns");

    std::vector<Eigen::VectorXd> rows;
    std::vector<std::optional<int>> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << name << ": row " << line_no << " has " << cells.size() << " cells, expected "
               << header.size();
            throw DataError(os.str());
        }
        Eigen::VectorXd feat(n_features);
        int at = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trimmed(cells[c]);
            if (static_cast<int>(c) == label_col) {
                if (cell.empty()) {
                    labels.push_back(std::nullopt);
                } else if (cell == "+1" || cell == "1") {
                    labels.push_back(1);
                } else if (cell == "-1") {
                    labels.push_back(-1);
                } else {
                    std::ostringstream os;
                    os << name << ": row " << line_no << ": unknown label value '" << cell
                       << "' (expected +1, -1 or empty)";
                    throw DataError(os.str());
                }
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
                std::ostringstream os;
                os << name << ": row " << line_no << ", column '" << trimmed(header[c])
                   << "': non-numeric feature cell '" << cell << "'";
                throw DataError(os.str());
            }
            feat(at++) = v;
        }
        rows.push_back(std::move(feat));
    }
    if (rows.empty()) throw DataError(name + ": no data rows");

    TaskDataset task;
    task.x.resize(n_features, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) task.x.col(static_cast<Eigen::Index>(i)) = rows[i];
    task.labels = std::move(labels);

    if (schema.normalize) {
        for (int k = 0; k < n_features; ++k) {
            const double mean = task.x.row(k).mean();
            const double var =
                (task.x.row(k).array() - mean).square().sum() / task.x.cols();
            const double sd = std::sqrt(var);
            task.x.row(k).array() -= mean;
            if (sd > 0.0) task.x.row(k) /= sd;
        }
    }
    return task;
}

TaskDataset ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return ingest_csv_stream(in, schema, path);
}

void write_task_csv(const TaskDataset& task, std::ostream& out,
                    const std::string& label_column) {
    for (int k = 0; k < task.dim(); ++k) out << 'f' << (k + 1) << ',';
    out << label_column << '\n';
    char buf[64];
    for (int i = 0; i < task.size(); ++i) {
        for (int k = 0; k < task.dim(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", task.x(k, i));
            out << buf << ',';
        }
        if (task.labels[i].has_value()) out << (*task.labels[i] > 0 ? "+1" : "-1");
        out << '\n';
    }
}

}  // namespace lpm
