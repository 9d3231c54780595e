#pragma once

#include <iosfwd>
#include <string>

#include "lpm/types.hpp"

namespace lpm {

struct CsvSchema {
    std::string label_column = "label";
    /// z-score each feature over the whole file at ingest time. Experiment
    /// drivers leave this off and normalize with training-split statistics
    /// instead.
    bool normalize = false;
};

/// Parse a comma-separated file with a header row into a task. The designated
/// label column holds +1 / -1 / empty (empty = unlabeled); every other column
/// must be numeric and becomes a feature. Throws DataError with row/column
/// context on malformed cells.
TaskDataset ingest_csv(const std::string& path, const CsvSchema& schema = {});
TaskDataset ingest_csv_stream(std::istream& in, const CsvSchema& schema,
                              const std::string& name);

/// Write a task in the same schema (features f1..fd, then the label column).
void write_task_csv(const TaskDataset& task, std::ostream& out,
                    const std::string& label_column = "label");

}  // namespace lpm
