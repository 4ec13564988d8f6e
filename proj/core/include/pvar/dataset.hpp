#pragma once

#include <string>
#include <vector>

#include "pvar/types.hpp"

namespace pvar {

enum class Transform { None, Log, LogReturn };

/// CSV ingestion settings for the data pipeline.
struct DatasetConfig {
    std::string path;
    std::vector<std::string> columns;  ///< empty = all columns, in file order
    int season_length = 1;
    Transform transform = Transform::None;
    bool demean_seasonal = true;
    bool drop_partial_years = true;
};

struct PreprocessInfo {
    std::vector<Vector> mu_hat;  ///< per-season means (removed when demean_seasonal)
    Transform transform = Transform::None;
    long rows_read = 0;
    long rows_after_transform = 0;
    long rows_dropped_front = 0;  ///< oldest observations dropped for year alignment
    bool demeaned = false;
    std::vector<std::string> columns;
};

struct IngestResult {
    SeriesData data;
    PreprocessInfo info;
};

/// Reads the CSV, applies the transform (log_return shortens the series by one),
/// truncates to whole years by dropping the oldest partial year, computes per-season
/// means and optionally removes them. Throws ParseError, Error("TooShort"...).
IngestResult ingest(const DatasetConfig& cfg);

/// Same pipeline on an already-parsed d x n value matrix.
IngestResult preprocess(Matrix values, const DatasetConfig& cfg);

}  // namespace pvar
