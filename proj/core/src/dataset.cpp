#include "pvar/dataset.hpp"

#include <cmath>
#include <fstream>

#include "pvar/serialize.hpp"

namespace pvar {

IngestResult preprocess(Matrix values, const DatasetConfig& cfg) {
    if (cfg.season_length < 1) throw Error("season length must be >= 1");
    PreprocessInfo info;
    info.transform = cfg.transform;
    info.rows_read = static_cast<long>(values.cols());
    info.columns = cfg.columns;

    if (cfg.transform == Transform::Log) {
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            if (!(values(i) > 0.0)) throw Error("log transform requires positive values");
        }
        values = values.array().log().matrix();
    } else if (cfg.transform == Transform::LogReturn) {
        if (values.cols() < 2) throw Error("TooShort: log returns need at least 2 rows");
        Matrix returns(values.rows(), values.cols() - 1);
        for (Eigen::Index t = 1; t < values.cols(); ++t) {
            for (Eigen::Index i = 0; i < values.rows(); ++i) {
                if (!(values(i, t) > 0.0 && values(i, t - 1) > 0.0))
                    throw Error("log returns require positive values");
                returns(i, t - 1) = 100.0 * std::log(values(i, t) / values(i, t - 1));
            }
        }
        values = std::move(returns);
    }
    info.rows_after_transform = static_cast<long>(values.cols());

    const int s = cfg.season_length;
    const long n = static_cast<long>(values.cols());
    const long remainder = n % s;
    if (remainder != 0) {
        if (!cfg.drop_partial_years)
            throw Error("series length is not a multiple of the season count");
        // Truncate from the front so the most recent observations are retained.
        info.rows_dropped_front = remainder;
        values = values.rightCols(n - remainder).eval();
    }
    if (values.cols() < s) throw Error("TooShort: less than one full year after alignment");

    SeriesData data(std::move(values), s);
    info.mu_hat = data.seasonal_means();
    if (cfg.demean_seasonal) {
        data = data.demeaned();
        info.demeaned = true;
    }
    return {std::move(data), std::move(info)};
}

IngestResult ingest(const DatasetConfig& cfg) {
    std::ifstream in(cfg.path);
    if (!in) throw Error("cannot open " + cfg.path);
    std::vector<std::string> header;
    Matrix values = csv_to_matrix(in, cfg.columns, &header);
    DatasetConfig resolved = cfg;
    if (resolved.columns.empty()) resolved.columns = header;
    IngestResult out = preprocess(std::move(values), resolved);
    out.info.columns = resolved.columns;
    return out;
}

}  // namespace pvar
