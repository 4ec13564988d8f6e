#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvar/diagnostics.hpp"
#include "pvar/estimate.hpp"
#include "pvar/montecarlo.hpp"
#include "pvar/types.hpp"

namespace pvar {

using Json = nlohmann::json;

// Model documents: {"s", "d", "p": [..], "phi": {nu: [k: row-major d x d]},
// "sigma_eps": {nu: row-major}, "mu": {nu: [..]}, "constraints": {nu: {"R","b"}}}.
Json model_to_json(const PvarModel& model);
PvarModel model_from_json(const Json& j);

Json spec_to_json(const PvarSpec& spec);
PvarSpec spec_from_json(const Json& j);

/// Fit documents embed the series the model was fitted on (so diagnose/forecast can
/// rebuild regressors and residuals exactly from beta), the per-season estimates,
/// standard errors with two-sided normal p-values, and the seasonal means removed
/// during preprocessing (with a flag saying whether they were removed).
Json fit_to_json(const FitResult& fit, const SeriesData& data,
                 const std::vector<Vector>& mu_hat, bool demeaned = false);

struct FitDocument {
    FitResult fit;
    SeriesData data;
    std::vector<Vector> mu_hat;
    bool demeaned = false;
};
FitDocument fit_from_json(const Json& j);

Json report_to_json(const PortmanteauReport& report);
/// One row per (season, M): Q, Q*, df, p-values, clipped-eigenvalue count.
void report_to_csv(const PortmanteauReport& report, std::ostream& out);
/// Band rows (season, lag, entry, r, lower, upper) for external plotting.
void bands_to_csv(const PortmanteauReport& report, const LagCovSet& lagcov,
                  std::ostream& out);

Json rejection_to_json(const RejectionTable& table);
void rejection_to_csv(const RejectionTable& table, std::ostream& out,
                      const std::string& label = "");

Json experiment_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const Json& j);

/// CSV with header row, RFC-4180 quoting, values at 17 significant digits.
void series_to_csv(const SeriesData& data, const std::vector<std::string>& columns,
                   std::ostream& out);
void matrix_to_csv(const Matrix& values, const std::vector<std::string>& columns,
                   std::ostream& out);

/// Parses an RFC-4180 CSV with a header row; returns the header and numeric rows for
/// the selected columns (all columns when the selection is empty).
/// Throws ParseError on malformed input or non-numeric cells.
Matrix csv_to_matrix(std::istream& in, const std::vector<std::string>& columns,
                     std::vector<std::string>* header_out = nullptr);

}  // namespace pvar
