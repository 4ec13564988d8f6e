#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pvar/dataset.hpp"
#include "pvar/diagnostics.hpp"
#include "pvar/model.hpp"
#include "pvar/montecarlo.hpp"
#include "pvar/quadform.hpp"
#include "pvar/serialize.hpp"

namespace {

using namespace pvar;

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

DatasetConfig dataset_from_json(const Json& j) {
    DatasetConfig cfg;
    cfg.path = j.at("path").get<std::string>();
    if (j.contains("columns")) cfg.columns = j.at("columns").get<std::vector<std::string>>();
    cfg.season_length = j.at("season_length").get<int>();
    if (j.contains("transform")) {
        const std::string t = j.at("transform").get<std::string>();
        if (t == "none")
            cfg.transform = Transform::None;
        else if (t == "log")
            cfg.transform = Transform::Log;
        else if (t == "log_return")
            cfg.transform = Transform::LogReturn;
        else
            throw ParseError("unknown transform: " + t);
    }
    if (j.contains("demean_seasonal")) cfg.demean_seasonal = j.at("demean_seasonal").get<bool>();
    if (j.contains("drop_partial_years"))
        cfg.drop_partial_years = j.at("drop_partial_years").get<bool>();
    return cfg;
}

struct LrvFlags {
    std::string method;
    int max_order = -1;
    int order = -1;
    int bandwidth = -1;
    double ridge = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lrv-method", method, "Long-run variance estimator")
            ->check(CLI::IsMember({"var-spectral", "hac"}));
        cmd->add_option("--lrv-rmax", max_order, "Maximum auxiliary VAR order");
        cmd->add_option("--lrv-order", order, "Fixed auxiliary VAR order");
        cmd->add_option("--lrv-bandwidth", bandwidth, "HAC bandwidth");
        cmd->add_option("--lrv-ridge", ridge, "Relative ridge for the VAR fit");
    }

    LrvConfig resolve(LrvConfig base = {}) const {
        if (method == "hac") base.method = LrvConfig::Method::HacBartlett;
        if (method == "var-spectral") base.method = LrvConfig::Method::VarSpectral;
        if (max_order >= 1) base.max_order = max_order;
        if (order >= 0) base.order = order;
        if (bandwidth >= 0) base.bandwidth = bandwidth;
        if (ridge >= 0.0) base.ridge = ridge;
        return base;
    }
};

std::vector<int> parse_orders(const std::string& text, int seasons) {
    std::vector<int> orders;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) orders.push_back(std::stoi(item));
    if (orders.size() == 1) orders.assign(seasons, orders[0]);
    if (static_cast<int>(orders.size()) != seasons)
        throw Error("--order needs one value or one per season");
    return orders;
}

int cmd_simulate(const std::string& model_path, int years, const std::string& noise,
                 int burn_in, std::uint64_t seed, const std::string& out) {
    const PvarModel model = model_from_json(load_json(model_path));
    const NoiseKind kind =
        noise == "weak" ? NoiseKind::WeakProduct : NoiseKind::StrongGaussian;
    const SeriesData data = simulate(model, years, kind, burn_in, seed);
    std::ostringstream csv;
    series_to_csv(data, {}, csv);
    write_text(out, csv.str());
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& order_text,
            const std::string& constraints_path, const std::string& se_mode,
            bool drop_first_year, const LrvFlags& lrv, const std::string& out,
            const std::string& residuals_out) {
    const DatasetConfig dcfg = dataset_from_json(load_json(data_path));
    const IngestResult ingested = ingest(dcfg);

    PvarSpec spec = PvarSpec::unconstrained(
        ingested.data.seasons(), ingested.data.dim(),
        parse_orders(order_text, ingested.data.seasons()));
    if (!constraints_path.empty()) {
        const Json cj = load_json(constraints_path);
        spec.constraints.assign(spec.seasons, std::nullopt);
        for (const auto& [key, val] : cj.items()) {
            SeasonConstraint c;
            const auto& rows = val.at("R");
            c.R = Matrix(rows.size(), rows.at(0).size());
            for (Eigen::Index i = 0; i < c.R.rows(); ++i)
                for (Eigen::Index jj = 0; jj < c.R.cols(); ++jj)
                    c.R(i, jj) = rows.at(i).at(jj).get<double>();
            const auto& b = val.at("b");
            c.b = Vector(static_cast<Eigen::Index>(b.size()));
            for (Eigen::Index i = 0; i < c.b.size(); ++i) c.b(i) = b.at(i).get<double>();
            spec.constraints[std::stoi(key) - 1] = std::move(c);
        }
        spec.validate();
    }

    FitOptions opts;
    opts.drop_first_year = drop_first_year;
    FitResult fit = spec.constrained() ? fit_constrained(ingested.data, spec, opts)
                                       : fit_ols(ingested.data, spec, opts);
    if (se_mode == "weak" || se_mode == "both")
        fit.se_weak = standard_errors(fit, SeMode::Weak, lrv.resolve());
    if (se_mode == "weak") fit.se_strong.clear();

    const Json j = fit_to_json(fit, ingested.data, ingested.info.mu_hat,
                               ingested.info.demeaned);
    write_text(out, j.dump(2) + "\n");

    if (!residuals_out.empty()) {
        std::ostringstream csv;
        series_to_csv(fit.residuals, {}, csv);
        write_text(residuals_out, csv.str());
    }
    return 0;
}

int cmd_diagnose(const std::string& fit_path, int max_lag, const std::string& mode_text,
                 bool global, double bands, const LrvFlags& lrv, const std::string& out,
                 const std::string& csv_out, const std::string& band_csv) {
    const FitDocument doc = fit_from_json(load_json(fit_path));
    const bool constrained = doc.fit.mode == FitMode::Constrained;
    const CovMode mode = mode_text == "strong"
                             ? (constrained ? CovMode::StrongR : CovMode::StrongU)
                             : (constrained ? CovMode::WeakR : CovMode::WeakU);
    std::optional<double> band_alpha;
    if (bands > 0.0) band_alpha = bands;

    const PortmanteauReport report =
        diagnose(doc.fit, max_lag, mode, lrv.resolve(), global, band_alpha);
    write_text(out, report_to_json(report).dump(2) + "\n");
    if (!csv_out.empty()) {
        std::ostringstream csv;
        report_to_csv(report, csv);
        write_text(csv_out, csv.str());
    }
    if (!band_csv.empty()) {
        if (!band_alpha.has_value()) throw Error("--band-csv requires --bands");
        std::ostringstream csv;
        bands_to_csv(report, lag_covariances(doc.fit.residuals, max_lag), csv);
        write_text(band_csv, csv.str());
    }
    return 0;
}

int cmd_forecast(const std::string& fit_path, int horizon, const std::string& out) {
    const FitDocument doc = fit_from_json(load_json(fit_path));
    const PvarModel model = doc.fit.to_model();
    Matrix fc = forecast(model, doc.data, horizon);
    if (doc.demeaned && !doc.mu_hat.empty()) {
        const int s = doc.data.seasons();
        const int n = doc.data.length();
        for (int h = 1; h <= horizon; ++h)
            fc.col(h - 1) += doc.mu_hat[season_of(n + h, s) - 1];
    }
    std::ostringstream csv;
    matrix_to_csv(fc, {}, csv);
    write_text(out, csv.str());
    return 0;
}

int cmd_mc(bool power, const std::string& config_path, const LrvFlags& lrv,
           const std::string& out_csv, const std::string& out_json, int paper_table) {
    ExperimentConfig cfg = experiment_from_json(load_json(config_path));
    cfg.lrv = lrv.resolve(cfg.lrv);
    const RejectionTable table = power ? run_power(cfg) : run_size(cfg);

    const std::string label =
        paper_table > 0 ? "paper-table-" + std::to_string(paper_table) : "";
    std::ostringstream csv;
    rejection_to_csv(table, csv, label);
    write_text(out_csv, csv.str());
    if (!out_json.empty()) {
        Json j = rejection_to_json(table);
        j["config"] = experiment_to_json(cfg);
        if (paper_table > 0) j["paper_table"] = paper_table;
        write_text(out_json, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_quadform(const std::vector<double>& weights, double x, double tol) {
    Vector w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i)
        w(static_cast<Eigen::Index>(i)) = weights[i];
    const WeightedChiSq dist(w);
    const TailProbability p = survival(dist, x, tol);
    if (!p.converged)
        std::cerr << Json{{"warning", "quadrature did not reach the requested tolerance"}}
                  << "\n";
    std::printf("%.4f\n", p.value);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic VAR estimation and diagnostic checking"};
    app.require_subcommand(1);

    // simulate
    std::string model_path, noise = "strong", out;
    int years = 0, burn_in = 100;
    std::uint64_t seed = 1;
    auto* sim = app.add_subcommand("simulate", "Simulate a PVAR model to CSV");
    sim->add_option("--model", model_path, "Model JSON")->required();
    sim->add_option("--years", years, "Years to simulate")->required();
    sim->add_option("--noise", noise, "Innovation kind")
        ->check(CLI::IsMember({"strong", "weak"}));
    sim->add_option("--burn-in", burn_in, "Burn-in years discarded");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--out", out, "Output CSV (default stdout)");

    // fit
    std::string data_path, order_text, constraints_path, se_mode = "strong";
    std::string fit_out, residuals_out;
    bool drop_first_year = false;
    LrvFlags fit_lrv;
    auto* fit = app.add_subcommand("fit", "Fit a PVAR model to a dataset");
    fit->add_option("--data", data_path, "Dataset config JSON")->required();
    fit->add_option("--order", order_text, "AR order, one value or per-season list")
        ->required();
    fit->add_option("--constraints", constraints_path, "Per-season constraint JSON");
    fit->add_option("--se", se_mode, "Standard errors to report")
        ->check(CLI::IsMember({"strong", "weak", "both"}));
    fit->add_flag("--drop-first-year", drop_first_year,
                  "Exclude presample-touching columns from the normal equations");
    fit->add_option("--out", fit_out, "Output fit JSON (default stdout)");
    fit->add_option("--residuals", residuals_out, "Optional residual CSV");
    fit_lrv.attach(fit);

    // diagnose
    std::string diag_fit, diag_mode = "weak", diag_out, diag_csv, diag_band_csv;
    int max_lag = 0;
    bool diag_global = false;
    double diag_bands = -1.0;
    LrvFlags diag_lrv;
    auto* diag = app.add_subcommand("diagnose", "Portmanteau diagnostics of a fit");
    diag->add_option("--fit", diag_fit, "Fit JSON produced by `pvar fit`")->required();
    diag->add_option("--max-lag", max_lag, "Number of residual autocorrelations M")
        ->required();
    diag->add_option("--mode", diag_mode, "Asymptotic framework")
        ->check(CLI::IsMember({"strong", "weak"}));
    diag->add_flag("--global", diag_global, "Also test all seasons jointly");
    diag->add_option("--bands", diag_bands, "Confidence level alpha for residual bands");
    diag->add_option("--out", diag_out, "Output report JSON (default stdout)");
    diag->add_option("--csv", diag_csv, "Optional per-season CSV");
    diag->add_option("--band-csv", diag_band_csv, "Optional band data CSV");
    diag_lrv.attach(diag);

    // forecast
    std::string fc_fit, fc_out;
    int horizon = 0;
    auto* fc = app.add_subcommand("forecast", "Forecast from a fitted model");
    fc->add_option("--fit", fc_fit, "Fit JSON")->required();
    fc->add_option("--horizon", horizon, "Forecast horizon")->required();
    fc->add_option("--out", fc_out, "Output CSV (default stdout)");

    // mc-size / mc-power
    std::string mc_config, mc_csv, mc_json;
    int paper_table = 0;
    LrvFlags mc_lrv;
    auto* mcs = app.add_subcommand("mc-size", "Empirical size experiment");
    mcs->add_option("--config", mc_config, "Experiment config JSON")->required();
    mcs->add_option("--out-csv", mc_csv, "Rejection table CSV (default stdout)");
    mcs->add_option("--out-json", mc_json, "Rejection table JSON");
    mcs->add_option("--paper-table", paper_table, "Label rows with a paper table number");
    mc_lrv.attach(mcs);

    std::string mcp_config, mcp_csv, mcp_json;
    int mcp_paper_table = 0;
    LrvFlags mcp_lrv;
    auto* mcp = app.add_subcommand("mc-power", "Empirical power experiment");
    mcp->add_option("--config", mcp_config, "Experiment config JSON")->required();
    mcp->add_option("--out-csv", mcp_csv, "Rejection table CSV (default stdout)");
    mcp->add_option("--out-json", mcp_json, "Rejection table JSON");
    mcp->add_option("--paper-table", mcp_paper_table,
                    "Label rows with a paper table number");
    mcp_lrv.attach(mcp);

    // quadform
    std::vector<double> weights;
    double x = 0.0, tol = 1e-6;
    auto* quad = app.add_subcommand("quadform", "Weighted chi-squared tail probability");
    quad->add_option("--weights", weights, "Weights of the quadratic form")
        ->required()
        ->delimiter(',');
    quad->add_option("--x", x, "Evaluation point")->required();
    quad->add_option("--tol", tol, "Absolute tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(model_path, years, noise, burn_in, seed, out);
        if (fit->parsed())
            return cmd_fit(data_path, order_text, constraints_path, se_mode,
                           drop_first_year, fit_lrv, fit_out, residuals_out);
        if (diag->parsed())
            return cmd_diagnose(diag_fit, max_lag, diag_mode, diag_global, diag_bands,
                                diag_lrv, diag_out, diag_csv, diag_band_csv);
        if (fc->parsed()) return cmd_forecast(fc_fit, horizon, fc_out);
        if (mcs->parsed())
            return cmd_mc(false, mc_config, mc_lrv, mc_csv, mc_json, paper_table);
        if (mcp->parsed())
            return cmd_mc(true, mcp_config, mcp_lrv, mcp_csv, mcp_json, mcp_paper_table);
        if (quad->parsed()) return cmd_quadform(weights, x, tol);
    } catch (const Error& e) {
        std::cerr << Json{{"error", e.what()}} << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << Json{{"error", e.what()}} << "\n";
        return 1;
    }
    return 2;
}
