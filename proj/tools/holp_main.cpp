#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "holp/metrics.hpp"
#include "holp/modelselect.hpp"
#include "holp/report_io.hpp"
#include "holp/screening.hpp"
#include "holp/simulation.hpp"
#include "holp/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethods = {"holp", "ridge-holp", "divide-holp", "sis", "rrcs", "fr"};
const std::vector<std::string> kFamilies = {"independent", "compound", "ar",          "factor",
                                            "group",       "extreme",  "marginal-null"};

struct ScreenerFlags {
    std::string method = "holp";
    double ridge = 10.0;
    std::size_t partitions = 1;
    std::uint64_t seed = 0;

    holp::ScreeningParams params() const {
        holp::ScreeningParams p;
        p.ridge = ridge;
        p.partitions = partitions;
        p.seed = seed;
        return p;
    }
    json to_json() const {
        return {{"method", method}, {"ridge", ridge}, {"partitions", partitions}, {"seed", seed}};
    }
};

void add_screener_flags(CLI::App* app, ScreenerFlags& f) {
    app->add_option("--method", f.method, "Screening method")->check(CLI::IsMember(kMethods));
    app->add_option("--ridge", f.ridge, "Ridge parameter for ridge-holp")->check(CLI::PositiveNumber);
    app->add_option("--partitions", f.partitions, "Row blocks for divide-holp")->check(CLI::PositiveNumber);
    app->add_option("--seed", f.seed, "Seed for shuffles and simulation");
}

struct DataFlags {
    std::string input;
    std::string response;
    std::optional<std::size_t> top_variance;
    bool standardize = false;

    holp::TabularDataset load() const {
        holp::CsvLoadOptions opts;
        opts.response = response;
        opts.top_variance = top_variance;
        opts.standardize = standardize;
        auto ds = holp::load_csv(input, opts);
        if (ds.rejected_rows > 0)
            std::cerr << "note: dropped " << ds.rejected_rows << " rows with missing values\n";
        return ds;
    }
    json to_json() const {
        json j = {{"input", input}, {"response", response}, {"standardize", standardize}};
        if (top_variance) j["top_variance"] = *top_variance;
        return j;
    }
};

void add_data_flags(CLI::App* app, DataFlags& f) {
    app->add_option("--input", f.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    app->add_option("--response", f.response, "Name of the response column")->required();
    app->add_option("--top-variance", f.top_variance, "Keep the K predictors with the largest variance");
    app->add_flag("--standardize", f.standardize, "Center and scale predictors");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw holp::Error("cannot write " + path.string());
    os << text;
}

void write_resolved(const fs::path& out, const std::string& command, json args) {
    args["command"] = command;
    args["schema_version"] = holp::kConfigSchemaVersion;
    write_text(out / "config.resolved.json", args.dump(2) + "\n");
}

std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        const auto v = std::stoull(item, &pos);
        if (pos != item.size()) throw holp::InvalidArgument("bad grid value '" + item + "'");
        grid.push_back(v);
    }
    if (grid.empty()) throw holp::InvalidArgument("empty grid");
    return grid;
}

int cmd_screen(const DataFlags& data, const ScreenerFlags& scr, std::optional<std::size_t> d,
               std::optional<double> gamma, const fs::path& out) {
    const auto ds = data.load();
    const auto method = holp::parse_method(scr.method);
    auto params = scr.params();
    holp::SubmodelSelection sel;
    holp::ScreeningScores scores;
    if (gamma) {
        if (method == holp::Method::DivideHOLP || method == holp::Method::ForwardRegression)
            throw holp::InvalidArgument("--gamma needs a score-based method; use --d with " + scr.method);
        scores = holp::compute_scores(ds.x, ds.y, method, params);
        sel = holp::threshold_select(scores, *gamma);
    } else {
        const std::size_t dd = d.value_or(ds.x.rows());
        params.target_size = dd;
        scores = holp::compute_scores(ds.x, ds.y, method, params);
        sel = holp::rank_select(scores, dd);
    }
    for (const auto& w : scores.warnings) std::cerr << "warning: " << w << "\n";

    std::ostringstream csv;
    csv << "rank,column,name,score\n";
    for (std::size_t r = 0; r < sel.indices.size(); ++r) {
        const auto j = sel.indices[r];
        csv << r + 1 << ',' << j << ',' << ds.predictor_names[j] << ','
            << holp::format_double(scores.scores[j]) << '\n';
    }
    fs::create_directories(out);
    write_text(out / "report.csv", csv.str());
    json args = {{"data", data.to_json()}, {"screener", scr.to_json()}};
    if (gamma) args["gamma"] = *gamma;
    else args["d"] = d.value_or(ds.x.rows());
    write_resolved(out, "screen", args);

    std::cout << "n=" << ds.x.rows() << " p=" << ds.x.cols() << " method=" << scr.method
              << " selected=" << sel.indices.size() << "\n";
    const std::size_t show = std::min<std::size_t>(sel.indices.size(), 20);
    for (std::size_t r = 0; r < show; ++r)
        std::cout << "  " << r + 1 << "  " << ds.predictor_names[sel.indices[r]] << "  "
                  << holp::format_double(scores.scores[sel.indices[r]]) << "\n";
    return 0;
}

int cmd_campaign(const std::string& config_path, std::optional<std::string> out,
                 std::optional<std::size_t> threads, std::optional<std::uint64_t> seed) {
    std::ifstream is(config_path, std::ios::binary);
    if (!is) throw holp::Error("cannot open config " + config_path);
    std::stringstream ss;
    ss << is.rdbuf();
    std::string text = ss.str();
    if (seed) {
        // Re-resolve so experiments without an explicit seed inherit the override.
        json j = json::parse(text);
        j["seed"] = *seed;
        text = j.dump();
    }
    auto cfg = holp::config_from_json(text);
    if (out) cfg.output_dir = *out;
    if (threads) cfg.threads = *threads;
    const auto outcome = holp::run_campaign(cfg);
    std::cout << "wrote " << outcome.rows.size() << " rows to " << (fs::path(cfg.output_dir) / "report.csv").string()
              << "\n";
    return outcome.exit_code;
}

int cmd_cv(const DataFlags& data, const ScreenerFlags& scr, std::optional<std::size_t> d, bool ebic_sized,
           const std::string& refiner, std::size_t folds, const fs::path& out) {
    const auto ds = data.load();
    holp::PipelineSpec spec;
    spec.screener = holp::parse_method(scr.method);
    spec.params = scr.params();
    spec.rule.kind = ebic_sized ? holp::SubmodelRule::Kind::EBICSized : holp::SubmodelRule::Kind::TopD;
    spec.rule.size = d;
    spec.refiner = holp::parse_refiner(refiner);
    const auto res = holp::kfold_cv(ds.x, ds.y, spec, folds, scr.seed);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    std::ostringstream csv;
    csv << "fold,mse,size\n";
    for (std::size_t k = 0; k < res.fold_mse.size(); ++k)
        csv << k + 1 << ',' << holp::format_double(res.fold_mse[k]) << ',' << res.fold_size[k] << '\n';
    fs::create_directories(out);
    write_text(out / "report.csv", csv.str());
    json args = {{"data", data.to_json()},
                 {"screener", scr.to_json()},
                 {"submodel", ebic_sized ? "ebic" : "top-d"},
                 {"refiner", refiner},
                 {"folds", folds}};
    if (d) args["d"] = *d;
    write_resolved(out, "cv", args);

    std::cout << "pipeline=" << holp::pipeline_label(spec) << " folds=" << folds
              << " used=" << res.fold_mse.size() << " skipped=" << res.skipped_folds << "\n"
              << "mean_mse=" << holp::format_double(res.mean_mse) << " sd_mse=" << holp::format_double(res.sd_mse)
              << " median_size=" << holp::format_double(res.median_size) << "\n";
    return res.fold_mse.empty() ? 1 : 0;
}

int cmd_heatmap(const holp::SimScenario& sc, std::size_t sample, const fs::path& out) {
    sc.validate();
    const auto data = holp::simulate_dataset(sc, 0);
    const std::size_t k = std::min(sample, sc.p);
    std::vector<std::size_t> cols(k);
    for (std::size_t i = 0; i < k; ++i) cols[i] = i * sc.p / k;

    fs::create_directories(out);
    std::ostringstream csv;
    csv << "matrix,family,rho,n,p,columns,dominance_ratio\n";
    for (auto [kind, name] : {std::pair{holp::ProjectionKind::Sis, "sis"}, std::pair{holp::ProjectionKind::Holp, "holp"}}) {
        const auto m = holp::screening_matrix_sample(data.x, cols, kind);
        const double ratio = holp::dominance_ratio(m);
        holp::emit_heatmap(m, out / (std::string("heatmap_") + name + ".svg"),
                           std::string(name) + " " + sc.label());
        csv << name << ',' << holp::family_name(sc.family) << ',' << holp::format_double(sc.rho) << ',' << sc.n
            << ',' << sc.p << ',' << k << ',' << holp::format_double(ratio) << '\n';
        std::cout << name << " dominance ratio " << holp::format_double(ratio) << "\n";
    }
    write_text(out / "report.csv", csv.str());
    json args = {{"family", std::string(holp::family_name(sc.family))},
                 {"rho", sc.rho},
                 {"n", sc.n},
                 {"p", sc.p},
                 {"seed", sc.seed},
                 {"sample", k}};
    write_resolved(out, "heatmap", args);
    return 0;
}

int cmd_timing(const std::vector<std::string>& methods, const ScreenerFlags& scr, holp::TimingSetup setup,
               const std::string& axis, const fs::path& out) {
    fs::create_directories(out);
    std::ostringstream csv;
    csv << "method,axis,n,p,d,median_s\n";
    std::vector<holp::CurveSeries> series;
    for (const auto& name : methods) {
        const auto method = holp::parse_method(name);
        const auto points = holp::timing_run(method, scr.params(), setup);
        holp::CurveSeries s{name, {}};
        for (const auto& pt : points) {
            const bool by_p = setup.axis == holp::TimingSetup::Axis::P;
            csv << name << ',' << axis << ',' << setup.base.n << ',' << (by_p ? pt.size : setup.base.p) << ','
                << (by_p ? setup.d : pt.size) << ',' << holp::format_double(pt.median_s) << '\n';
            s.points.emplace_back(static_cast<double>(pt.size), pt.median_s);
            std::cout << name << " " << axis << "=" << pt.size << " median " << pt.median_s << " s\n";
        }
        series.push_back(std::move(s));
    }
    write_text(out / "report.csv", csv.str());
    holp::emit_curves(series, out / "timing.svg", "Screening time", axis, "seconds");
    json args = {{"methods", methods},
                 {"axis", axis},
                 {"grid", setup.grid},
                 {"n", setup.base.n},
                 {"p", setup.base.p},
                 {"d", setup.d},
                 {"repetitions", setup.repetitions},
                 {"family", std::string(holp::family_name(setup.base.family))},
                 {"screener", scr.to_json()}};
    write_resolved(out, "timing", args);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holp: variable screening for p >> n linear regression"};
    app.require_subcommand(1);

    // screen
    auto* screen = app.add_subcommand("screen", "Rank the predictors of one CSV dataset");
    DataFlags screen_data;
    ScreenerFlags screen_scr;
    std::optional<std::size_t> screen_d;
    std::optional<double> screen_gamma;
    std::string screen_out = "out";
    add_data_flags(screen, screen_data);
    add_screener_flags(screen, screen_scr);
    auto* opt_d = screen->add_option("--d", screen_d, "Submodel size (default n)");
    auto* opt_g = screen->add_option("--gamma", screen_gamma, "Score threshold")->check(CLI::NonNegativeNumber);
    opt_d->excludes(opt_g);
    screen->add_option("--out", screen_out, "Output directory");

    // campaign
    auto* campaign = app.add_subcommand("campaign", "Run a Monte Carlo campaign from a JSON config");
    std::string campaign_config;
    std::optional<std::string> campaign_out;
    std::optional<std::size_t> campaign_threads;
    std::optional<std::uint64_t> campaign_seed;
    campaign->add_option("--config", campaign_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    campaign->add_option("--out", campaign_out, "Output directory (overrides the config)");
    campaign->add_option("--threads", campaign_threads, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
    campaign->add_option("--seed", campaign_seed, "Global seed (overrides the config)");

    // cv
    auto* cv = app.add_subcommand("cv", "K-fold cross-validation of a screening pipeline on a CSV");
    DataFlags cv_data;
    ScreenerFlags cv_scr;
    std::optional<std::size_t> cv_d;
    bool cv_ebic = false;
    std::string cv_refiner = "lasso-ebic";
    std::size_t cv_folds = 10;
    std::string cv_out = "out";
    add_data_flags(cv, cv_data);
    add_screener_flags(cv, cv_scr);
    cv->add_option("--d", cv_d, "Submodel size (default: training n)");
    cv->add_flag("--ebic-size", cv_ebic, "Choose the submodel size by EBIC");
    cv->add_option("--refiner", cv_refiner, "Refinement stage")->check(CLI::IsMember({"lasso-ebic", "ols", "none"}));
    cv->add_option("--folds", cv_folds, "Number of folds")->check(CLI::Range(2, 1000));
    cv->add_option("--out", cv_out, "Output directory");

    // heatmap
    auto* heatmap = app.add_subcommand("heatmap", "Heatmaps of X^T X and X^T (X X^T)^-1 X on simulated data");
    holp::SimScenario hm;
    hm.n = 50;
    hm.p = 1000;
    std::string hm_family = "independent";
    std::size_t hm_sample = 200;
    std::string hm_out = "out";
    heatmap->add_option("--family", hm_family, "Design family")->check(CLI::IsMember(kFamilies));
    heatmap->add_option("--rho", hm.rho, "Correlation parameter");
    heatmap->add_option("--n", hm.n, "Sample size");
    heatmap->add_option("--p", hm.p, "Number of predictors");
    heatmap->add_option("--seed", hm.seed, "Simulation seed");
    heatmap->add_option("--sample", hm_sample, "Number of sampled columns")->check(CLI::PositiveNumber);
    heatmap->add_option("--out", hm_out, "Output directory");

    // timing
    auto* timing = app.add_subcommand("timing", "Wall-clock screening time across p or d");
    std::vector<std::string> tm_methods = {"holp", "sis"};
    ScreenerFlags tm_scr;
    holp::TimingSetup tm;
    tm.base.n = 100;
    tm.base.p = 1000;
    tm.base.sparsity = 5;
    std::string tm_axis = "p";
    std::string tm_grid = "1000,2000,3000,4000,5000";
    std::string tm_out = "out";
    timing->add_option("--method", tm_methods, "Methods to time (repeatable)")->check(CLI::IsMember(kMethods));
    timing->add_option("--ridge", tm_scr.ridge, "Ridge parameter for ridge-holp")->check(CLI::PositiveNumber);
    timing->add_option("--partitions", tm_scr.partitions, "Row blocks for divide-holp")->check(CLI::PositiveNumber);
    timing->add_option("--seed", tm.base.seed, "Simulation seed");
    timing->add_option("--axis", tm_axis, "Swept dimension")->check(CLI::IsMember({"p", "d"}));
    timing->add_option("--grid", tm_grid, "Comma-separated sizes");
    timing->add_option("--n", tm.base.n, "Sample size");
    timing->add_option("--p", tm.base.p, "Predictors when sweeping d");
    timing->add_option("--d", tm.d, "Submodel size when sweeping p");
    timing->add_option("--repetitions", tm.repetitions, "Timed runs per point")->check(CLI::PositiveNumber);
    timing->add_option("--out", tm_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*screen) return cmd_screen(screen_data, screen_scr, screen_d, screen_gamma, screen_out);
        if (*campaign) return cmd_campaign(campaign_config, campaign_out, campaign_threads, campaign_seed);
        if (*cv) return cmd_cv(cv_data, cv_scr, cv_d, cv_ebic, cv_refiner, cv_folds, cv_out);
        if (*heatmap) {
            hm.family = holp::parse_family(hm_family);
            return cmd_heatmap(hm, hm_sample, hm_out);
        }
        if (*timing) {
            tm.axis = tm_axis == "p" ? holp::TimingSetup::Axis::P : holp::TimingSetup::Axis::D;
            tm.grid = parse_grid(tm_grid);
            tm_scr.seed = tm.base.seed;
            return cmd_timing(tm_methods, tm_scr, tm, tm_axis, tm_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
