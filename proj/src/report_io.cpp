#include "holp/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "holp/svg.hpp"

namespace holp {

using nlohmann::json;

namespace {

bool same_rule(const SelectionRule& a, const SelectionRule& b) {
    return a.kind == b.kind && a.d == b.d && a.gamma == b.gamma;
}

ExperimentSpec::Kind parse_kind(const std::string& s) {
    if (s == "inclusion") return ExperimentSpec::Kind::Inclusion;
    if (s == "separation") return ExperimentSpec::Kind::Separation;
    if (s == "pipeline") return ExperimentSpec::Kind::Pipeline;
    throw InvalidArgument("unknown experiment kind '" + s + "'");
}

json scenario_to_json(const SimScenario& sc) {
    json j;
    j["family"] = std::string(family_name(sc.family));
    j["rho"] = sc.rho;
    j["factors"] = sc.factors;
    j["delta2"] = sc.delta2;
    j["n"] = sc.n;
    j["p"] = sc.p;
    j["r_squared"] = sc.r_squared;
    j["seed"] = sc.seed;
    if (sc.sparsity) j["sparsity"] = *sc.sparsity;
    j["freeze_loadings"] = sc.freeze_loadings;
    return j;
}

SimScenario scenario_from_json(const json& j, std::uint64_t default_seed) {
    SimScenario sc;
    sc.family = parse_family(j.at("family").get<std::string>());
    sc.rho = j.value("rho", 0.0);
    sc.factors = j.value("factors", std::size_t{0});
    sc.delta2 = j.value("delta2", 0.0);
    sc.n = j.at("n").get<std::size_t>();
    sc.p = j.at("p").get<std::size_t>();
    sc.r_squared = j.at("r_squared").get<double>();
    sc.seed = j.value("seed", default_seed);
    if (j.contains("sparsity") && !j["sparsity"].is_null()) sc.sparsity = j["sparsity"].get<std::size_t>();
    sc.freeze_loadings = j.value("freeze_loadings", false);
    return sc;
}

json experiment_to_json(const ExperimentSpec& e) {
    json j;
    j["label"] = e.label;
    j["kind"] = experiment_kind_name(e.kind);
    j["scenario"] = scenario_to_json(e.scenario);
    const auto& p = e.pipeline.params;
    j["screener"] = {{"method", std::string(method_name(e.pipeline.screener))},
                     {"ridge", p.ridge},
                     {"partitions", p.partitions},
                     {"target_size", p.target_size},
                     {"seed", p.seed},
                     {"center", p.center}};
    if (e.selection.kind == SelectionRule::Kind::TopD) {
        j["selection"] = {{"rule", "top-d"}, {"d", e.selection.d}};
    } else {
        j["selection"] = {{"rule", "threshold"}, {"gamma", e.selection.gamma}};
    }
    json sub;
    sub["rule"] = e.pipeline.rule.kind == SubmodelRule::Kind::TopD ? "top-d" : "ebic";
    if (e.pipeline.rule.size) sub["size"] = *e.pipeline.rule.size;
    j["submodel"] = sub;
    j["refiner"] = std::string(refiner_name(e.pipeline.refiner));
    j["replicates"] = e.replicates;
    return j;
}

ExperimentSpec experiment_from_json(const json& j, std::uint64_t default_seed) {
    ExperimentSpec e;
    e.label = j.at("label").get<std::string>();
    e.kind = parse_kind(j.value("kind", std::string("inclusion")));
    e.scenario = scenario_from_json(j.at("scenario"), default_seed);
    if (j.contains("screener")) {
        const auto& s = j["screener"];
        e.pipeline.screener = parse_method(s.value("method", std::string("holp")));
        e.pipeline.params.ridge = s.value("ridge", 10.0);
        e.pipeline.params.partitions = s.value("partitions", std::size_t{1});
        e.pipeline.params.target_size = s.value("target_size", std::size_t{0});
        e.pipeline.params.seed = s.value("seed", default_seed);
        e.pipeline.params.center = s.value("center", false);
    } else {
        e.pipeline.params.seed = default_seed;
    }
    if (j.contains("selection")) {
        const auto& s = j["selection"];
        const auto rule = s.value("rule", std::string("top-d"));
        if (rule == "top-d") e.selection = SelectionRule::top_d(s.value("d", std::size_t{0}));
        else if (rule == "threshold") e.selection = SelectionRule::threshold(s.at("gamma").get<double>());
        else throw InvalidArgument("unknown selection rule '" + rule + "'");
    }
    if (j.contains("submodel")) {
        const auto& s = j["submodel"];
        const auto rule = s.value("rule", std::string("top-d"));
        if (rule == "top-d") e.pipeline.rule.kind = SubmodelRule::Kind::TopD;
        else if (rule == "ebic") e.pipeline.rule.kind = SubmodelRule::Kind::EBICSized;
        else throw InvalidArgument("unknown submodel rule '" + rule + "'");
        if (s.contains("size") && !s["size"].is_null()) e.pipeline.rule.size = s["size"].get<std::size_t>();
    }
    e.pipeline.refiner = parse_refiner(j.value("refiner", std::string("lasso-ebic")));
    e.replicates = j.value("replicates", std::size_t{100});
    return e;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Splits one CSV record; supports quoted fields without embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    if (!parse_double(s, v)) throw InvalidArgument("cannot parse " + what + " value '" + s + "'");
    return v;
}

std::size_t to_size(const std::string& s, const std::string& what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InvalidArgument("cannot parse " + what + " value '" + s + "'");
    return v;
}

double scenario_axis(const SimScenario& sc, const std::string& axis) {
    if (axis == "n") return static_cast<double>(sc.n);
    if (axis == "p") return static_cast<double>(sc.p);
    if (axis == "rho") return sc.rho;
    if (axis == "factors") return static_cast<double>(sc.factors);
    if (axis == "delta2") return sc.delta2;
    if (axis == "r_squared") return sc.r_squared;
    throw InvalidArgument("unknown curve axis '" + axis + "'");
}

}  // namespace

bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
    return a.label == b.label && a.kind == b.kind && a.scenario == b.scenario &&
           a.pipeline == b.pipeline && same_rule(a.selection, b.selection) &&
           a.replicates == b.replicates;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.schema_version == b.schema_version && a.seed == b.seed && a.threads == b.threads &&
           a.output_dir == b.output_dir && a.record_time == b.record_time &&
           a.experiments == b.experiments && a.curves == b.curves;
}

std::string experiment_kind_name(ExperimentSpec::Kind k) {
    switch (k) {
        case ExperimentSpec::Kind::Inclusion: return "inclusion";
        case ExperimentSpec::Kind::Separation: return "separation";
        case ExperimentSpec::Kind::Pipeline: return "pipeline";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    if (schema_version != kConfigSchemaVersion) {
        throw InvalidArgument("unsupported config schema_version " + std::to_string(schema_version));
    }
    std::set<std::string> labels;
    for (const auto& e : experiments) {
        if (e.label.empty()) throw InvalidArgument("experiment without a label");
        if (!labels.insert(e.label).second) throw InvalidArgument("duplicate experiment label '" + e.label + "'");
        if (e.replicates == 0) throw InvalidArgument(e.label + ": replicates must be >= 1");
        try {
            e.scenario.validate();
        } catch (const Error& err) {
            throw InvalidArgument(e.label + ": " + err.what());
        }
    }
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    j["record_time"] = cfg.record_time;
    j["experiments"] = json::array();
    for (const auto& e : cfg.experiments) j["experiments"].push_back(experiment_to_json(e));
    if (cfg.curves) {
        j["curves"] = {{"file", cfg.curves->file}, {"x", cfg.curves->x}, {"title", cfg.curves->title}};
    }
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.schema_version = j.at("schema_version").get<int>();
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.threads = j.value("threads", std::size_t{1});
        cfg.output_dir = j.value("output_dir", std::string("out"));
        cfg.record_time = j.value("record_time", false);
        if (j.contains("experiments"))
            for (const auto& e : j["experiments"]) cfg.experiments.push_back(experiment_from_json(e, cfg.seed));
        if (j.contains("curves") && !j["curves"].is_null()) {
            CurveSpec c;
            c.file = j["curves"].at("file").get<std::string>();
            c.x = j["curves"].value("x", std::string("n"));
            c.title = j["curves"].value("title", std::string());
            cfg.curves = c;
        }
        return cfg;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write config " + path.string());
    os << config_to_json(cfg);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_double failed");
    return std::string(buf, ptr);
}

std::string report_csv_header(bool with_time) {
    std::string h =
        "label,kind,family,rho,factors,delta2,n,p,r_squared,seed,sparsity,method,d,replicates,"
        "probability,fn_mean,fn_sd,fp_mean,fp_sd,coverage_mean,coverage_sd,exact_mean,exact_sd,"
        "size_mean,size_sd,l2_mean,l2_sd";
    if (with_time) h += ",time_mean,time_sd";
    return h + "\n";
}

std::string report_csv_row(const ReportRow& row, bool with_time) {
    const auto& r = row.report;
    const auto& sc = r.scenario;
    std::ostringstream os;
    auto summary = [&](const MetricSummary& m) {
        if (m.count == 0) os << ",,";
        else os << ',' << format_double(m.mean) << ',' << format_double(m.sd);
    };
    os << csv_field(row.label) << ',' << row.kind << ',' << family_name(sc.family) << ','
       << format_double(sc.rho) << ',' << sc.factors << ',' << format_double(sc.delta2) << ',' << sc.n
       << ',' << sc.p << ',' << format_double(sc.r_squared) << ',' << sc.seed << ',';
    if (sc.sparsity) os << *sc.sparsity;
    os << ',' << csv_field(r.method) << ',' << r.d << ',' << r.replicates << ','
       << format_double(r.inclusion_probability);
    summary(r.false_negatives);
    summary(r.false_positives);
    summary(r.coverage);
    summary(r.exact);
    summary(r.size);
    summary(r.l2_error);
    if (with_time) summary(r.wall_time_s);
    os << '\n';
    return os.str();
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open report " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("report " + path.string() + " is empty");
    const auto header = split_csv_line(trim(line));
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    const bool with_time = col.count("time_mean") > 0;

    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw InvalidArgument("report row has " + std::to_string(f.size()) + " fields");
        auto get = [&](const char* name) -> const std::string& { return f.at(col.at(name)); };
        auto summary = [&](const std::string& stem) {
            MetricSummary m;
            const auto& mean = get((stem + "_mean").c_str());
            if (mean.empty()) return m;
            m.mean = to_double(mean, stem);
            m.sd = to_double(get((stem + "_sd").c_str()), stem);
            return m;
        };
        ReportRow row;
        row.label = get("label");
        row.kind = get("kind");
        auto& r = row.report;
        auto& sc = r.scenario;
        sc.family = parse_family(get("family"));
        sc.rho = to_double(get("rho"), "rho");
        sc.factors = to_size(get("factors"), "factors");
        sc.delta2 = to_double(get("delta2"), "delta2");
        sc.n = to_size(get("n"), "n");
        sc.p = to_size(get("p"), "p");
        sc.r_squared = to_double(get("r_squared"), "r_squared");
        sc.seed = std::stoull(get("seed"));
        if (!get("sparsity").empty()) sc.sparsity = to_size(get("sparsity"), "sparsity");
        r.method = get("method");
        r.d = to_size(get("d"), "d");
        r.replicates = to_size(get("replicates"), "replicates");
        r.inclusion_probability = to_double(get("probability"), "probability");
        r.false_negatives = summary("fn");
        r.false_positives = summary("fp");
        r.coverage = summary("coverage");
        r.exact = summary("exact");
        r.size = summary("size");
        r.l2_error = summary("l2");
        if (with_time) r.wall_time_s = summary("time");
        for (MetricSummary* m : {&r.false_negatives, &r.false_positives, &r.coverage, &r.exact, &r.size,
                                 &r.l2_error, &r.wall_time_s})
            if (m->mean != 0.0 || m->sd != 0.0 || !get("fn_mean").empty()) m->count = r.replicates;
        if (get("l2_mean").empty()) r.l2_error.count = 0;
        rows.push_back(std::move(row));
    }
    return rows;
}

ReportRow run_experiment(const ExperimentSpec& spec, std::size_t threads) {
    ReportRow row;
    row.label = spec.label;
    row.kind = experiment_kind_name(spec.kind);
    switch (spec.kind) {
        case ExperimentSpec::Kind::Inclusion:
            row.report = rule_inclusion(spec.scenario, spec.pipeline.screener, spec.pipeline.params,
                                        spec.selection, spec.replicates, threads);
            break;
        case ExperimentSpec::Kind::Separation: {
            const auto sep = separation_probability(spec.scenario, spec.pipeline.screener,
                                                    spec.pipeline.params, spec.replicates, threads);
            auto& r = row.report;
            r.scenario = spec.scenario;
            r.method = std::string(method_name(spec.pipeline.screener));
            r.replicates = spec.replicates;
            r.inclusion_probability = sep.probability;
            r.warnings = sep.warnings;
            break;
        }
        case ExperimentSpec::Kind::Pipeline:
            row.report = pipeline_experiment(spec.scenario, spec.pipeline, spec.replicates, threads);
            break;
    }
    return row;
}

CampaignOutcome run_campaign(const ExperimentConfig& cfg) {
    cfg.validate();
    CampaignOutcome out;
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    save_config(cfg, dir / "config.resolved.json");

    std::ofstream csv(dir / "report.csv", std::ios::binary);
    if (!csv) throw Error("cannot write " + (dir / "report.csv").string());
    csv << report_csv_header(cfg.record_time);
    csv.flush();

    for (const auto& e : cfg.experiments) {
        try {
            ReportRow row = run_experiment(e, cfg.threads);
            csv << report_csv_row(row, cfg.record_time);
            csv.flush();
            for (const auto& w : row.report.warnings) std::cerr << "warning: " << e.label << ": " << w << "\n";
            out.rows.push_back(std::move(row));
        } catch (const std::exception& ex) {
            out.failures.push_back(e.label + ": " + ex.what());
            out.exit_code = 1;
            break;
        }
    }
    csv.close();

    if (cfg.curves && out.exit_code == 0 && !out.rows.empty()) {
        std::vector<CurveSeries> series;
        std::map<std::string, std::size_t> by_method;
        for (const auto& row : out.rows) {
            auto [it, fresh] = by_method.emplace(row.report.method, series.size());
            if (fresh) series.push_back({row.report.method, {}});
            series[it->second].points.emplace_back(scenario_axis(row.report.scenario, cfg.curves->x),
                                                   row.report.inclusion_probability);
        }
        for (auto& s : series) std::stable_sort(s.points.begin(), s.points.end());
        emit_curves(series, dir / cfg.curves->file, cfg.curves->title, cfg.curves->x, "probability");
    }
    if (!out.failures.empty()) {
        std::cerr << "campaign aborted; " << out.rows.size() << " of " << cfg.experiments.size()
                  << " experiments written\n";
        for (const auto& f : out.failures) std::cerr << "  failed: " << f << "\n";
    }
    return out;
}

TabularDataset load_csv(const std::filesystem::path& path, const CsvLoadOptions& opts) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument(path.string() + ": missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
    std::vector<std::string> header = split_csv_line(trim(line));
    for (auto& h : header) h = trim(h);
    const auto resp_it = std::find(header.begin(), header.end(), opts.response);
    if (opts.response.empty() || resp_it == header.end()) {
        throw InvalidArgument(path.string() + ": response column '" + opts.response + "' not found");
    }
    const std::size_t resp = static_cast<std::size_t>(resp_it - header.begin());
    const std::size_t width = header.size();

    TabularDataset ds;
    ds.response_name = opts.response;
    std::vector<double> values;
    Vector y;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != width) {
            throw InvalidArgument(path.string() + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " fields, header has " + std::to_string(width));
        }
        bool missing = false;
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) {
            const std::string cell = trim(cells[c]);
            if (is_missing(cell)) {
                missing = true;
                continue;
            }
            if (!parse_double(cell, row[c]) || !std::isfinite(row[c])) {
                throw InvalidArgument(path.string() + ": cannot parse row " + std::to_string(line_no) +
                                      ", column '" + header[c] + "' (value '" + cell + "')");
            }
        }
        if (missing) {
            ++ds.rejected_rows;
            continue;
        }
        y.push_back(row[resp]);
        for (std::size_t c = 0; c < width; ++c)
            if (c != resp) values.push_back(row[c]);
    }
    const std::size_t n = y.size();
    if (n < 3) throw InvalidArgument(path.string() + ": need at least 3 complete rows, found " + std::to_string(n));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < width; ++c)
        if (c != resp) names.push_back(header[c]);
    DataMatrix x(n, names.size(), std::move(values));

    if (opts.top_variance && *opts.top_variance < names.size()) {
        const std::size_t p = names.size();
        Vector var(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) var[j] += (x(i, j) - mean) * (x(i, j) - mean);
            var[j] /= static_cast<double>(n - 1);
        }
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
        order.resize(*opts.top_variance);
        std::sort(order.begin(), order.end());  // keep file order
        x = x.select_cols(order);
        std::vector<std::string> kept;
        for (std::size_t j : order) kept.push_back(names[j]);
        names = std::move(kept);
    }
    if (opts.standardize) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double mean = 0.0, ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            for (std::size_t i = 0; i < n; ++i) x(i, j) = sd > 0.0 ? (x(i, j) - mean) / sd : 0.0;
        }
    }
    ds.predictor_names = std::move(names);
    ds.x = std::move(x);
    ds.y = std::move(y);
    return ds;
}

}  // namespace holp
