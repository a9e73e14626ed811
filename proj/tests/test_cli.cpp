#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "holp/report_io.hpp"
#include "holp/svg.hpp"

using namespace holp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("holp_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t c = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++c;
    return c;
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.seed = 99;
    cfg.output_dir = out.string();
    SimScenario sc;
    sc.family = Family::Autoregressive;
    sc.rho = 0.6;
    sc.n = 40;
    sc.p = 150;
    sc.seed = 5;

    ExperimentSpec inc;
    inc.label = "inc";
    inc.scenario = sc;
    inc.replicates = 6;
    inc.selection = SelectionRule::top_d(20);

    ExperimentSpec sep = inc;
    sep.label = "sep, quoted";
    sep.kind = ExperimentSpec::Kind::Separation;
    sep.pipeline.screener = Method::RidgeHOLP;

    ExperimentSpec pipe = inc;
    pipe.label = "pipe";
    pipe.kind = ExperimentSpec::Kind::Pipeline;
    pipe.replicates = 3;

    cfg.experiments = {inc, sep, pipe};
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HOLP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("JSON round trip is the identity") {
        auto cfg = small_config("somewhere");
        cfg.experiments[1].selection = SelectionRule::threshold(0.25);
        cfg.experiments[2].pipeline.rule.kind = SubmodelRule::Kind::EBICSized;
        cfg.experiments[2].pipeline.rule.size = 30;
        cfg.experiments[0].scenario.sparsity = 4;
        cfg.curves = CurveSpec{"c.svg", "rho", "t"};
        const auto text = config_to_json(cfg);
        const auto back = config_from_json(text);
        CHECK(back == cfg);
        CHECK(config_to_json(back) == text);
    }

    TEST_CASE("global seed fills missing scenario seeds") {
        auto cfg = config_from_json(R"({"schema_version":1,"seed":42,"experiments":[
            {"label":"a","scenario":{"family":"independent","n":50,"p":200,"r_squared":0.9}}]})");
        CHECK(cfg.experiments[0].scenario.seed == 42);
        CHECK(cfg.experiments[0].pipeline.params.ridge == 10.0);
    }

    TEST_CASE("invalid configs are rejected") {
        CHECK_THROWS_AS(config_from_json("{"), InvalidArgument);
        CHECK_THROWS_AS(config_from_json(R"({"schema_version":2})").validate(), InvalidArgument);
        auto cfg = small_config("x");
        cfg.experiments[1].label = "inc";
        CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
        cfg = small_config("x");
        cfg.experiments[0].scenario.r_squared = 1.0;
        CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    }

    TEST_CASE("shipped configs parse and validate") {
        std::size_t seen = 0;
        for (const auto& entry : fs::directory_iterator(HOLP_CONFIG_DIR)) {
            if (entry.path().extension() != ".json") continue;
            CAPTURE(entry.path().string());
            auto cfg = load_config(entry.path());
            CHECK_NOTHROW(cfg.validate());
            CHECK(!cfg.experiments.empty());
            ++seen;
        }
        CHECK(seen >= 4);
    }
}

TEST_SUITE("reports") {
    TEST_CASE("shortest round-trip number formatting") {
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(1.0) == "1");
        CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    }

    TEST_CASE("campaign CSV round trips losslessly") {
        auto dir = scratch("roundtrip");
        auto outcome = run_campaign(small_config(dir));
        REQUIRE(outcome.exit_code == 0);
        const auto text = slurp(dir / "report.csv");
        auto rows = read_report_csv(dir / "report.csv");
        REQUIRE(rows.size() == 3);
        std::string rebuilt = report_csv_header(false);
        for (const auto& r : rows) rebuilt += report_csv_row(r, false);
        CHECK(rebuilt == text);
        CHECK(rows[1].label == "sep, quoted");
        CHECK(rows[0].report.inclusion_probability == outcome.rows[0].report.inclusion_probability);
        CHECK(load_config(dir / "config.resolved.json") == small_config(dir));
    }

    TEST_CASE("reruns and thread counts give byte-identical reports") {
        auto a = scratch("rerun_a");
        auto b = scratch("rerun_b");
        auto cfg_a = small_config(a);
        auto cfg_b = small_config(b);
        cfg_b.threads = 3;
        run_campaign(cfg_a);
        run_campaign(cfg_b);
        CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
        run_campaign(cfg_a);
        CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
    }

    TEST_CASE("empty experiment list writes the header only") {
        auto dir = scratch("empty");
        ExperimentConfig cfg;
        cfg.output_dir = dir.string();
        auto outcome = run_campaign(cfg);
        CHECK(outcome.exit_code == 0);
        CHECK(slurp(dir / "report.csv") == report_csv_header(false));
    }

    TEST_CASE("failing experiment aborts with exit code 1 and keeps earlier rows") {
        auto dir = scratch("failing");
        auto cfg = small_config(dir);
        cfg.experiments[1].pipeline.screener = Method::DivideHOLP;
        cfg.experiments[1].pipeline.params.partitions = 20;
        auto outcome = run_campaign(cfg);
        CHECK(outcome.exit_code == 1);
        REQUIRE(outcome.failures.size() == 1);
        CHECK(outcome.rows.size() == 1);
        CHECK(read_report_csv(dir / "report.csv").size() == 1);
    }

    TEST_CASE("curves figure is written when requested") {
        auto dir = scratch("curves");
        auto cfg = small_config(dir);
        cfg.curves = CurveSpec{"curves.svg", "n", "probabilities"};
        run_campaign(cfg);
        const auto svg = slurp(dir / "curves.svg");
        CHECK(svg.find("<svg") == 0);
        CHECK(svg.find("probabilities") != std::string::npos);
    }
}

TEST_SUITE("dataset ingestion") {
    TEST_CASE("response column is split from predictors") {
        auto dir = scratch("csv_basic");
        spit(dir / "d.csv", "\xEF\xBB\xBFy,a,\"b\"\n1,2,3\n2,3,5\n3,5,4\n4,4,7\n");
        auto ds = load_csv(dir / "d.csv", {"y", std::nullopt, false});
        CHECK(ds.predictor_names == std::vector<std::string>{"a", "b"});
        CHECK(ds.response_name == "y");
        CHECK(ds.x.rows() == 4);
        CHECK(ds.x.cols() == 2);
        CHECK(ds.x(2, 1) == 4.0);
        CHECK(ds.y[3] == 4.0);
    }

    TEST_CASE("top-variance keeps the highest-variance predictors in file order") {
        auto dir = scratch("csv_topvar");
        spit(dir / "d.csv", "a,b,y,c\n1,0,1,5\n1,10,2,0\n1,0,3,-5\n1,10,4,0\n");
        auto one = load_csv(dir / "d.csv", {"y", std::size_t{1}, false});
        CHECK(one.predictor_names == std::vector<std::string>{"b"});
        auto two = load_csv(dir / "d.csv", {"y", std::size_t{2}, false});
        CHECK(two.predictor_names == std::vector<std::string>{"b", "c"});
        // ties resolve to the earlier column
        spit(dir / "t.csv", "y,a,b\n1,0,1\n2,1,0\n3,0,1\n");
        CHECK(load_csv(dir / "t.csv", {"y", std::size_t{1}, false}).predictor_names ==
              std::vector<std::string>{"a"});
    }

    TEST_CASE("standardize uses the n - 1 convention") {
        auto dir = scratch("csv_std");
        spit(dir / "d.csv", "y,a\n0,1\n0,2\n0,3\n");
        auto ds = load_csv(dir / "d.csv", {"y", std::nullopt, true});
        CHECK(ds.x(0, 0) == doctest::Approx(-1.0));
        CHECK(ds.x(1, 0) == doctest::Approx(0.0));
        CHECK(ds.x(2, 0) == doctest::Approx(1.0));
    }

    TEST_CASE("non-numeric cell reports file line and column") {
        auto dir = scratch("csv_bad");
        std::string text = "y,g41,g42\n";
        for (int i = 0; i < 4; ++i) text += "1,2,3\n";
        text += "1,2,3\n1,2,oops\n1,2,3\n";
        spit(dir / "d.csv", text);
        try {
            (void)load_csv(dir / "d.csv", {"y", std::nullopt, false});
            FAIL("expected an error");
        } catch (const InvalidArgument& e) {
            const std::string msg = e.what();
            CHECK(msg.find("row 7, column 'g42'") != std::string::npos);
            CHECK(msg.find("oops") != std::string::npos);
        }
    }

    TEST_CASE("missing cells drop and count rows") {
        auto dir = scratch("csv_missing");
        spit(dir / "d.csv", "y,a,b\n1,2,3\n2,,4\n3,NA,1\n4,5,NaN\n5,1,1\n6,2,2\n");
        auto ds = load_csv(dir / "d.csv", {"y", std::nullopt, false});
        CHECK(ds.rejected_rows == 3);
        CHECK(ds.x.rows() == 3);
        CHECK(ds.y[1] == 5.0);
    }

    TEST_CASE("absent response and tiny files are errors") {
        auto dir = scratch("csv_errors");
        spit(dir / "d.csv", "y,a\n1,2\n2,3\n3,4\n");
        CHECK_THROWS_AS((void)load_csv(dir / "d.csv", {"z", std::nullopt, false}), InvalidArgument);
        spit(dir / "s.csv", "y,a\n1,2\n2,3\n");
        CHECK_THROWS_AS((void)load_csv(dir / "s.csv", {"y", std::nullopt, false}), InvalidArgument);
    }
}

TEST_SUITE("figures") {
    TEST_CASE("identity heatmap is black on the diagonal") {
        const auto svg = heatmap_svg(DataMatrix::identity(5));
        CHECK(count(svg, "fill=\"#000000\"") == 5);
        CHECK(count(svg, "<rect") == 6);
    }

    TEST_CASE("constant matrix renders mid-gray") {
        const auto svg = heatmap_svg(DataMatrix(3, 4, 7.5));
        CHECK(count(svg, "fill=\"#808080\"") == 12);
    }

    TEST_CASE("heatmap output is deterministic") {
        DataMatrix m(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) m(i, j) = std::sin(static_cast<double>(i * 4 + j));
        CHECK(heatmap_svg(m, "t") == heatmap_svg(m, "t"));
    }

    TEST_CASE("large matrices are subsampled") {
        const auto svg = heatmap_svg(DataMatrix(2001, 3, 1.0));
        CHECK(count(svg, "fill=\"#808080\"") == 667 * 3);
    }

    TEST_CASE("curves with a single point and duplicate series") {
        CurveSeries a{"holp", {{100.0, 0.5}}};
        const auto one = curves_svg({a});
        CHECK(one.find("<svg") == 0);
        CHECK(one.find("holp") != std::string::npos);
        CurveSeries b{"sis", {{1.0, 0.2}, {2.0, 0.4}}};
        CurveSeries c{"sis copy", b.points};
        const auto two = curves_svg({b, c}, "title", "x", "y");
        CHECK(count(two, "<polyline") == 2);
        CHECK_THROWS_AS((void)curves_svg({}), InvalidArgument);
    }
}

TEST_SUITE("command line") {
    TEST_CASE("screen writes a ranked report") {
        auto dir = scratch("cli_screen");
        std::string text = "resp";
        for (int j = 0; j < 30; ++j) text += ",x" + std::to_string(j);
        text += "\n";
        for (int i = 0; i < 12; ++i) {
            text += std::to_string(3.0 * std::sin(i * 1.3) + 0.1 * i);
            for (int j = 0; j < 30; ++j) text += "," + format_double(j == 4 ? std::sin(i * 1.3) : std::cos(i * j + 0.7 * j));
            text += "\n";
        }
        spit(dir / "d.csv", text);
        CHECK(run_cli("screen --input " + (dir / "d.csv").string() + " --response resp --d 5 --out " +
                      (dir / "out").string()) == 0);
        const auto report = slurp(dir / "out" / "report.csv");
        CHECK(report.rfind("rank,column,name,score\n", 0) == 0);
        CHECK(report.find("1,4,x4,") != std::string::npos);
        CHECK(count(report, "\n") == 6);
        CHECK(fs::exists(dir / "out" / "config.resolved.json"));
    }

    TEST_CASE("campaign honours --seed and --threads overrides") {
        auto dir = scratch("cli_campaign");
        save_config(small_config(dir / "unused"), dir / "c.json");
        CHECK(run_cli("campaign --config " + (dir / "c.json").string() + " --out " + (dir / "a").string() +
                      " --threads 2 --seed 17") == 0);
        CHECK(run_cli("campaign --config " + (dir / "c.json").string() + " --out " + (dir / "b").string() +
                      " --seed 17") == 0);
        CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
        auto resolved = load_config(dir / "a" / "config.resolved.json");
        CHECK(resolved.seed == 17);
        CHECK(resolved.threads == 2);
    }

    TEST_CASE("heatmap and timing emit figures") {
        auto dir = scratch("cli_figs");
        CHECK(run_cli("heatmap --family compound --rho 0.6 --n 30 --p 200 --sample 50 --out " +
                      (dir / "h").string()) == 0);
        CHECK(fs::exists(dir / "h" / "heatmap_sis.svg"));
        CHECK(fs::exists(dir / "h" / "heatmap_holp.svg"));
        CHECK(run_cli("timing --method holp --method sis --axis p --grid 200,400 --n 40 --d 10 --repetitions 2 --out " +
                      (dir / "t").string()) == 0);
        CHECK(fs::exists(dir / "t" / "timing.svg"));
        CHECK(count(slurp(dir / "t" / "report.csv"), "\n") == 5);
    }

    TEST_CASE("cv reports one row per fold") {
        auto dir = scratch("cli_cv");
        std::string text = "y";
        for (int j = 0; j < 40; ++j) text += ",v" + std::to_string(j);
        text += "\n";
        for (int i = 0; i < 30; ++i) {
            text += format_double(std::cos(i * 0.9) * 2.0);
            for (int j = 0; j < 40; ++j) text += "," + format_double(j == 0 ? std::cos(i * 0.9) : std::sin(i * (j + 1) * 0.37));
            text += "\n";
        }
        spit(dir / "d.csv", text);
        CHECK(run_cli("cv --input " + (dir / "d.csv").string() + " --response y --refiner ols --d 5 --folds 3 --out " +
                      (dir / "o").string()) == 0);
        const auto report = slurp(dir / "o" / "report.csv");
        CHECK(report.rfind("fold,mse,size\n", 0) == 0);
        CHECK(count(report, "\n") == 4);
    }

    TEST_CASE("usage errors return non-zero") {
        CHECK(run_cli("") != 0);
        CHECK(run_cli("screen --input /nonexistent.csv --response y") != 0);
        CHECK(run_cli("campaign --config /nonexistent.json") != 0);
        auto dir = scratch("cli_usage");
        spit(dir / "d.csv", "y,a\n1,2\n2,3\n3,4\n4,5\n");
        CHECK(run_cli("screen --input " + (dir / "d.csv").string() + " --response y --d 1 --gamma 0.5") != 0);
        CHECK(run_cli("screen --input " + (dir / "d.csv").string() + " --response y --method lasso") != 0);
    }
}
