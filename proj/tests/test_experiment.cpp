#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fedloc/experiment.hpp"

using namespace fedloc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("fedloc_test_" + tag);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig small_preset() {
    ExperimentConfig c = reference_preset();
    c.rounds = 60;
    c.burn_in = 20;
    return c;
}

}  // namespace

TEST_CASE("trace_csv: header, config hash, and one row per fog per round") {
    ExperimentConfig c = small_preset();
    auto traces = run_experiment(c, Mode::Fkf);
    const std::string csv = trace_csv(traces, c);

    std::istringstream ss(csv);
    std::string line;
    REQUIRE(std::getline(ss, line));
    CHECK(line == "# config_sha256=" + config_hash(c) + " seed=" + std::to_string(c.seed));
    REQUIRE(std::getline(ss, line));
    CHECK(line ==
          "round,fog_id,raw_rssi_dbm,filtered_rssi_dbm,est_distance_m,true_distance_m,"
          "fix_x_m,fix_y_m,rejections");

    std::size_t rows = 0;
    while (std::getline(ss, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 8);
    }
    CHECK(rows == std::size_t(c.rounds) * c.fogs.size());
}

TEST_CASE("metrics_csv: per-distance rows plus an aggregate row per mode") {
    ExperimentConfig c = small_preset();
    std::vector<MetricReport> reports{
        report(run_experiment(c, Mode::Fkf), c, Mode::Fkf),
        report(run_experiment(c, Mode::Skf), c, Mode::Skf),
    };
    const std::string csv = metrics_csv(reports, c);

    std::istringstream ss(csv);
    std::string line;
    REQUIRE(std::getline(ss, line));
    CHECK(line.rfind("# config_sha256=", 0) == 0);
    REQUIRE(std::getline(ss, line));
    CHECK(line == "mode,distance_m,rmse_m,mean_accuracy_pct,samples");

    std::size_t fkf_rows = 0, skf_rows = 0, all_rows = 0;
    while (std::getline(ss, line)) {
        if (line.rfind("fkf,", 0) == 0) ++fkf_rows;
        if (line.rfind("skf,", 0) == 0) ++skf_rows;
        if (line.find(",all,") != std::string::npos) ++all_rows;
    }
    CHECK(fkf_rows == 5);  // 4 distances + aggregate
    CHECK(skf_rows == 5);
    CHECK(all_rows == 2);
}

TEST_CASE("cmd_run: writes both trace files and metrics, reruns byte-identical") {
    ExperimentConfig c = small_preset();
    const fs::path dir_a = fresh_dir("run_a");
    const fs::path dir_b = fresh_dir("run_b");

    std::ostringstream console_a, console_b;
    auto reports_a = cmd_run(c, dir_a, console_a);
    auto reports_b = cmd_run(c, dir_b, console_b);
    CHECK(reports_a.size() == 2);

    for (const char* name : {"trace_fkf.csv", "trace_skf.csv", "metrics.csv"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir_a / name));
        REQUIRE(fs::exists(dir_b / name));
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
    CHECK(console_a.str() == console_b.str());
    CHECK(console_a.str().find("fkf") != std::string::npos);
    CHECK(console_a.str().find("skf") != std::string::npos);

    // No stray temp files left behind.
    for (const auto& entry : fs::directory_iterator(dir_a))
        CHECK(entry.path().extension() != ".tmp");

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("cmd_run: a changed seed changes the outputs and the embedded hash") {
    ExperimentConfig c = small_preset();
    const fs::path dir_a = fresh_dir("seed_a");
    const fs::path dir_b = fresh_dir("seed_b");

    std::ostringstream sink;
    cmd_run(c, dir_a, sink);
    c.seed = c.seed + 1;
    cmd_run(c, dir_b, sink);

    CHECK(slurp(dir_a / "trace_fkf.csv") != slurp(dir_b / "trace_fkf.csv"));
    CHECK(slurp(dir_a / "metrics.csv") != slurp(dir_b / "metrics.csv"));

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("cmd_run: invalid config is rejected before any file is written") {
    ExperimentConfig c = small_preset();
    c.rounds = 0;
    const fs::path dir = fresh_dir("invalid");
    std::ostringstream sink;
    CHECK_THROWS_AS(cmd_run(c, dir, sink), ConfigError);
    CHECK(!fs::exists(dir / "metrics.csv"));
    fs::remove_all(dir);
}

TEST_CASE("write_file: failure leaves no partial target behind") {
    const fs::path missing = fs::temp_directory_path() / "fedloc_no_such_dir" / "x.csv";
    fs::remove_all(missing.parent_path());
    CHECK_THROWS_AS(detail::write_file(missing, "abc"), std::runtime_error);
    CHECK(!fs::exists(missing));
}

TEST_CASE("run_bench: reports positive per-phase timings") {
    ExperimentConfig c = reference_preset();
    BenchResult res = run_bench(c, 500);
    CHECK(res.rounds == 500);
    CHECK(res.skf_local_us > 0.0);
    CHECK(res.fkf_local_us > 0.0);
    CHECK(res.fkf_share_us > 0.0);
    CHECK(res.fkf_fuse_us > 0.0);

    std::ostringstream out;
    print_bench(res, out);
    CHECK(out.str().find("ratio=") != std::string::npos);
}
