// End-to-end checks of the command-line front end: exit codes, artifact
// presence, and byte-level determinism of reruns. The binary path comes in
// through BNET_CLI_PATH at compile time.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(BNET_CLI_PATH) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream is(e.path(), std::ios::binary);
        files[fs::relative(e.path(), root).string()] =
            std::string((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
    }
    return files;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("train --quiet --no-such-flag") == 2);
    CHECK(run("generate --per-class 0 --out /tmp/bnet_cli_never") == 2);
}

TEST_CASE("data errors exit with code 3") {
    CHECK(run("train --quiet --data /no/such/dir --out /tmp/bnet_cli_never") == 3);
    CHECK(run("evaluate --quiet --data /no/such/dir --out /tmp/bnet_cli_never") == 3);
}

TEST_CASE("pipeline runs end to end and is byte deterministic") {
    TempDir tmp("bnet_cli_test");
    const std::string data = (tmp.path / "data").string();
    const std::string gen_args = "generate --quiet --seed 5 --per-class 12 --rows 64 "
                                 "--cols 80 --out " + data;
    REQUIRE(run(gen_args) == 0);
    REQUIRE(fs::exists(fs::path(data) / "dataset" / "index.csv"));
    REQUIRE(fs::exists(fs::path(data) / "dataset" / "dp" / "img0000.pgm"));

    const std::string common = " --quiet --seed 5 --data " + data +
                               "/dataset --downsample 4 --folds 3 --batch 8 "
                               "--epochs 6 --source-epochs 4";
    const auto stage = [&](const fs::path& out) {
        const std::string o = out.string();
        REQUIRE(run("train" + common + " --out " + o) == 0);
        REQUIRE(run("evaluate" + common + " --out " + o) == 0);
        REQUIRE(run("baseline --quiet --seed 5 --data " + data + "/dataset --folds 3 --out " +
                    o) == 0);
        REQUIRE(run("trust --quiet --seed 5 --out " + o) == 0);
        REQUIRE(run("explain" + common + " --out " + o) == 0);
        REQUIRE(run("report --quiet --seed 5 --folds 3 --out " + o) == 0);
    };
    stage(tmp.path / "run_a");
    stage(tmp.path / "run_b");

    for (const char* f :
         {"source.ckpt", "fold00.ckpt", "fold02_trace.csv", "metrics.json", "roc.csv",
          "pr.csv", "predictions.csv", "baseline_metrics.json", "features.csv", "trust.json",
          "trust_density.csv", "heatmap_dp.pgm", "depth_profiles.csv", "roc.svg",
          "loss.svg"})
        CHECK(fs::exists(tmp.path / "run_a" / f));

    // metrics.json carries the established metric names
    {
        std::ifstream is(tmp.path / "run_a" / "metrics.json");
        const std::string text((std::istreambuf_iterator<char>(is)),
                               std::istreambuf_iterator<char>());
        for (const char* k : {"\"accuracy\"", "\"sensitivity\"", "\"specificity\"",
                              "\"f_score\"", "\"mcc\""})
            CHECK(text.find(k) != std::string::npos);
    }
    // trust density grid: 201 rows per class plus header
    {
        std::ifstream is(tmp.path / "run_a" / "trust_density.csv");
        std::string line;
        std::size_t rows = 0, classes = 0;
        std::map<std::string, int> seen;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("class,", 0) == 0) continue;
            ++rows;
            seen[line.substr(0, line.find(','))]++;
        }
        classes = seen.size();
        CHECK(classes == 2); // DP and Rest
        CHECK(rows == classes * 201);
        for (const auto& [cls, n] : seen) CHECK(n == 201);
    }
    // one heatmap per class at downsampled extents (64x80 / 4 = 16x20)
    {
        std::ifstream is(tmp.path / "run_a" / "heatmap_dp.pgm", std::ios::binary);
        std::string magic, comment;
        is >> magic;
        CHECK(magic == "P5");
        is.ignore();
        std::getline(is, comment); // stamped config line
        std::size_t w = 0, h = 0;
        is >> w >> h;
        CHECK(w == 20);
        CHECK(h == 16);
    }

    const auto a = snapshot(tmp.path / "run_a");
    const auto b = snapshot(tmp.path / "run_b");
    REQUIRE(a.size() == b.size());
    for (const auto& [name, bytes] : a) {
        INFO("file: " << name);
        REQUIRE(b.count(name));
        CHECK(bytes == b.at(name));
    }

    // regenerating the dataset reproduces identical bytes as well
    const std::string data2 = (tmp.path / "data2").string();
    REQUIRE(run("generate --quiet --seed 5 --per-class 12 --rows 64 --cols 80 --out " +
                data2) == 0);
    const auto d1 = snapshot(fs::path(data) / "dataset");
    const auto d2 = snapshot(fs::path(data2) / "dataset");
    REQUIRE(d1.size() == d2.size());
    for (const auto& [name, bytes] : d1) CHECK(bytes == d2.at(name));

    // missing checkpoints are a data error
    CHECK(run("evaluate" + common + " --out " + (tmp.path / "empty_run").string()) == 3);
}

TEST_CASE("no-pretrain skips the source stage") {
    TempDir tmp("bnet_cli_nopre");
    const std::string data = (tmp.path / "data").string();
    REQUIRE(run("generate --quiet --seed 9 --per-class 6 --rows 40 --cols 40 --out " + data) ==
            0);
    const std::string o = (tmp.path / "run").string();
    REQUIRE(run("train --quiet --seed 9 --data " + data +
                "/dataset --downsample 4 --folds 3 --batch 4 --epochs 2 --no-pretrain --out " +
                o) == 0);
    CHECK(!fs::exists(fs::path(o) / "source.ckpt"));
    CHECK(fs::exists(fs::path(o) / "fold00.ckpt"));
}
