#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* p = std::getenv("RADMAT_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    return WEXITSTATUS(raw);
}

fs::path workdir() {
    const fs::path dir = fs::temp_directory_path() / "radmat_cli_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("unknown condition is a usage error") {
    CHECK(run("experiment nosuch --quiet --out " + (workdir() / "x").string()) == 1);
}

TEST_CASE("unknown subcommand is a usage error") {
    CHECK(run("frobnicate") == 1);
}

TEST_CASE("unknown scenario is a usage error") {
    CHECK(run("gen-data --scenario marble --quiet --out " + (workdir() / "x").string()) == 1);
}

TEST_CASE("missing model file is a data error") {
    CHECK(run("bench --model /nonexistent/model.json --quiet --out " +
              (workdir() / "x").string()) == 2);
}

TEST_CASE("corrupt model file is a data error") {
    const fs::path dir = workdir();
    const fs::path bad = dir / "bad_model.json";
    std::ofstream os(bad);
    os << "{\"format_version\": 1, \"dims\": [12, 32";
    os.close();
    CHECK(run("bench --model " + bad.string() + " --quiet --out " + (dir / "x").string()) == 2);
}

TEST_CASE("config file with unknown keys is a data error") {
    const fs::path dir = workdir();
    const fs::path cfg = dir / "bad_config.json";
    std::ofstream os(cfg);
    os << "{\"radar\": {\"num_adc_samples\": 64, \"chirp_rate\": 1.0}}";
    os.close();
    CHECK(run("gen-data --config " + cfg.string() + " --quiet --n 2 --out " +
              (dir / "y").string()) == 2);
}

TEST_CASE("gen-data then select-window round trips through files") {
    const fs::path dir = workdir() / "gen";
    fs::remove_all(dir);
    CHECK(run("gen-data --scenario nominal --n 20 --quiet --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "profiles.csv"));
    CHECK(run("select-window --profiles " + (dir / "profiles.csv").string() +
              " --quiet --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "window.json"));
    std::ifstream is(dir / "window.json");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"start_bin\": 6") != std::string::npos);
}

TEST_CASE("train and eval work from the file contract") {
    const fs::path dir = workdir() / "pipeline";
    fs::remove_all(dir);
    CHECK(run("gen-data --scenario nominal --n 40 --features --quiet --out " + dir.string()) ==
          0);
    CHECK(fs::exists(dir / "features.csv"));
    CHECK(run("train --data " + (dir / "features.csv").string() + " --epochs 30 --quiet --out " +
              dir.string()) == 0);
    CHECK(fs::exists(dir / "model.json"));
    CHECK(run("eval --model " + (dir / "model.json").string() + " --data " +
              (dir / "features.csv").string() + " --name smoke --quiet --out " + dir.string()) ==
          0);
    CHECK(fs::exists(dir / "smoke.report.json"));
    CHECK(fs::exists(dir / "summary.csv"));

    SUBCASE("bench runs on the trained model and writes its json") {
        CHECK(run("bench --model " + (dir / "model.json").string() + " --quiet --out " +
                  dir.string()) == 0);
        CHECK(fs::exists(dir / "bench.json"));
    }
    SUBCASE("report merges matching fingerprints and refuses mismatches") {
        CHECK(run("report " + (dir / "smoke.report.json").string() + " --quiet --out " +
                  (dir / "merged").string()) == 0);
        CHECK(fs::exists(dir / "merged" / "summary.csv"));

        // different seed -> different fingerprint -> refuse without --force
        const fs::path other = dir / "other";
        CHECK(run("gen-data --scenario nominal --n 40 --features --seed 9 --quiet --out " +
                  other.string()) == 0);
        CHECK(run("train --data " + (other / "features.csv").string() +
                  " --epochs 30 --seed 9 --quiet --out " + other.string()) == 0);
        CHECK(run("eval --model " + (other / "model.json").string() + " --data " +
                  (other / "features.csv").string() + " --name other --seed 9 --quiet --out " +
                  other.string()) == 0);
        CHECK(run("report " + (dir / "smoke.report.json").string() + " " +
                  (other / "other.report.json").string() + " --quiet --out " +
                  (dir / "refused").string()) == 2);
        CHECK(run("report " + (dir / "smoke.report.json").string() + " " +
                  (other / "other.report.json").string() + " --force --quiet --out " +
                  (dir / "forced").string()) == 0);
    }
}

TEST_CASE("failed check exits with code 3") {
    const fs::path dir = workdir() / "failcheck";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "degenerate.json";
    std::ofstream os(cfg);
    os << R"({"materials": [)";
    for (int c = 0; c < 5; ++c) {
        os << R"({"name": "m)" << c << R"(", "class_id": )" << c
           << R"(, "reflectivity": 0.5, "specular_fraction": 0.5,)"
           << R"( "lobe_width_deg": 5.0, "texture_sigma": 0.05})" << (c < 4 ? "," : "");
    }
    os << "]}";
    os.close();
    // five indistinguishable classes cannot reach macro-F1 0.90
    CHECK(run("experiment baseline --check --config " + cfg.string() +
              " --train-n 20 --eval-n 10 --quiet --out " + (dir / "out").string()) == 3);
}

TEST_CASE("env seed is used when the flag is absent") {
    const fs::path dir = workdir() / "envseed";
    fs::remove_all(dir);
    const std::string cmd = "RADMAT_SEED=9 " + cli_path() +
                            " gen-data --scenario nominal --n 3 --quiet --out " + dir.string() +
                            " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) != -1);
    const fs::path dir2 = workdir() / "flagseed";
    fs::remove_all(dir2);
    CHECK(run("gen-data --scenario nominal --n 3 --seed 9 --quiet --out " + dir2.string()) == 0);

    std::ifstream a(dir / "profiles.csv"), b(dir2 / "profiles.csv");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
}
