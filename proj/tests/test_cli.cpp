#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud_io.hpp"
#include "support/testgen.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

// Runs the installed CLI binary through the shell and captures stdout.
// Pass merge_stderr to fold diagnostics into the captured text.
RunResult run_cli(const std::string& args, bool merge_stderr = false) {
    std::string cmd = std::string(ISMP_CLI_PATH) + " " + args;
    cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return files;
}

struct TmpDir {
    fs::path path;
    explicit TmpDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string str(const std::string& tail) const { return (path / tail).string(); }
};

// Keeps the pipeline runs in this file comfortably under a second each.
const std::string kFastFlags =
    " --centers 16 --patch-k 8 --patch-radius 0.12 --fpfh-k 8 --normals-k 8"
    " --resolution 16 --bins 4 --ransac-iterations 64 --coord-count 128";

}  // namespace

TEST_CASE("help exits cleanly and lists the subcommands") {
    const RunResult r = run_cli("--help");
    CHECK(r.code == 0);
    for (const char* sub : {"gen", "fit", "score", "eval", "project", "filter-sweep", "register"})
        CHECK(r.out.find(sub) != std::string::npos);
}

TEST_CASE("unknown subcommands are a usage error") {
    CHECK(run_cli("frobnicate", true).code == 2);
    CHECK(run_cli("", true).code == 2);  // a subcommand is required
}

TEST_CASE("runtime failures print a structured error line") {
    const RunResult r = run_cli("score --bank no_such.bank --input no_such.xyz", true);
    CHECK(r.code == 1);
    CHECK(r.out.find("error:") != std::string::npos);

    const RunResult k = run_cli("--kernels quantum gen --out cli_tmp_never", true);
    CHECK(k.code == 1);
    CHECK(k.out.find("error:cli:BadKernels") != std::string::npos);
}

TEST_CASE("gen writes the same dataset for the same seed") {
    TmpDir tmp("test_cli_gen");
    auto gen = [&](const std::string& sub, int seed) {
        return run_cli("gen --points 200 --train 2 --test-normal 1 --test-anomalous 1 --seed " +
                       std::to_string(seed) + " --out " + tmp.str(sub));
    };
    const RunResult a = gen("a", 5);
    const RunResult b = gen("b", 5);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out.substr(0, a.out.find('\n')) == b.out.substr(0, b.out.find('\n')));

    const auto ta = tree_bytes(tmp.str("a"));
    const auto tb = tree_bytes(tmp.str("b"));
    CHECK(ta.size() == 6);  // 2 train clouds, 2 test clouds, 2 label files
    CHECK(ta == tb);

    REQUIRE(gen("c", 6).code == 0);
    CHECK(tree_bytes(tmp.str("c")) != ta);
}

TEST_CASE("project renders one raster per slice at the requested resolution") {
    TmpDir tmp("test_cli_project");
    ismp::save_cloud_xyz(testgen::bumpy_cloud(3, 300), tmp.str("cloud.xyz"));
    const RunResult r = run_cli("project --input " + tmp.str("cloud.xyz") + " --out " +
                                tmp.str("slices") + " --resolution 16");
    REQUIRE(r.code == 0);
    for (const char* name : {"P1", "P2", "P3", "P4"}) {
        CHECK(r.out.find(std::string(name) + "=16x16") != std::string::npos);
        const std::string pgm = slurp(tmp.path / "slices" / (std::string(name) + ".pgm"));
        CHECK(pgm.rfind("P5\n16 16\n255\n", 0) == 0);
        CHECK(pgm.size() == std::string("P5\n16 16\n255\n").size() + 16 * 16);
        const std::string stats = slurp(tmp.path / "slices" / (std::string(name) + "_stats.txt"));
        CHECK(stats.find("slice=" + std::string(name)) != std::string::npos);
    }
}

TEST_CASE("filter-sweep reports the identity row for alpha zero") {
    TmpDir tmp("test_cli_sweep");
    ismp::FeatureMatrix m(4, 3);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t d = 0; d < m.dims; ++d) m.at(r, d) = 0.25 * (r + 1) + 0.1 * d;
    ismp::save_feature_matrix(m, tmp.str("m.fm"));
    const RunResult r = run_cli("filter-sweep --input " + tmp.str("m.fm") + " --out " +
                                tmp.str("sweep.csv") + " --alphas 0,0.2 --betas 0.2 --gammas 0.001");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rows=2") != std::string::npos);
    const std::string csv = slurp(tmp.str("sweep.csv"));
    CHECK(csv.find("alpha,beta,gamma,") == 0);
    CHECK(csv.find("\n0,0.2,0.001,0,0\n") != std::string::npos);
}

TEST_CASE("fit then score runs end to end from the shell") {
    TmpDir tmp("test_cli_fit");
    REQUIRE(run_cli("gen --points 200 --train 2 --test-normal 1 --test-anomalous 1 --seed 11 --out " +
                    tmp.str("data"))
                .code == 0);

    const RunResult fit = run_cli("fit --data " + tmp.str("data") + " --out " + tmp.str("w.bank") +
                                  " --manifest " + tmp.str("manifest.txt") + kFastFlags);
    REQUIRE(fit.code == 0);
    CHECK(fit.out.find("config_digest=") == 0);
    CHECK(fit.out.find("bank_rows=32") != std::string::npos);  // 2 clouds x 16 centers
    CHECK(slurp(tmp.str("manifest.txt")).find("timing_ms.") == std::string::npos);

    const RunResult score =
        run_cli("score --bank " + tmp.str("w.bank") + " --input " + tmp.str("data") +
                "/test/good_000.xyz --out " + tmp.str("scores.txt") + kFastFlags);
    REQUIRE(score.code == 0);
    CHECK(score.out.find("object_score=") != std::string::npos);
    std::istringstream lines(slurp(tmp.str("scores.txt")));
    std::size_t count = 0;
    for (std::string line; std::getline(lines, line);) ++count;
    CHECK(count == 200);

    const RunResult eval = run_cli("eval --data " + tmp.str("data") + " --bank " + tmp.str("w.bank") +
                                   " --out " + tmp.str("eval.csv") + kFastFlags);
    REQUIRE(eval.code == 0);
    CHECK(eval.out.find("o_auroc=") != std::string::npos);
    CHECK(slurp(tmp.str("eval.csv")).find("method,category,o_auroc,p_auroc\nismp,") == 0);
}

TEST_CASE("config files feed options and explicit flags still win") {
    TmpDir tmp("test_cli_config");
    REQUIRE(run_cli("gen --points 200 --train 2 --test-normal 1 --test-anomalous 0 --seed 3 --out " +
                    tmp.str("data"))
                .code == 0);
    {
        std::ofstream ini(tmp.str("fit.ini"));
        ini << "[fit]\ncenters=24\npatch-k=8\npatch-radius=0.12\nfpfh-k=8\nnormals-k=8\n"
            << "resolution=16\nbins=4\nransac-iterations=64\ncoord-count=128\n";
    }
    const std::string base = "fit --data " + tmp.str("data") + " --out " + tmp.str("w.bank") +
                             " --config " + tmp.str("fit.ini");
    const RunResult from_file = run_cli(base);
    REQUIRE(from_file.code == 0);
    CHECK(from_file.out.find("bank_rows=48") != std::string::npos);  // 2 x 24

    const RunResult overridden = run_cli(base + " --centers 16");
    REQUIRE(overridden.code == 0);
    CHECK(overridden.out.find("bank_rows=32") != std::string::npos);  // flag beats file
}

TEST_CASE("register recovers the motion between two saved poses") {
    TmpDir tmp("test_cli_register");
    const ismp::PointCloud cloud = testgen::bumpy_cloud(17, 300);
    ismp::RigidTransform move = testgen::axis_angle(0.2, 1.0, -0.4, 0.4);
    move.translation = {0.1, 0.05, -0.2};
    ismp::save_cloud_xyz(cloud, tmp.str("target.xyz"));
    ismp::save_cloud_xyz(ismp::apply_transform(cloud, move), tmp.str("source.xyz"));

    const RunResult r = run_cli(
        "register --source " + tmp.str("source.xyz") + " --target " + tmp.str("target.xyz") +
        " --out " + tmp.str("aligned.xyz") +
        " --centers 48 --patch-k 8 --patch-radius 0.12 --fpfh-k 8 --normals-k 8"
        " --ransac-iterations 512");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rotation=") != std::string::npos);
    CHECK(r.out.find("inlier_fraction=") != std::string::npos);
    CHECK(fs::exists(tmp.path / "aligned.xyz"));
}
