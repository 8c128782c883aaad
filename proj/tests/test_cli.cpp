#include "gcgm/cli.hpp"
#include "gcgm/loss.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gcgm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = gcgm::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gcgm_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<fs::path> files_with_prefix(const fs::path& dir, const std::string& prefix) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename().string().rfind(prefix, 0) == 0) out.push_back(e.path());
    }
    return out;
}

}  // namespace

TEST_CASE("help and bad options") {
    CHECK(cli({"--help"}).code == gcgm::kExitOk);
    CHECK(cli({"synthetic", "--penalty", "nope"}).code == gcgm::kExitError);
    CHECK(cli({"frobnicate"}).code == gcgm::kExitError);
}

TEST_CASE("synthetic runs are byte-reproducible without timing") {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    const auto ra = cli({"synthetic", "--iters", "300", "--lambda", "0.1,1", "--no-timing", "--out", a.string()});
    const auto rb = cli({"synthetic", "--iters", "300", "--lambda", "0.1,1", "--no-timing", "--out", b.string()});
    REQUIRE(ra.code == gcgm::kExitOk);
    CHECK(ra.out == rb.out);
    CHECK(ra.out.find("lambda=0.1 ") != std::string::npos);
    CHECK(ra.out.find("lambda=1 ") != std::string::npos);
    const auto traces = files_with_prefix(a, "trace-");
    REQUIRE(traces.size() == 2);
    for (const auto& t : traces) CHECK(slurp(t) == slurp(b / t.filename()));
    CHECK(files_with_prefix(a, "events-").size() == 2);
    CHECK(files_with_prefix(a, "certificate-").size() == 2);
    CHECK(files_with_prefix(a, "run-").size() == 2);
    CHECK(slurp(traces[0]).rfind("t,objective,gap,min_gap,sigma,active_atoms,nonzeros,xi,elapsed_s\n", 0) == 0);
}

TEST_CASE("an unbounded scalar step exits with the divergence code") {
    const fs::path dir = fresh_dir("unbounded");
    gcgm::DataMatrix data{gcgm::Matrix::Ones(1, 1), gcgm::Vector::Constant(1, 2.0)};
    gcgm::save_data_csv(data, (dir / "one.csv").string());
    const auto r = cli({"synthetic", "--data", (dir / "one.csv").string(), "--loss", "quadratic", "--alpha", "1",
                        "--lambda", "1", "--iters", "10", "--out", dir.string()});
    CHECK(r.code == gcgm::kExitDiverged);
    CHECK(r.out.find("status=unbounded-step") != std::string::npos);
}

TEST_CASE("malformed input files exit with the format code") {
    const fs::path dir = fresh_dir("format");
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "2 1\n1,2\nzz\n";
    }
    const auto r = cli({"synthetic", "--data", (dir / "bad.csv").string(), "--out", dir.string()});
    CHECK(r.code == gcgm::kExitFormat);
    CHECK(r.err.find("format error") != std::string::npos);
    CHECK(cli({"mnist", "--images", (dir / "none").string(), "--labels", (dir / "none").string(), "--out",
               dir.string()})
              .code == gcgm::kExitFormat);
}

TEST_CASE("config files are read and flags override them") {
    const fs::path dir = fresh_dir("config");
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "iters=50\nlambda=0.01,1\nno-timing=true\n";
    }
    const auto r = cli({"synthetic", "--config", (dir / "run.ini").string(), "--out", dir.string()});
    REQUIRE(r.code == gcgm::kExitOk);
    CHECK(r.out.find("lambda=0.01 ") != std::string::npos);
    CHECK(r.out.find(" t=50 ") != std::string::npos);
    const auto o = cli({"synthetic", "--config", (dir / "run.ini").string(), "--iters", "20", "--out", dir.string()});
    REQUIRE(o.code == gcgm::kExitOk);
    CHECK(o.out.find(" t=20 ") != std::string::npos);
}

TEST_CASE("reference, residuals and rate pipeline") {
    const fs::path dir = fresh_dir("pipeline");
    const std::vector<std::string> common = {"--n", "40", "--d", "10", "--lambda", "1", "--out", dir.string()};
    auto with = [&](std::vector<std::string> head) {
        head.insert(head.end(), common.begin(), common.end());
        return head;
    };
    const auto ref = cli(with({"reference", "--iters", "100000"}));
    REQUIRE(ref.code == gcgm::kExitOk);
    const auto refs = files_with_prefix(dir, "reference-");
    REQUIRE(refs.size() == 1);

    const auto res = cli(with({"residuals", "--iters", "2000", "--no-timing", "--reference", refs[0].string()}));
    REQUIRE(res.code == gcgm::kExitOk);
    CHECK(res.out.find("identified_at=") != std::string::npos);
    const auto series = files_with_prefix(dir, "residuals-");
    REQUIRE(series.size() == 1);

    const auto rate = cli({"rate", "--input", series[0].string(), "--column", "gap", "--t-lo", "100", "--t-hi", "2000"});
    REQUIRE(rate.code == gcgm::kExitOk);
    CHECK(std::stod(rate.out) < -0.9);

    // a reference of another problem is refused
    const auto other = cli({"residuals", "--n", "40", "--d", "10", "--lambda", "2", "--iters", "10", "--reference",
                            refs[0].string(), "--out", dir.string()});
    CHECK(other.code == gcgm::kExitError);
    CHECK(cli({"rate", "--input", series[0].string(), "--column", "nope"}).code == gcgm::kExitFormat);
}
