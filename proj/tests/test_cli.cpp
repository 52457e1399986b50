#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pidlft/model.hpp"
#include "pidlft/sparse_tensor.hpp"

namespace fs = std::filesystem;
using namespace pidlft;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Scratch directory shared by all cases in this binary.
const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("pidlft_cli_" + std::to_string(static_cast<long>(::getpid())));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    const fs::path out = scratch() / "stdout.txt";
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = std::string(PIDLFT_CLI_PATH) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Report tables are compared with the timing column removed: timings are
// real measurements and never reproducible.
std::string strip_seconds_column(const std::string& table) {
    std::ostringstream out;
    for (const std::string& line : lines_of(table)) {
        const std::size_t pos = line.rfind(',');
        out << (pos == std::string::npos ? line : line.substr(0, pos)) << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("synth writes the requested tensor") {
    const fs::path coo = scratch() / "synth.coo";
    const RunResult r =
        run_cli("synth --output " + coo.string() + " --shape 6,5,7 --rank 2 --density 0.5 --seed 3");
    REQUIRE(r.exit_code == 0);
    const SparseTensor t = load_coo_file(coo.string());
    CHECK(t.shape() == TensorShape{6, 5, 7});
    CHECK(t.size() == 105);  // floor(0.5 * 210)
}

TEST_CASE("split produces a 2:2:6 partition on disk") {
    const fs::path coo = scratch() / "full.coo";
    REQUIRE(run_cli("synth --output " + coo.string() + " --shape 5,5,4 --rank 2 --density 1 --seed 1")
                .exit_code == 0);
    const fs::path prefix = scratch() / "part";
    const RunResult r = run_cli("split --input " + coo.string() + " --output " + prefix.string() +
                                " --ratios 2,2,6 --seed 9");
    REQUIRE(r.exit_code == 0);

    const SparseTensor train = load_coo_file(prefix.string() + ".train.coo");
    const SparseTensor val = load_coo_file(prefix.string() + ".val.coo");
    const SparseTensor test = load_coo_file(prefix.string() + ".test.coo");
    CHECK(train.size() == 20);
    CHECK(val.size() == 20);
    CHECK(test.size() == 60);
    CHECK(train.shape() == TensorShape{5, 5, 4});
    CHECK(val.shape() == TensorShape{5, 5, 4});

    // Re-running with the same seed reproduces the same files.
    const fs::path prefix2 = scratch() / "part2";
    REQUIRE(run_cli("split --input " + coo.string() + " --output " + prefix2.string() +
                    " --ratios 2,2,6 --seed 9")
                .exit_code == 0);
    CHECK(slurp(prefix.string() + ".train.coo") == slurp(prefix2.string() + ".train.coo"));
    CHECK(slurp(prefix.string() + ".test.coo") == slurp(prefix2.string() + ".test.coo"));
}

TEST_CASE("synth, train, eval pipeline recovers clean low-rank data") {
    const fs::path coo = scratch() / "clean.coo";
    REQUIRE(run_cli("synth --output " + coo.string() +
                    " --shape 10,8,9 --rank 2 --density 0.6 --noise-sd 0 --seed 5")
                .exit_code == 0);

    const fs::path model = scratch() / "clean.model";
    const fs::path test_part = scratch() / "clean.test.coo";
    const RunResult tr = run_cli("train --input " + coo.string() + " --output " + model.string() +
                                 " --test-output " + test_part.string() +
                                 " --ratios 6,2,2 --rank 2 --eta 0.05 --max-epochs 400" +
                                 " --tol 1e-8 --seed 7");
    REQUIRE(tr.exit_code == 0);
    const auto summary = lines_of(tr.out);
    REQUIRE(summary.size() == 2);
    CHECK(summary[0] == "optimizer,epochs,converged,final_val_rmse");
    CHECK(summary[1].rfind("sgd,", 0) == 0);

    const RunResult ev = run_cli("eval --model " + model.string() + " --input " + test_part.string());
    REQUIRE(ev.exit_code == 0);
    const double test_rmse = std::stod(ev.out);
    CHECK(test_rmse < 5e-2);
}

TEST_CASE("proportional-only pid report matches sgd, timing column aside") {
    const fs::path coo = scratch() / "echo.coo";
    REQUIRE(run_cli("synth --output " + coo.string() +
                    " --shape 7,6,5 --rank 2 --density 0.7 --noise-sd 0.05 --seed 11")
                .exit_code == 0);

    const std::string common = "train --input " + coo.string() + " --ratios 6,2,2 --rank 2" +
                               " --eta 0.02 --max-epochs 40 --seed 13";
    const fs::path m1 = scratch() / "echo1.model";
    const fs::path m2 = scratch() / "echo2.model";
    const fs::path r1 = scratch() / "echo1.csv";
    const fs::path r2 = scratch() / "echo2.csv";

    REQUIRE(run_cli(common + " --optimizer sgd --output " + m1.string() + " --report " +
                    r1.string())
                .exit_code == 0);
    REQUIRE(run_cli(common + " --optimizer pid_nonlinear --kp 1 --ki 0 --kd 0 --output " +
                    m2.string() + " --report " + r2.string())
                .exit_code == 0);

    CHECK(strip_seconds_column(slurp(r1)) == strip_seconds_column(slurp(r2)));
    CHECK(slurp(m1) == slurp(m2));  // identical parameters, byte for byte
}

TEST_CASE("impute echoes model predictions for queried cells") {
    const fs::path coo = scratch() / "imp.coo";
    REQUIRE(run_cli("synth --output " + coo.string() + " --shape 4,4,4 --rank 2 --density 1 --seed 2")
                .exit_code == 0);
    const fs::path model = scratch() / "imp.model";
    REQUIRE(run_cli("train --input " + coo.string() + " --output " + model.string() +
                    " --ratios 6,2,2 --rank 2 --eta 0.05 --max-epochs 30 --seed 3")
                .exit_code == 0);

    const fs::path queries = scratch() / "imp.queries";
    {
        std::ofstream q(queries);
        q << "i,j,k\n0,0,0\n3,2,1\n1,3,3\n";
    }
    const fs::path out = scratch() / "imp.out.coo";
    REQUIRE(run_cli("impute --model " + model.string() + " --input " + queries.string() +
                    " --output " + out.string())
                .exit_code == 0);

    const Model m = load_model_file(model.string());
    const SparseTensor got = load_coo_file(out.string());
    REQUIRE(got.size() == 3);
    CHECK(got.shape() == m.shape());
    for (const Entry& e : got.entries()) {
        CHECK(e.value == m.predict(e.i, e.j, e.k));  // 17 digits round-trip exactly
    }

    // Queries outside the trained shape are refused.
    {
        std::ofstream q(queries);
        q << "9,0,0\n";
    }
    const RunResult bad = run_cli("impute --model " + model.string() + " --input " +
                                  queries.string() + " --output " + out.string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("compare emits a summary row and a report per variant") {
    const fs::path coo = scratch() / "cmp.coo";
    REQUIRE(run_cli("synth --output " + coo.string() +
                    " --shape 6,5,6 --rank 2 --density 0.8 --noise-sd 0.05 --seed 17")
                .exit_code == 0);
    const fs::path prefix = scratch() / "cmp";
    const RunResult r = run_cli("compare --input " + coo.string() + " --ratios 6,2,2 --rank 2" +
                                " --eta 0.02 --max-epochs 20 --seed 19 --output " +
                                prefix.string() +
                                " --variants sgd,pid_linear,pid_nonlinear --ki 0.05 --kd 0.05");
    REQUIRE(r.exit_code == 0);
    const auto summary = lines_of(r.out);
    REQUIRE(summary.size() == 4);
    CHECK(summary[0] == "name,final_val_rmse,test_rmse,epochs,seconds");
    CHECK(summary[1].rfind("sgd,", 0) == 0);
    CHECK(summary[2].rfind("pid_linear,", 0) == 0);
    CHECK(summary[3].rfind("pid_nonlinear,", 0) == 0);
    for (const char* name : {"sgd", "pid_linear", "pid_nonlinear"}) {
        const fs::path report = prefix.string() + "." + name + ".csv";
        CHECK(fs::exists(report));
        CHECK(lines_of(slurp(report)).at(0) == "epoch,train_rmse,val_rmse,seconds");
    }
}

TEST_CASE("config file supplies defaults and flags win over it") {
    const fs::path cfg = scratch() / "synth.toml";
    {
        std::ofstream f(cfg);
        f << "[synth]\ndensity=0.4\nseed=21\n";
    }
    const fs::path coo = scratch() / "cfg.coo";

    REQUIRE(run_cli("synth --output " + coo.string() + " --shape 5,5,4 --rank 2 --config " +
                    cfg.string())
                .exit_code == 0);
    CHECK(load_coo_file(coo.string()).size() == 40);  // floor(0.4 * 100)

    REQUIRE(run_cli("synth --output " + coo.string() + " --shape 5,5,4 --rank 2 --config " +
                    cfg.string() + " --density 0.8")
                .exit_code == 0);
    CHECK(load_coo_file(coo.string()).size() == 80);  // flag overrides the file
}

TEST_CASE("failures exit nonzero with a diagnostic") {
    const RunResult missing = run_cli("train --input /nonexistent.coo --output -");
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);

    const RunResult bad_flag = run_cli("train --input x --output y --optimizer adam");
    CHECK(bad_flag.exit_code != 0);

    const RunResult no_sub = run_cli("");
    CHECK(no_sub.exit_code != 0);
}
