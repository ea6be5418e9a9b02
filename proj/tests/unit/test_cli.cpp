#include "seqcl/cli.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace seqcl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "seqcl");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path = fs::temp_directory_path() / ("seqcl_cli_" + std::to_string(::getpid()));
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int binary_exit(const std::string& args)
{
    const std::string cmd = std::string(SEQCL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("design, oc and reruns")
{
    TempDir tmp;
    const auto plan = tmp / "plan.json";
    auto r = run({"design", "--kind", "one-sided", "--model", "bernoulli", "--theta0", "0.4", "--theta1", "0.6",
                  "--alpha", "0.05", "--beta", "0.05", "--stages", "5", "--out", plan});
    REQUIRE(r.code == kExitOk);
    CHECK(slurp(plan).find("\"kind\": \"one-sided\"") != std::string::npos);

    r = run({"oc", "--plan", plan, "--grid", "0.3:0.7:0.05"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("theta,accept_prob_0,accept_prob_1,asn,", 0) == 0);
    CHECK(r.out == run({"oc", "--plan", plan, "--grid", "0.3:0.7:0.05"}).out);

    const auto s1 = run({"simulate", "--plan", plan, "--grid", "0.5", "--trials", "2000", "--seed", "5"});
    const auto s2 = run({"simulate", "--plan", plan, "--grid", "0.5", "--trials", "2000", "--seed", "5"});
    REQUIRE(s1.code == kExitOk);
    CHECK(s1.out == s2.out);
    CHECK(s1.out.rfind("# seed=5,trials=2000\n", 0) == 0);

    const auto c = run({"compare", "--plan", plan, "--grid", "0.45,0.55", "--trials", "1000", "--seed", "2"});
    REQUIRE(c.code == kExitOk);
    CHECK(c.out.find("\nsprt,") != std::string::npos);
    CHECK(c.out.find("\nplan,") != std::string::npos);

    r = run({"tune", "--plan", plan, "--tol", "0.01", "--out", tmp / "tuned.json"});
    CHECK(r.code == kExitOk);
    CHECK(slurp(tmp / "tuned.json").find("\"tuning\": {") != std::string::npos);
}

TEST_CASE("multi and two-prop designs")
{
    TempDir tmp;
    auto r = run({"design", "--kind", "multi", "--zones", "0.25:0.4,0.55:0.7", "--risks", "0.05,0.05,0.05",
                  "--stages", "3"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("\"kind\": \"multi\"") != std::string::npos);

    r = run({"design", "--kind", "two-prop", "--zones", "-0.4:0.4", "--risks", "0.1,0.1", "--out", tmp / "tp.json"});
    REQUIRE(r.code == kExitOk);
    r = run({"certify", "--plan", tmp / "tp.json", "--hypothesis", "0", "--csv", tmp / "tp.csv"});
    CHECK((r.code == kExitOk || r.code == kExitFail));
    CHECK(r.out.find("\"verdict\"") != std::string::npos);
    CHECK(slurp(tmp / "tp.csv").rfind("hypothesis,x_lo", 0) == 0);
    CHECK(run({"oc", "--plan", tmp / "tp.json", "--grid", "0.5"}).code == kExitUsage);
}

TEST_CASE("exit codes")
{
    TempDir tmp;
    CHECK(run({"design", "--kind", "one-sided", "--theta0", "0.4", "--theta1", "0.6", "--schedule", "fixed",
               "--sizes", "2,4", "--stages", "2"})
              .code == kExitFail);
    CHECK(run({"design", "--kind", "one-sided", "--theta0", "0.6", "--theta1", "0.4"}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"oc", "--plan", tmp / "missing.json", "--grid", "0.5"}).code == kExitUsage);

    std::ofstream(tmp / "broken.json") << "{ \"schema_version\": 1,\n  nope }\n";
    const auto b = run({"oc", "--plan", tmp / "broken.json", "--grid", "0.5"});
    CHECK(b.code == kExitUsage);
    CHECK(b.err.find("line 2") != std::string::npos);

    REQUIRE(run({"design", "--kind", "one-sided", "--theta0", "0.4", "--theta1", "0.6", "--out", tmp / "p.json"})
                .code == kExitOk);
    CHECK(run({"simulate", "--plan", tmp / "p.json", "--grid", "0.5"}).code == kExitUsage);

    // the installed binary maps the same cases to process exit status
    CHECK(binary_exit("--help") == 0);
    CHECK(binary_exit("oc --plan " + (tmp / "p.json") + " --grid 0.5") == 0);
    CHECK(binary_exit("oc --plan " + (tmp / "broken.json") + " --grid 0.5") == 2);
    CHECK(binary_exit("design --theta0 0.4 --theta1 0.6 --schedule fixed --sizes 2,4 --stages 2") == 1);
}
