#include "flexamg/cli.hpp"
#include "flexamg/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace flexamg;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "flexamg");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string &name) {
    auto p = std::filesystem::temp_directory_path() / ("flexamg_cli_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("problem strings") {
    const ProblemSpec p = parse_problem("poisson:32:1e-3,1,1");
    CHECK(p.kind == ProblemSpec::Kind::Poisson);
    CHECK(p.poisson.nd == 32);
    CHECK(p.poisson.c1 == 1e-3);
    CHECK(p.poisson.c3 == 1.0);
    CHECK(parse_problem("poisson:4").poisson.c2 == 1.0);
    const ProblemSpec t = parse_problem("timestep:16:3:0.02,0.5,10");
    CHECK(t.kind == ProblemSpec::Kind::Timestep);
    CHECK(t.step == 3);
    CHECK(t.timestep.decay == 0.5);
    CHECK(t.build().nrows() == 4096);
    CHECK(parse_problem("mtx:/a/b:c.mtx").path == "/a/b:c.mtx");
    CHECK_THROWS_AS(parse_problem("poisson:x"), ValidationError);
    CHECK_THROWS_AS(parse_problem("poisson:4:1,1"), ValidationError);
    CHECK_THROWS_AS(parse_problem("heat:4"), ValidationError);
}

TEST_CASE("eval writes one CSV row per problem") {
    const Run r = cli({"eval", "--solver", "default", "--problem", "poisson:8:1e-3,1,1", "--problem", "poisson:6"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header == "solver,problem,N,rho,wu_total,converged");
    CHECK(row1.rfind("default,\"poisson:8:1e-3,1,1\",", 0) == 0);
    CHECK(row2.rfind("default,poisson:6,", 0) == 0);
    CHECK(row1.back() == '1');
    CHECK(cli({"eval", "--problem", "poisson:6"}).out == cli({"eval", "--problem", "poisson:6"}).out);
}

TEST_CASE("exit codes") {
    CHECK(cli({"eval", "--solver", "tuned42"}).code == 2);
    CHECK(cli({"eval", "--problem", "poisson:0"}).code == 2);
    CHECK(cli({"eval", "--no-such-flag"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"eval", "--cycle", "/nonexistent/file.cycle"}).code == 2);
    CHECK(cli({"gen-problem", "--problem", "mtx:/nonexistent.mtx", "--out", "/tmp/x.mtx"}).code != 0);
}

TEST_CASE("config files fill unset options") {
    const auto dir = scratch("config");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ok.json") << R"({"eval": {"problem": ["poisson:5"], "max_iter": 3}})";
    const Run r = cli({"--config", (dir / "ok.json").string(), "eval"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("poisson:5,3,") != std::string::npos);
    // Command-line flags win.
    const Run r2 = cli({"--config", (dir / "ok.json").string(), "eval", "--max-iter", "2"});
    CHECK(r2.out.find("poisson:5,2,") != std::string::npos);
    std::ofstream(dir / "bad.json") << R"({"eval": {"max_iter": "lots"}})";
    const Run bad = cli({"--config", (dir / "bad.json").string(), "eval"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("/eval/max_iter") != std::string::npos);
    std::ofstream(dir / "broken.json") << "{";
    CHECK(cli({"--config", (dir / "broken.json").string(), "eval"}).code == 2);
}

TEST_CASE("cycle files round trip through export-dot and eval") {
    const auto dir = scratch("cycle");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "c.cycle") << "cycle top=L2 std=L1\nrelax L2 gsf l1 lex\nrestrict L2\nvsolve L1\ncgc L2\n";
    const Run dot = cli({"export-dot", "--cycle", (dir / "c.cycle").string()});
    REQUIRE(dot.code == 0);
    CHECK(dot.out.rfind("digraph", 0) == 0);
    const Run ev = cli({"eval", "--cycle", (dir / "c.cycle").string(), "--problem", "poisson:6"});
    CHECK(ev.code == 0);
    const Run vshape = cli({"export-dot", "--solver", "default", "--problem", "poisson:8"});
    CHECK(vshape.out.find("gray80") != std::string::npos);
    CHECK(vshape.out.find("lvl0") != std::string::npos);
}

TEST_CASE("spectrum and time-step drivers") {
    const Run sp = cli({"spectrum", "--problem", "poisson:4"});
    REQUIRE(sp.code == 0);
    CHECK(sp.out.rfind("re,im\n", 0) == 0);
    const Run ts = cli({"timesteps", "--nd", "6", "--kmax", "3", "--precond", "hybrid"});
    REQUIRE(ts.code == 0);
    CHECK(ts.out.rfind("k,parity,N,wu_total,switched,eta\n1,odd,", 0) == 0);
    CHECK(cli({"timesteps", "--precond", "magic"}).code == 2);
    const Run hy = cli({"hybrid", "--problem", "timestep:6:1"});
    CHECK(hy.code == 0);
}

TEST_CASE("evolve output is reproducible") {
    const auto d1 = scratch("evo1"), d2 = scratch("evo2");
    const std::vector<std::string> base{"--seed", "5", "evolve", "--problem", "poisson:6:1e-3,1,1", "--mu", "6",
                                        "--lambda", "6", "--rho0", "12", "--generations", "2", "--init-depth", "16"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out-dir", d1.string()});
    b.insert(b.end(), {"--out-dir", d2.string()});
    const Run ra = cli(a), rb = cli(b);
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(ra.out == rb.out);
    CHECK(slurp(d1 / "generations.jsonl") == slurp(d2 / "generations.jsonl"));
    CHECK(slurp(d1 / "front.csv") == slurp(d2 / "front.csv"));
    CHECK_FALSE(slurp(d1 / "generations.jsonl").empty());
    std::size_t cycles = 0;
    for (const auto &e : std::filesystem::directory_iterator(d1 / "cycles")) cycles += e.path().extension() == ".cycle";
    CHECK(cycles > 0);
    CHECK(cli({"evolve", "--preset", "huge"}).code == 2);
}
