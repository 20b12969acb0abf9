#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "neumann/cli.hpp"

using namespace neumann;
namespace fs = std::filesystem;

namespace {

struct Result {
    int rc = 0;
    std::string out, err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Result r;
    r.rc = run_command(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int occurrences(const std::string& text, const std::string& needle)
{
    int n = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() / ("neumann-cli-" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

} // namespace

TEST_F(Cli, PartitionJsonRect2x1Mode32)
{
    const auto json = (dir / "out.json").string();
    const auto r = run({"partition", "--domain", "rect:2,1", "--n", "3", "--m", "2", "--resolution", "512", "--json",
                        json, "--no-verify"});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_NE(r.out.find("(match)"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(json));
    EXPECT_EQ(j["counts"]["total"], 17);
    EXPECT_EQ(j["counts"]["inner"], 7);
    EXPECT_EQ(j["counts"]["boundary"], 10);
    EXPECT_EQ(j["resolution"], 512);
    EXPECT_EQ(j["domains"].size(), 17u);
    EXPECT_TRUE(j["lines"]["polylines"].is_array());
    EXPECT_EQ(counts_from_json(j["counts"]), (DomainCounts{17, 7, 10}));
    double area = 0.0;
    for (const auto& d : j["domains"]) area += d["area"].get<double>();
    EXPECT_NEAR(area, 2.0, 1e-3);
}

TEST_F(Cli, JsonRoundTripMatchesCountReport)
{
    const auto f = Eigenfunction::disk(1, 2);
    const auto report = count_domains(f);
    const auto back = counts_from_json(nlohmann::json::parse(counts_json(report.labelled).dump()));
    EXPECT_EQ(back, report.labelled);
}

TEST_F(Cli, PartitionWithVerification)
{
    const auto r = run({"partition", "--domain", "disk", "--n", "1", "--m", "1"});
    EXPECT_EQ(r.rc, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("counts: total 3, inner 1, boundary 2"), std::string::npos) << r.out;
}

TEST_F(Cli, RenderRect2x1Mode32HasSeventeenDomains)
{
    const auto svg = (dir / "u32.svg").string();
    const auto r = run({"render", "--domain", "rect:2,1", "--n", "3", "--m", "2", "--svg", svg});
    ASSERT_EQ(r.rc, 0) << r.err;
    const std::string text = slurp(svg);
    EXPECT_EQ(occurrences(text, "<path class=\"boundary-domain\""), 10);
    EXPECT_EQ(occurrences(text, "<path class=\"inner-domain\""), 7);
    EXPECT_EQ(occurrences(text, "<path class=\"nodal-line\""), 1);
    EXPECT_NE(text.find("stroke-dasharray"), std::string::npos);
    EXPECT_GT(occurrences(text, "<path class=\"neumann-line\""), 0);
    EXPECT_EQ(occurrences(text, "<circle class=\"critical-circle\""), 0);
}

TEST_F(Cli, RenderRadialModeHasOneCircle)
{
    const auto a = (dir / "a.svg").string(), b = (dir / "b.svg").string();
    ASSERT_EQ(run({"render", "--domain", "disk", "--n", "0", "--m", "2", "--svg", a}).rc, 0);
    ASSERT_EQ(run({"render", "--domain", "disk", "--n", "0", "--m", "2", "--svg", b}).rc, 0);
    const std::string text = slurp(a);
    EXPECT_EQ(occurrences(text, "<circle class=\"critical-circle\""), 1);
    EXPECT_EQ(text, slurp(b));
}

TEST_F(Cli, JsonIsDeterministic)
{
    const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
    const std::vector<std::string> base{"partition", "--domain", "rect:1,1.618033988749895", "--n", "2", "--m", "1"};
    auto with = [&](const std::string& p) {
        auto v = base;
        v.insert(v.end(), {"--json", p});
        return v;
    };
    ASSERT_EQ(run(with(a)).rc, 0);
    ASSERT_EQ(run(with(b)).rc, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_TRUE(nlohmann::json::parse(slurp(a)).contains("verification"));
}

TEST_F(Cli, Constants)
{
    const auto r = run({"constants"});
    EXPECT_EQ(r.rc, 0);
    EXPECT_NE(r.out.find("rectangle: 1.27323954474"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("disk: 0.9226"), std::string::npos) << r.out;
}

TEST_F(Cli, CountTableDisk)
{
    const auto r = run({"count-table", "--domain", "disk", "--nmax", "3", "--mmax", "2"});
    EXPECT_EQ(r.rc, 0) << r.out;
    const auto l = lines(r.out);
    ASSERT_EQ(l.size(), 9u);
    EXPECT_EQ(l[0], "n,m,mu_formula,mu_labeled,match");
    for (std::size_t i = 1; i < l.size(); ++i) EXPECT_TRUE(l[i].ends_with(",true")) << l[i];
    EXPECT_EQ(l[1], "0,1,1,1,true");
}

TEST_F(Cli, ModesAndZeros)
{
    auto r = run({"modes", "--domain", "square:1", "--count", "3"});
    ASSERT_EQ(r.rc, 0);
    auto l = lines(r.out);
    ASSERT_EQ(l.size(), 4u);
    EXPECT_TRUE(l[1].starts_with("1,1,1,"));

    r = run({"specfun", "zeros", "--n", "0", "--count", "3"});
    ASSERT_EQ(r.rc, 0);
    l = lines(r.out);
    ASSERT_EQ(l.size(), 4u);
    EXPECT_TRUE(l[1].starts_with("0,1,2.40482555769")) << l[1];
}

TEST_F(Cli, CriticalAndFlow)
{
    auto r = run({"critical", "--domain", "rect:2,1", "--n", "3", "--m", "2"});
    ASSERT_EQ(r.rc, 0);
    EXPECT_EQ(occurrences(r.out, "saddle"), 12);

    r = run({"flow", "--domain", "square:1", "--seed", "0.25,0.5", "--direction", "forward"});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_NE(r.out.find("hit-dirichlet"), std::string::npos);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run({}).rc, 1);
    EXPECT_EQ(run({"bogus"}).rc, 1);
    EXPECT_EQ(run({"constants", "--frobnicate"}).rc, 1);
    EXPECT_EQ(run({"partition", "--domain", "triangle"}).rc, 1);
    EXPECT_EQ(run({"partition", "--domain", "rect:1,1", "--resolution", "-3"}).rc, 1);
    EXPECT_EQ(run({"flow", "--domain", "disk", "--seed", "2,0"}).rc, 1);
    EXPECT_EQ(run({"partition", "--domain", "rect:2,1", "--n", "6", "--m", "6", "--resolution", "100"}).rc, 1);
    const auto r = run({"partition", "--domain", "square:1", "--no-verify", "--json", "/nonexistent-dir/x/out.json"});
    EXPECT_EQ(r.rc, 1);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({"render", "--domain", "square:1"}).rc, 1);
}
