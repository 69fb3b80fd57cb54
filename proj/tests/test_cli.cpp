#include <sys/wait.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snowpipe/gridstack.hpp"

using namespace snowpipe;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& dir)
{
    const std::string cmd = std::string("\"") + SNOWPIPE_CLI + "\" " + args + " > \"" + (dir / "cli.log").string() +
                            "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = testutil::scratch_dir();
        ASSERT_EQ(run("synth --size 32x24 --seed 3 --out " + q(dir / "scene"), dir), 0) << slurp(dir / "cli.log");
    }
    fs::path stack() const { return dir / "scene" / "stack.json"; }
    fs::path dir;
};

} // namespace

TEST_F(Cli, FeaturesCsvShape)
{
    ASSERT_EQ(run("features --stack " + q(stack()) + " --out " + q(dir / "f.csv"), dir), 0);
    std::ifstream in(dir / "f.csv");
    std::string line;
    std::size_t lines = 0;
    std::getline(in, line);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 21);
    while (std::getline(in, line)) {
        ++lines;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 21);
    }
    EXPECT_EQ(lines, 32u * 24u);

    ASSERT_EQ(run("features --with-los-channel --stack " + q(stack()) + " --out " + q(dir / "g.csv"), dir), 0);
    std::ifstream g(dir / "g.csv");
    std::getline(g, line);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 22);
}

TEST_F(Cli, TrainPredictEvaluate)
{
    // knock out two pixels so predict has to leave them as nodata
    auto s = load_stack(stack());
    s.acquisitions[4].coherence.values[10] = NAN;
    s.veg_height.values[100] = NAN;
    save_stack(s, dir / "holes");
    const fs::path holes = dir / "holes" / "stack.json";

    ASSERT_EQ(run("train --max-epochs 5 --stack " + q(holes) + " --out " + q(dir / "m.json") + " --report " +
                      q(dir / "r.csv"),
                  dir),
              0)
        << slurp(dir / "cli.log");
    EXPECT_NE(slurp(dir / "r.csv").find("full:train,766,"), std::string::npos) << slurp(dir / "r.csv");

    ASSERT_EQ(run("predict --model " + q(dir / "m.json") + " --stack " + q(holes) + " --out " + q(dir / "p.f32"), dir),
              0);
    const Grid p = load_grid(dir / "p.f32", 32, 24);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(std::isnan(p.values[i]), i == 10 || i == 100) << i;
    }

    ASSERT_EQ(run("evaluate --model " + q(dir / "m.json") + " --stack " + q(holes) + " --report " + q(dir / "e.csv") +
                      " --hist " + q(dir / "h.csv") + " --pgm " + q(dir / "h.pgm") + " --bins 10",
                  dir),
              0)
        << slurp(dir / "cli.log");
    EXPECT_NE(slurp(dir / "e.csv").find("evaluate,766,"), std::string::npos);
    EXPECT_EQ(slurp(dir / "h.pgm").rfind("P5\n10 10\n255\n", 0), 0u);
}

TEST_F(Cli, HistogramOfTruthAgainstItselfIsDiagonal)
{
    const fs::path target = dir / "scene" / "target.f32";
    ASSERT_EQ(run("histogram --pred " + q(target) + " --truth " + q(target) +
                      " --size 32x24 --bins 8 --range 0:4 --hist " + q(dir / "d.csv"),
                  dir),
              0)
        << slurp(dir / "cli.log");
    std::ifstream in(dir / "d.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::uint64_t total = 0;
    int ix, iy;
    unsigned long long c;
    char comma;
    while (in >> ix >> comma >> iy >> comma >> c) {
        if (c > 0) {
            EXPECT_EQ(ix, iy);
        }
        total += c;
    }
    EXPECT_EQ(total, 32u * 24u);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run("train --stack " + q(stack()) + " --out " + q(dir / "m.json") +
                      " --holdout 0.2 --spatial-half row:0.5",
                  dir),
              1);
    EXPECT_EQ(run("train --stack " + q(stack()) + " --out " + q(dir / "m.json") + " --holdout 1.5", dir), 1);
    EXPECT_EQ(run("frobnicate", dir), 1);
    EXPECT_EQ(run("train --stack " + q(dir / "nope.json") + " --out " + q(dir / "m.json"), dir), 2);

    fs::remove(dir / "scene" / "slope.f32");
    EXPECT_EQ(run("features --stack " + q(stack()) + " --out " + q(dir / "f.csv"), dir), 2);
}

TEST_F(Cli, RepeatedTrainingIsByteIdentical)
{
    const std::string args = "train --max-epochs 8 --holdout 0.2 --stack " + q(stack()) + " --report " +
                             q(dir / "r.csv") + " --out ";
    ASSERT_EQ(run(args + q(dir / "a.json"), dir), 0);
    ASSERT_EQ(run(args + q(dir / "b.json"), dir), 0);
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
    EXPECT_FALSE(slurp(dir / "a.json").empty());
}
