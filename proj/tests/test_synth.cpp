#include <cmath>
#include <cstring>
#include <numeric>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"
#include "snowpipe/features.hpp"
#include "snowpipe/synth.hpp"

using namespace snowpipe;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SynthConfig small(std::uint32_t size = 48)
{
    SynthConfig c;
    c.width = c.height = size;
    return c;
}

Grid plane(std::uint32_t w, std::uint32_t h, double dzdx, double dzdy, double spacing)
{
    Grid g(w, h);
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            g.values[y * w + x] = static_cast<float>(2000.0 + dzdx * spacing * x + dzdy * spacing * y);
        }
    }
    return g;
}

} // namespace

TEST(Horn, FlatTerrain)
{
    const auto sa = horn_slope_aspect(Grid(16, 16, 1500.0f), 80.0);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_EQ(sa.slope.values[i], 0.0f);
        EXPECT_EQ(sa.aspect.values[i], 0.0f);
    }
}

TEST(Horn, TiltedPlaneInterior)
{
    // rises 0.1 m per m toward +x (east): slope atan(0.1), downslope faces west
    const auto sa = horn_slope_aspect(plane(12, 10, 0.1, 0.0, 30.0), 30.0);
    for (std::uint32_t y = 1; y + 1 < 10; ++y) {
        for (std::uint32_t x = 1; x + 1 < 12; ++x) {
            EXPECT_NEAR(sa.slope.values[y * 12 + x], std::atan(0.1) / kDeg, 1e-3);
            EXPECT_NEAR(sa.aspect.values[y * 12 + x], 270.0, 1e-3);
        }
    }
    // rises toward +y (south in row order): downslope faces north
    const auto north = horn_slope_aspect(plane(12, 10, 0.0, 0.2, 30.0), 30.0);
    EXPECT_NEAR(north.slope.values[5 * 12 + 5], std::atan(0.2) / kDeg, 1e-3);
    const float a = north.aspect.values[5 * 12 + 5];
    EXPECT_TRUE(a < 1e-3f || a > 360.0f - 1e-3f) << a;
}

TEST(Horn, AspectRange)
{
    const auto t = generate_terrain(small());
    for (std::size_t i = 0; i < t.aspect.size(); ++i) {
        EXPECT_GE(t.aspect.values[i], 0.0f);
        EXPECT_LT(t.aspect.values[i], 360.0f);
        EXPECT_GE(t.slope.values[i], 0.0f);
        EXPECT_LT(t.slope.values[i], 90.0f);
        EXPECT_GE(t.incidence.values[i], 5.0f);
        EXPECT_LE(t.incidence.values[i], 85.0f);
    }
}

TEST(Synth, DeterministicPerSeed)
{
    const auto a = generate_scene(small());
    const auto b = generate_scene(small());
    const auto ga = a.all_grids();
    const auto gb = b.all_grids();
    for (std::size_t i = 0; i < ga.size(); ++i) {
        EXPECT_EQ(0, std::memcmp(ga[i]->values.data(), gb[i]->values.data(), ga[i]->values.size() * sizeof(float)));
    }
    auto other = small();
    other.seed = 8;
    EXPECT_NE(generate_scene(other).elevation.values, a.elevation.values);
}

TEST(Synth, SeasonSeedKeepsTerrain)
{
    auto c = small();
    const auto a = generate_scene(c);
    c.season_seed = 99;
    const auto b = generate_scene(c);
    EXPECT_EQ(a.elevation.values, b.elevation.values);
    EXPECT_EQ(a.veg_height.values, b.veg_height.values);
    EXPECT_NE(a.target.values, b.target.values);
}

TEST(Synth, FlatDepthWithoutTerms)
{
    auto c = small().noise_free();
    c.snow.elevation_lapse = 0.0;
    c.snow.aspect_amplitude_m = 0.0;
    const auto s = generate_scene(c);
    for (float d : s.target.values) {
        EXPECT_EQ(d, 1.0f);
    }
}

TEST(Synth, DepthGrowsWithElevation)
{
    auto c = small().noise_free();
    c.snow.aspect_amplitude_m = 0.0;
    const auto s = generate_scene(c);
    std::vector<std::size_t> order(s.target.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto i, auto j) { return s.elevation.values[i] < s.elevation.values[j]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        EXPECT_LE(s.target.values[order[k - 1]], s.target.values[order[k]]);
    }
}

TEST(Synth, ZeroSnowGivesZeroPhase)
{
    auto c = small().noise_free();
    c.snow.base_depth_m = 0.0;
    c.snow.elevation_lapse = 0.0;
    c.snow.aspect_amplitude_m = 0.0;
    const auto s = generate_scene(c);
    for (const auto& a : s.acquisitions) {
        for (float v : a.phase.values) {
            EXPECT_EQ(v, 0.0f);
        }
    }
}

TEST(Synth, DefaultSceneStatistics)
{
    const auto s = generate_scene(small(64));
    const auto m = valid_mask(s);
    EXPECT_EQ(m.size(), 64u * 64u);
    double sum = 0.0, lo = 1e9, hi = -1e9;
    for (float d : s.target.values) {
        sum += d;
        lo = std::min<double>(lo, d);
        hi = std::max<double>(hi, d);
    }
    const double mean = sum / s.target.size();
    EXPECT_GT(mean, 1.0);
    EXPECT_LT(mean, 2.5);
    EXPECT_GE(lo, 0.0);
    EXPECT_GT(hi - lo, 0.5);
    std::size_t vegetated = 0;
    for (float v : s.veg_height.values) {
        vegetated += v > 0.0f;
        EXPECT_LE(v, 20.0f);
    }
    EXPECT_GT(vegetated, 0u);
    EXPECT_LT(vegetated, s.veg_height.size());
}

TEST(Synth, NoiseFreePhaseMeanRecoversDepth)
{
    const auto c = SynthConfig{}.noise_free();
    const auto s = generate_scene(c);
    const auto m = assemble_features(s, valid_mask(s));
    std::vector<double> phase_mean(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        phase_mean[r] = m.at(r, 0);
        const double cos_inc = std::cos(m.at(r, 16) * kDeg);
        EXPECT_NEAR(12.0 * cos_inc * m.at(r, 0) / c.obs.phase_per_meter, m.targets[r], 1e-5);
    }
    // identifiability: the phase channel alone tracks depth
    EXPECT_GT(pearson(phase_mean, m.targets), 0.999);
}

TEST(Synth, NoiseFloorFormula)
{
    auto c = small();
    c.terrain.incidence_slope_coupling = 0.0;
    const auto t = generate_terrain(c);
    EXPECT_NEAR(depth_noise_floor(c, t), std::sqrt(12.0) * std::cos(39.0 * kDeg) * 0.15 / 5.0, 1e-7);
}

TEST(Synth, ConfigValidation)
{
    auto c = small();
    c.width = 8;
    EXPECT_THROW(generate_scene(c), Error);
    try {
        generate_scene(c);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooSmall);
    }
    c = small(9);
    EXPECT_NO_THROW(generate_scene(c));
    c = small();
    EXPECT_THROW(generate_terrain(c, Grid(10, 10)), Error);
}
