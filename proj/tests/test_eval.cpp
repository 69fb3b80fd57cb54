#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"
#include "snowpipe/synth.hpp"

using namespace snowpipe;

namespace {

RegimeOptions labelled(std::string label)
{
    RegimeOptions o;
    o.label = std::move(label);
    return o;
}

RegimeOptions debiased()
{
    RegimeOptions o;
    o.debias = true;
    return o;
}

template <typename F>
ErrorCode code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected snowpipe::Error";
    return ErrorCode::IoError;
}

} // namespace

TEST(Metrics, PerfectCorrelation)
{
    EXPECT_DOUBLE_EQ(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0);
    EXPECT_DOUBLE_EQ(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
}

TEST(Metrics, IdenticalAndMeanPredictions)
{
    const std::vector<double> t{0.2, 1.4, 0.9, 2.2};
    EXPECT_EQ(rmse(t, t), 0.0);
    EXPECT_EQ(r2(t, t), 1.0);
    const double m = (0.2 + 1.4 + 0.9 + 2.2) / 4.0;
    EXPECT_NEAR(r2(std::vector<double>(4, m), t), 0.0, 1e-15);
}

TEST(Metrics, ErrorPaths)
{
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(code_of([&] { pearson(a, std::vector<double>{1, 2}); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { pearson(std::vector<double>{1}, std::vector<double>{1}); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { pearson(a, std::vector<double>{5, 5, 5}); }), ErrorCode::ZeroVariance);
    EXPECT_EQ(code_of([&] { r2(a, std::vector<double>{5, 5, 5}); }), ErrorCode::ZeroVariance);
    EXPECT_EQ(code_of([&] { rmse(a, std::vector<double>{}); }), ErrorCode::LengthMismatch);
}

TEST(Metrics, MatchTextbookFormulas)
{
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = testutil::random_vector(rng, 1000, -3, 3);
        auto b = testutil::random_vector(rng, 1000, -3, 3);
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] += 0.7 * a[i];
        }
        EXPECT_NEAR(pearson(a, b), oracle::pearson(a, b), 1e-12);
        EXPECT_NEAR(rmse(a, b), oracle::rmse(a, b), 1e-12);
        EXPECT_NEAR(r2(a, b), oracle::r2(a, b), 1e-12);
    }
}

TEST(Metrics, PearsonShiftAndScaleInvariance)
{
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testutil::random_vector(rng, 300);
        const auto b = testutil::random_vector(rng, 300);
        const double shift = rng.uniform(-5, 5);
        const double scale = rng.uniform(0.01, 50);
        auto shifted = b;
        auto scaled = b;
        for (std::size_t i = 0; i < b.size(); ++i) {
            shifted[i] += shift;
            scaled[i] *= scale;
        }
        EXPECT_NEAR(pearson(a, shifted), pearson(a, b), 1e-12);
        EXPECT_NEAR(pearson(a, scaled), pearson(a, b), 1e-12);
    }
}

TEST(Metrics, RmseSymmetryAndTriangle)
{
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testutil::random_vector(rng, 50);
        const auto b = testutil::random_vector(rng, 50);
        const auto c = testutil::random_vector(rng, 50);
        EXPECT_EQ(rmse(a, b), rmse(b, a));
        EXPECT_LE(rmse(a, c), rmse(a, b) + rmse(b, c) + 1e-15);
    }
}

TEST(Histogram, DiagonalWhenPredictionsEqualTruth)
{
    Rng rng(4);
    const auto t = testutil::random_vector(rng, 500, 0.0, 2.5);
    const auto h = residual_histogram(t, t, 60, {0.0, 2.5});
    EXPECT_EQ(h.total(), 500u);
    EXPECT_EQ(h.n_out_of_range, 0u);
    for (std::size_t ix = 0; ix < 60; ++ix) {
        for (std::size_t iy = 0; iy < 60; ++iy) {
            if (ix != iy) {
                EXPECT_EQ(h.count(ix, iy), 0u);
            }
        }
    }
}

TEST(Histogram, CenterPairLandsInCenterBin)
{
    const auto h = residual_histogram(std::vector<double>{1.5}, std::vector<double>{1.5}, 3, {0.0, 3.0});
    EXPECT_EQ(h.count(1, 1), 1u);
    EXPECT_EQ(h.total(), 1u);
}

TEST(Histogram, MatchesBruteForceBinning)
{
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = testutil::random_vector(rng, 400, -0.3, 2.8);
        const auto t = testutil::random_vector(rng, 400, -0.3, 2.8);
        const std::size_t bins = 1 + rng.below(12);
        const auto h = residual_histogram(p, t, bins, {0.0, 2.5});
        const auto expected = oracle::brute_force_bins(p, t, bins, 0.0, 2.5);
        std::uint64_t in_range = 0;
        for (std::size_t ix = 0; ix < bins; ++ix) {
            for (std::size_t iy = 0; iy < bins; ++iy) {
                EXPECT_EQ(h.count(ix, iy), expected[ix][iy]);
                in_range += expected[ix][iy];
            }
        }
        EXPECT_EQ(h.total() + h.n_out_of_range, 400u);
        EXPECT_EQ(h.total(), in_range);
    }
}

TEST(Histogram, MarginalsMatchOneDimensionalCounts)
{
    Rng rng(6);
    const auto p = testutil::random_vector(rng, 1000, 0.0, 2.5);
    const auto t = testutil::random_vector(rng, 1000, 0.0, 2.5);
    const std::size_t bins = 10;
    const auto h = residual_histogram(p, t, bins, {0.0, 2.5});
    std::vector<std::uint64_t> truth_1d(bins, 0);
    for (double v : t) {
        truth_1d[std::min<std::size_t>(bins - 1, static_cast<std::size_t>(v / 0.25))]++;
    }
    for (std::size_t ix = 0; ix < bins; ++ix) {
        std::uint64_t row = 0;
        for (std::size_t iy = 0; iy < bins; ++iy) {
            row += h.count(ix, iy);
        }
        EXPECT_EQ(row, truth_1d[ix]);
    }
}

TEST(Histogram, OutOfRangeAndBadRange)
{
    const auto h = residual_histogram(std::vector<double>{-1.0, 1.0, 3.0}, std::vector<double>{1.0, 1.0, 1.0}, 4,
                                      {0.0, 2.5});
    EXPECT_EQ(h.n_out_of_range, 2u);
    EXPECT_EQ(h.total(), 1u);
    EXPECT_EQ(code_of([] { residual_histogram({}, {}, 0, {0.0, 1.0}); }), ErrorCode::BadRange);
    EXPECT_EQ(code_of([] { residual_histogram({}, {}, 5, {1.0, 1.0}); }), ErrorCode::BadRange);
    EXPECT_EQ(code_of([] { residual_histogram({}, {}, 5, {0.0, INFINITY}); }), ErrorCode::BadRange);
}

TEST(Histogram, CsvAndPgmOutputs)
{
    const auto dir = testutil::scratch_dir();
    const auto h = residual_histogram(std::vector<double>{0.1, 0.1, 2.0}, std::vector<double>{0.1, 0.1, 0.2}, 5,
                                      {0.0, 2.5});
    write_histogram_csv(h, dir / "h.csv");
    write_histogram_pgm(h, dir / "h.pgm");
    std::ifstream csv(dir / "h.csv");
    std::string first, second;
    std::getline(csv, first);
    std::getline(csv, second);
    EXPECT_EQ(first.rfind("# nbins_x=5", 0), 0u);
    EXPECT_EQ(second, "bin_x_index,bin_y_index,count");
    std::ifstream pgm(dir / "h.pgm", std::ios::binary);
    std::stringstream bytes;
    bytes << pgm.rdbuf();
    const std::string s = bytes.str();
    ASSERT_EQ(s.rfind("P5\n5 5\n255\n", 0), 0u);
    ASSERT_EQ(s.size(), std::string("P5\n5 5\n255\n").size() + 25);
    // bottom-left bin (truth bin 0, pred bin 0) holds the peak
    EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 5]), 255u);
}

TEST(Split, HoldoutIsDisjointAndCovering)
{
    PixelMask valid;
    for (std::size_t i = 0; i < 1000; i += 3) {
        valid.indices.push_back(i);
    }
    const auto s = split_pixels(valid, SplitSpec::holdout(0.2, 42), 40, 25);
    EXPECT_EQ(s.test.size(), 67u);  // round(0.2 * 334)
    std::vector<std::size_t> all = s.train.indices;
    all.insert(all.end(), s.test.indices.begin(), s.test.indices.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, valid.indices);
    EXPECT_TRUE(std::is_sorted(s.test.indices.begin(), s.test.indices.end()));
    // same seed, same split
    EXPECT_EQ(split_pixels(valid, SplitSpec::holdout(0.2, 42), 40, 25).test.indices, s.test.indices);
    EXPECT_NE(split_pixels(valid, SplitSpec::holdout(0.2, 7), 40, 25).test.indices, s.test.indices);
}

TEST(Split, SpatialHalfByRowAndColumn)
{
    PixelMask valid;
    for (std::size_t i = 0; i < 100; ++i) {
        valid.indices.push_back(i);
    }
    const auto rows = split_pixels(valid, SplitSpec::spatial_half(SplitSpec::Axis::Row, 0.5), 10, 10);
    EXPECT_EQ(rows.train.size(), 50u);
    EXPECT_EQ(rows.train.indices.back(), 49u);
    const auto cols = split_pixels(valid, SplitSpec::spatial_half(SplitSpec::Axis::Col, 0.3), 10, 10);
    EXPECT_EQ(cols.train.size(), 30u);
    for (std::size_t p : cols.train.indices) {
        EXPECT_LT(p % 10, 3u);
    }
    EXPECT_THROW(SplitSpec::holdout(1.0, 1), Error);
    EXPECT_THROW(SplitSpec::spatial_half(SplitSpec::Axis::Row, 0.0), Error);
}

TEST(Report, CsvRows)
{
    const auto dir = testutil::scratch_dir();
    const std::vector<double> p{1, 2, 3.5};
    const std::vector<double> t{1.2, 1.9, 3.0};
    const std::vector<EvalReport> reports{evaluate(p, t, "a:test"), evaluate(p, t, "b:test", true)};
    write_report_csv(reports, dir / "r.csv");
    std::ifstream in(dir / "r.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "regime_label,n,pearson,rmse,r2,mean_bias,debias_flag");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("a:test,3,", 0), 0u);
    EXPECT_EQ(line.back(), '0');
    std::getline(in, line);
    EXPECT_EQ(line.back(), '1');
    EXPECT_NEAR(reports[0].mean_bias, (-0.2 + 0.1 + 0.5) / 3.0, 1e-15);
}

class SyntheticRegimes : public ::testing::Test {
protected:
    static SynthConfig scene_config(std::uint64_t terrain, std::uint64_t season)
    {
        SynthConfig c;
        c.seed = terrain;
        c.season_seed = season;
        c.width = c.height = 96;
        return c;
    }
};

TEST_F(SyntheticRegimes, InDistributionHoldout)
{
    const auto scene = generate_scene(scene_config(7, 7));
    const auto res = run_regime(scene, nullptr, SplitSpec::holdout(0.2, 42), labelled("indist"));
    EXPECT_GE(res.test.pearson_r, 0.9);
    EXPECT_EQ(res.test.n + res.train.n, 96u * 96u);
    EXPECT_EQ(res.test.regime_label, "indist:test");
}

TEST_F(SyntheticRegimes, DebiasRemovesConstantShift)
{
    auto scene = generate_scene(scene_config(7, 7));
    for (float& v : scene.target.values) {
        v = std::ldexp(std::round(std::ldexp(v, 20)), -20);  // keeps the +0.5 shift exact
    }
    auto shifted = scene;
    for (float& v : shifted.target.values) {
        v += 0.5f;
    }
    const auto split = SplitSpec::holdout(0.2, 42);
    const auto base = run_regime(scene, nullptr, split, {});
    const auto moved = run_regime(scene, &shifted, split, {});
    const auto fixed = run_regime(scene, &shifted, split, debiased());

    EXPECT_EQ(base.test_pred, moved.test_pred);
    EXPECT_NEAR(moved.test.pearson_r, base.test.pearson_r, 1e-12);
    EXPECT_GT(moved.test.rmse, 3.0 * base.test.rmse);
    EXPECT_NEAR(fixed.test.rmse, base.test.rmse, 0.1 * base.test.rmse);
    EXPECT_TRUE(fixed.model.centered_targets);
    EXPECT_GT(fixed.model.target_offset, 0.5);
}

TEST_F(SyntheticRegimes, SpatialHalf)
{
    const auto scene = generate_scene(scene_config(7, 7));
    const auto res = run_regime(scene, nullptr, SplitSpec::spatial_half(SplitSpec::Axis::Row, 0.5), {});
    EXPECT_GT(res.test.pearson_r, 0.7);
    EXPECT_GT(res.train.pearson_r, 0.7);
    EXPECT_GE(res.train.pearson_r, res.test.pearson_r);
    for (std::size_t p : res.test_pixels.indices) {
        EXPECT_GE(p / 96, 48u);
    }
}

TEST_F(SyntheticRegimes, TransferNeedsTestStack)
{
    const auto scene = generate_scene(scene_config(7, 7));
    EXPECT_EQ(code_of([&] { run_regime(scene, nullptr, SplitSpec::none(), {}); }), ErrorCode::SchemaError);
}
