#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snowpipe/gridstack.hpp"
#include "snowpipe/model.hpp"

namespace snowpipe {

double pearson(std::span<const double> a, std::span<const double> b);
double rmse(std::span<const double> a, std::span<const double> b);
double r2(std::span<const double> pred, std::span<const double> truth);
double mean_bias(std::span<const double> pred, std::span<const double> truth);

struct EvalReport {
    std::string regime_label;
    std::size_t n = 0;
    double pearson_r = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double mean_bias = 0.0;  // mean(pred - truth), m
    bool debiased = false;
};

EvalReport evaluate(std::span<const double> pred, std::span<const double> truth, std::string label,
                    bool debiased = false);

void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
std::string summary_line(const EvalReport& r);

// x = lidar truth, y = prediction. counts[ix * nbins_y + iy].
struct Histogram2D {
    std::size_t nbins_x = 0;
    std::size_t nbins_y = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_out_of_range = 0;

    std::uint64_t count(std::size_t ix, std::size_t iy) const { return counts[ix * nbins_y + iy]; }
    std::uint64_t total() const;
};

struct HistogramRange {
    double lo = 0.0;
    double hi = 2.5;
};

inline constexpr std::size_t kDefaultHistogramBins = 60;

// Same bins and range on both axes; a value equal to the upper edge lands in
// the last bin. Pairs with either coordinate outside the range (or NaN) are
// tallied in n_out_of_range.
Histogram2D residual_histogram(std::span<const double> pred, std::span<const double> truth,
                               std::size_t nbins = kDefaultHistogramBins, HistogramRange range = {});

void write_histogram_csv(const Histogram2D& h, const std::filesystem::path& path);
// 8-bit greyscale, count scaled by the maximum count; prediction axis points up.
void write_histogram_pgm(const Histogram2D& h, const std::filesystem::path& path);

struct SplitSpec {
    enum class Kind { None, Holdout, SpatialHalf };
    enum class Axis { Row, Col };

    Kind kind = Kind::None;
    double fraction = 0.2;     // holdout: share of pixels sent to test
    std::uint64_t seed = 42;   // holdout permutation, stream::kHoldout
    Axis axis = Axis::Row;
    double boundary = 0.5;     // spatial_half: train on index < floor(boundary * extent)

    static SplitSpec none() { return {}; }
    static SplitSpec holdout(double test_fraction, std::uint64_t seed);
    static SplitSpec spatial_half(Axis axis, double boundary);

    std::string describe() const;
};

struct PixelSplit {
    PixelMask train;
    PixelMask test;
};

PixelSplit split_pixels(const PixelMask& valid, const SplitSpec& spec, std::uint32_t width, std::uint32_t height);

struct RegimeResult {
    MlpModel model;
    EvalReport train;
    EvalReport test;
    PixelMask test_pixels;
    std::vector<double> test_pred;
    std::vector<double> test_truth;
};

struct RegimeOptions {
    TrainConfig config;
    bool debias = false;
    bool with_los = false;
    std::string label = "regime";
};

// Split kind None: transfer, train on every valid pixel of train_stack and
// test on every valid pixel of test_stack (required). Holdout/SpatialHalf:
// the split partitions pixels of the shared grid; training rows come from
// train_stack and test rows from test_stack (defaults to train_stack).
RegimeResult run_regime(const SceneStack& train_stack, const SceneStack* test_stack, const SplitSpec& split,
                        const RegimeOptions& options);

} // namespace snowpipe
