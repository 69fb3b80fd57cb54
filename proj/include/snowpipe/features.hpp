#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "snowpipe/gridstack.hpp"

namespace snowpipe {

inline constexpr std::size_t kChannelCount = 21;

// Frozen channel order. Reordering or renaming is a format break for model
// files and feature dumps.
inline constexpr std::array<const char*, kChannelCount> kChannelLayout = {
    "phase_mean",
    "amplitude_t0", "amplitude_t1", "amplitude_t2", "amplitude_t3", "amplitude_t4", "amplitude_t5",
    "amplitude_t6", "amplitude_t7", "amplitude_t8", "amplitude_t9", "amplitude_t10", "amplitude_t11",
    "amplitude_mean",
    "coherence_mean",
    "coherence_std",
    "incidence",
    "slope",
    "aspect",
    "elevation",
    "veg_height",
};

// Optional 22nd channel, appended after the frozen 21.
inline constexpr const char* kLosChannelName = "los_cumulative";

std::vector<std::string> channel_names(bool with_los);

// N pixels x C channels, row-major, with the flat pixel index each row came from.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t channels = kChannelCount;
    std::vector<double> data;
    std::vector<std::size_t> pixel_indices;
    std::vector<double> targets;
    std::vector<std::string> names;

    std::span<const double> row(std::size_t r) const { return {data.data() + r * channels, channels}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * channels, channels}; }
    double at(std::size_t r, std::size_t c) const { return data[r * channels + c]; }

    // Rows picked by position, in the given order.
    FeatureMatrix select(std::span<const std::size_t> positions) const;
};

// Throws MaskNotValid if any masked pixel is NaN in any of the 41 grids.
FeatureMatrix assemble_features(const SceneStack& stack, const PixelMask& mask, bool with_los = false);

// Sum over the 12 acquisitions of unwrapped phase (one value per masked pixel).
std::vector<double> cumulative_los_proxy(const SceneStack& stack, const PixelMask& mask);

struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std;
};

Normalizer fit_normalizer(const FeatureMatrix& train);
FeatureMatrix apply_normalizer(const Normalizer& norm, const FeatureMatrix& m);
void apply_normalizer_inplace(const Normalizer& norm, std::span<double> row);

// Header: channel names then `target`; one line per row, 17 significant digits.
void write_features_csv(const FeatureMatrix& m, std::ostream& out);
void write_features_csv(const FeatureMatrix& m, const std::filesystem::path& path);

} // namespace snowpipe
