#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace snowpipe {

inline constexpr std::size_t kAcquisitionCount = 12;

// Single-band float32 raster, row-major with the origin at the top-left.
// NaN is the only nodata marker.
struct Grid {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> values;

    Grid() = default;
    Grid(std::uint32_t w, std::uint32_t h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t size() const { return values.size(); }
    float& at(std::uint32_t row, std::uint32_t col) { return values[static_cast<std::size_t>(row) * width + col]; }
    float at(std::uint32_t row, std::uint32_t col) const { return values[static_cast<std::size_t>(row) * width + col]; }
    bool same_shape(const Grid& other) const { return width == other.width && height == other.height; }
    std::size_t valid_count() const;
};

struct Acquisition {
    std::size_t index = 0;
    std::string date_label;
    Grid phase;      // unwrapped, radians
    Grid coherence;  // [0, 1]
    Grid amplitude;
};

struct SceneStack {
    std::vector<Acquisition> acquisitions;
    Grid incidence;   // degrees
    Grid slope;       // degrees
    Grid aspect;      // degrees, [0, 360)
    Grid elevation;   // m
    Grid veg_height;  // m
    Grid target;      // lidar snow depth, m
    double pixel_spacing_m = 80.0;

    std::uint32_t width() const { return target.width; }
    std::uint32_t height() const { return target.height; }

    // The 41 co-registered grids in a fixed order: per acquisition
    // phase/coherence/amplitude, then ancillary, then target.
    std::vector<const Grid*> all_grids() const;
};

// Throws Error (DimensionMismatch, BadAcquisitionCount, ValueOutOfRange) when
// the stack breaks a structural or value invariant.
void validate_stack(const SceneStack& stack);

// Sorted, strictly increasing flat row-major indices.
struct PixelMask {
    std::vector<std::size_t> indices;
    std::size_t size() const { return indices.size(); }
};

PixelMask valid_mask(const SceneStack& stack);

// Raw little-endian float32, no header.
void save_grid(const Grid& grid, const std::filesystem::path& path);
Grid load_grid(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height);

// stack.json plus one .f32 per grid, paths relative to the manifest directory.
SceneStack load_stack(const std::filesystem::path& manifest_path);
void save_stack(const SceneStack& stack, const std::filesystem::path& directory);

} // namespace snowpipe
