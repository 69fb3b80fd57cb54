#pragma once

#include <cstdint>
#include <optional>

#include "snowpipe/gridstack.hpp"

namespace snowpipe {

// Synthetic scene generator. Not a scattering model: it encodes an invertible
// phase <-> depth relationship plus nuisance channels so the learning
// pipeline can be checked against a known truth.

struct TerrainParams {
    double base_elevation_m = 1800.0;
    double relief_m = 500.0;
    double roughness = 0.55;            // amplitude decay per midpoint-displacement level
    double incidence_deg = 39.0;
    double incidence_slope_coupling = 0.1;  // deg of incidence change per deg of slope facing the radar
    double look_azimuth_deg = 90.0;     // radar looks east
    double veg_max_height_m = 20.0;
    double veg_cover_threshold = 0.55;  // share of the smoothed field left bare
    std::uint32_t veg_patch_radius_px = 3;
};

struct SnowParams {
    double base_depth_m = 1.0;
    double elevation_lapse = 0.0015;  // m of snow per m of elevation above the scene minimum
    double aspect_amplitude_m = 0.2;  // north-facing slopes hold more snow
    double noise_sigma_m = 0.15;
    std::uint32_t correlation_length_px = 4;
};

struct ObservableParams {
    double phase_per_meter = 5.0;          // rad per m of snow accumulation, before the 1/cos(incidence) factor
    double phase_noise_sigma = 0.15;       // rad
    double coherence_base = 0.85;
    double coherence_veg_coeff = 0.02;     // per m of canopy
    double coherence_snow_coeff = 0.5;     // per m of accumulation in the interval
    double backscatter_base = 0.3;
    double backscatter_veg_coeff = 0.03;   // per m of canopy
    double speckle_looks = 16.0;
};

struct SynthConfig {
    std::uint64_t seed = 7;          // terrain and vegetation
    std::uint64_t season_seed = 7;   // snow noise, accumulation schedule, measurement noise
    std::uint32_t width = 128;
    std::uint32_t height = 128;
    double pixel_spacing_m = 80.0;
    TerrainParams terrain;
    SnowParams snow;
    ObservableParams obs;

    void validate() const;
    // Multiplies every depth-generating term, widening the depth range.
    SynthConfig with_depth_scale(double factor) const;
    SynthConfig noise_free() const;
};

struct Terrain {
    Grid elevation;
    Grid slope;       // deg
    Grid aspect;      // deg clockwise from north, [0, 360); 0 on flat cells
    Grid incidence;   // deg
    Grid veg_height;  // m
};

struct SlopeAspect {
    Grid slope;
    Grid aspect;
};

// Horn's 3x3 weighted differences with edge replication:
//   dz/dx = ((c + 2f + i) - (a + 2d + g)) / (8 dx)
//   dz/dy = ((g + 2h + i) - (a + 2b + c)) / (8 dx)   (rows run south)
//   slope = atan(hypot(dz/dx, dz/dy)), aspect = atan2(-dz/dx, dz/dy)
SlopeAspect horn_slope_aspect(const Grid& elevation, double spacing_m);

// Throws TooSmall below 9x9.
Terrain generate_terrain(const SynthConfig& cfg);
Terrain generate_terrain(const SynthConfig& cfg, const Grid& elevation_override);

Grid generate_snow(const SynthConfig& cfg, const Terrain& terrain);

SceneStack simulate_observables(const SynthConfig& cfg, const Terrain& terrain, const Grid& snow);

SceneStack generate_scene(const SynthConfig& cfg);

// Depth-equivalent standard error of the 12-acquisition phase mean,
// sqrt(12) * cos(incidence) * phase_noise_sigma / phase_per_meter, as an RMS
// over the scene. The best achievable RMSE from phase alone.
double depth_noise_floor(const SynthConfig& cfg, const Terrain& terrain);

} // namespace snowpipe
