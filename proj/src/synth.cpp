#include "snowpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snowpipe/error.hpp"
#include "snowpipe/rng.hpp"

namespace snowpipe {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Separable box blur with edge replication, `passes` times.
std::vector<double> box_blur(std::vector<double> field, std::uint32_t w, std::uint32_t h, std::uint32_t radius,
                             int passes)
{
    if (radius == 0) {
        return field;
    }
    std::vector<double> tmp(field.size());
    const auto r = static_cast<std::int64_t>(radius);
    const double norm = 1.0 / static_cast<double>(2 * r + 1);
    auto clampi = [](std::int64_t v, std::int64_t hi) { return std::clamp<std::int64_t>(v, 0, hi - 1); };
    for (int pass = 0; pass < passes; ++pass) {
        for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
                double s = 0.0;
                for (std::int64_t k = -r; k <= r; ++k) {
                    s += field[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(clampi(x + k, w))];
                }
                tmp[static_cast<std::size_t>(y) * w + x] = s * norm;
            }
        }
        for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
                double s = 0.0;
                for (std::int64_t k = -r; k <= r; ++k) {
                    s += tmp[static_cast<std::size_t>(clampi(y + k, h)) * w + x];
                }
                field[static_cast<std::size_t>(y) * w + x] = s * norm;
            }
        }
    }
    return field;
}

void standardize(std::vector<double>& v)
{
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / n);
    for (double& x : v) {
        x = sd > 0.0 ? (x - mean) / sd : 0.0;
    }
}

// Diamond-square on a (2^k + 1)^2 lattice, cropped to w x h.
std::vector<double> midpoint_displacement(std::uint32_t w, std::uint32_t h, double roughness, Rng& rng)
{
    std::uint32_t size = 1;
    while (size + 1 < std::max(w, h)) {
        size *= 2;
    }
    const std::uint32_t n = size + 1;
    std::vector<double> z(static_cast<std::size_t>(n) * n, 0.0);
    auto at = [&](std::uint32_t y, std::uint32_t x) -> double& { return z[static_cast<std::size_t>(y) * n + x]; };

    at(0, 0) = rng.uniform(-1.0, 1.0);
    at(0, size) = rng.uniform(-1.0, 1.0);
    at(size, 0) = rng.uniform(-1.0, 1.0);
    at(size, size) = rng.uniform(-1.0, 1.0);

    double amp = 1.0;
    for (std::uint32_t step = size; step > 1; step /= 2) {
        const std::uint32_t half = step / 2;
        for (std::uint32_t y = half; y < n; y += step) {
            for (std::uint32_t x = half; x < n; x += step) {
                const double avg =
                    (at(y - half, x - half) + at(y - half, x + half) + at(y + half, x - half) + at(y + half, x + half)) /
                    4.0;
                at(y, x) = avg + amp * rng.uniform(-1.0, 1.0);
            }
        }
        for (std::uint32_t y = 0; y < n; y += half) {
            for (std::uint32_t x = (y / half) % 2 == 0 ? half : 0; x < n; x += step) {
                double sum = 0.0;
                int cnt = 0;
                if (y >= half) { sum += at(y - half, x); ++cnt; }
                if (y + half < n) { sum += at(y + half, x); ++cnt; }
                if (x >= half) { sum += at(y, x - half); ++cnt; }
                if (x + half < n) { sum += at(y, x + half); ++cnt; }
                at(y, x) = sum / cnt + amp * rng.uniform(-1.0, 1.0);
            }
        }
        amp *= roughness;
    }

    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(y) * w + x] = at(y, x);
        }
    }
    return out;
}

Grid to_grid(const std::vector<double>& v, std::uint32_t w, std::uint32_t h)
{
    Grid g(w, h);
    for (std::size_t i = 0; i < v.size(); ++i) {
        g.values[i] = static_cast<float>(v[i]);
    }
    return g;
}

Terrain derive_terrain(const SynthConfig& cfg, Grid elevation)
{
    const std::uint32_t w = cfg.width;
    const std::uint32_t h = cfg.height;
    Terrain t;
    auto sa = horn_slope_aspect(elevation, cfg.pixel_spacing_m);
    t.elevation = std::move(elevation);
    t.slope = std::move(sa.slope);
    t.aspect = std::move(sa.aspect);

    // Slopes facing the radar (aspect opposite the look azimuth) see a
    // steeper local incidence.
    t.incidence = Grid(w, h);
    const double facing = cfg.terrain.look_azimuth_deg + 180.0;
    for (std::size_t i = 0; i < t.incidence.size(); ++i) {
        const double tilt = t.slope.values[i] * std::cos((t.aspect.values[i] - facing) * kDeg);
        const double inc = cfg.terrain.incidence_deg - cfg.terrain.incidence_slope_coupling * tilt;
        t.incidence.values[i] = static_cast<float>(std::clamp(inc, 5.0, 85.0));
    }

    Rng veg_rng(cfg.seed, stream::kVegetation);
    std::vector<double> field(static_cast<std::size_t>(w) * h);
    for (auto& v : field) {
        v = veg_rng.normal();
    }
    field = box_blur(std::move(field), w, h, cfg.terrain.veg_patch_radius_px, 3);
    standardize(field);
    // Standardized field -> uniform-ish cover fraction via a logistic squash.
    t.veg_height = Grid(w, h);
    const double thr = cfg.terrain.veg_cover_threshold;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double u = 1.0 / (1.0 + std::exp(-1.7 * field[i]));
        const double cover = std::max(0.0, (u - thr) / (1.0 - thr));
        t.veg_height.values[i] = static_cast<float>(cfg.terrain.veg_max_height_m * cover);
    }
    return t;
}

} // namespace

void SynthConfig::validate() const
{
    const bool ok = width >= 9 && height >= 9;
    if (!ok) {
        throw Error(ErrorCode::TooSmall, "synthetic scenes need at least 9x9 pixels");
    }
    const bool params_ok = pixel_spacing_m > 0.0 && snow.noise_sigma_m >= 0.0 && obs.phase_noise_sigma >= 0.0 &&
                           obs.coherence_base >= 0.0 && obs.coherence_base <= 1.0 && obs.coherence_veg_coeff >= 0.0 &&
                           obs.coherence_snow_coeff >= 0.0 && obs.speckle_looks > 0.0 && obs.phase_per_meter > 0.0 &&
                           terrain.relief_m >= 0.0 && terrain.veg_max_height_m >= 0.0 &&
                           terrain.veg_cover_threshold >= 0.0 && terrain.veg_cover_threshold < 1.0;
    if (!params_ok) {
        throw Error(ErrorCode::BadRange, "synthetic scene parameters out of range");
    }
}

SynthConfig SynthConfig::with_depth_scale(double factor) const
{
    SynthConfig c = *this;
    c.snow.base_depth_m *= factor;
    c.snow.elevation_lapse *= factor;
    c.snow.aspect_amplitude_m *= factor;
    c.snow.noise_sigma_m *= factor;
    return c;
}

SynthConfig SynthConfig::noise_free() const
{
    SynthConfig c = *this;
    c.snow.noise_sigma_m = 0.0;
    c.obs.phase_noise_sigma = 0.0;
    return c;
}

SlopeAspect horn_slope_aspect(const Grid& elevation, double spacing_m)
{
    const std::uint32_t w = elevation.width;
    const std::uint32_t h = elevation.height;
    SlopeAspect out{Grid(w, h), Grid(w, h)};
    auto z = [&](std::int64_t y, std::int64_t x) -> double {
        y = std::clamp<std::int64_t>(y, 0, h - 1);
        x = std::clamp<std::int64_t>(x, 0, w - 1);
        return elevation.values[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const double a = z(y - 1, x - 1), b = z(y - 1, x), c = z(y - 1, x + 1);
            const double d = z(y, x - 1), f = z(y, x + 1);
            const double g = z(y + 1, x - 1), hh = z(y + 1, x), i = z(y + 1, x + 1);
            const double dzdx = ((c + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * spacing_m);
            const double dzdy = ((g + 2.0 * hh + i) - (a + 2.0 * b + c)) / (8.0 * spacing_m);
            const std::size_t idx = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
            out.slope.values[idx] = static_cast<float>(std::atan(std::hypot(dzdx, dzdy)) / kDeg);
            double asp = 0.0;
            if (dzdx != 0.0 || dzdy != 0.0) {
                asp = std::atan2(-dzdx, dzdy) / kDeg;
                if (asp < 0.0) {
                    asp += 360.0;
                }
            }
            float stored = static_cast<float>(asp);
            if (stored >= 360.0f) {
                stored = 0.0f;
            }
            out.aspect.values[idx] = stored;
        }
    }
    return out;
}

Terrain generate_terrain(const SynthConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed, stream::kTerrain);
    std::vector<double> surface = midpoint_displacement(cfg.width, cfg.height, cfg.terrain.roughness, rng);
    const auto [lo, hi] = std::minmax_element(surface.begin(), surface.end());
    const double span = *hi - *lo;
    const double lo_v = *lo;
    for (double& v : surface) {
        v = cfg.terrain.base_elevation_m + (span > 0.0 ? (v - lo_v) / span : 0.0) * cfg.terrain.relief_m;
    }
    return derive_terrain(cfg, to_grid(surface, cfg.width, cfg.height));
}

Terrain generate_terrain(const SynthConfig& cfg, const Grid& elevation_override)
{
    cfg.validate();
    if (elevation_override.width != cfg.width || elevation_override.height != cfg.height) {
        throw Error(ErrorCode::DimensionMismatch, "elevation override does not match the configured size");
    }
    return derive_terrain(cfg, elevation_override);
}

Grid generate_snow(const SynthConfig& cfg, const Terrain& terrain)
{
    const std::uint32_t w = terrain.elevation.width;
    const std::uint32_t h = terrain.elevation.height;
    const std::size_t n = terrain.elevation.size();
    const SnowParams& s = cfg.snow;

    std::vector<double> noise(n, 0.0);
    if (s.noise_sigma_m > 0.0) {
        Rng rng(cfg.season_seed, stream::kSnowNoise);
        for (auto& v : noise) {
            v = rng.normal();
        }
        noise = box_blur(std::move(noise), w, h, s.correlation_length_px, 3);
        standardize(noise);
    }

    const float min_elev = *std::min_element(terrain.elevation.values.begin(), terrain.elevation.values.end());
    Grid depth(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = s.base_depth_m + s.elevation_lapse * (terrain.elevation.values[i] - min_elev) +
                         s.aspect_amplitude_m * std::cos(terrain.aspect.values[i] * kDeg) + s.noise_sigma_m * noise[i];
        depth.values[i] = static_cast<float>(std::max(0.0, d));
    }
    return depth;
}

SceneStack simulate_observables(const SynthConfig& cfg, const Terrain& terrain, const Grid& snow)
{
    const std::uint32_t w = snow.width;
    const std::uint32_t h = snow.height;
    const std::size_t n = snow.size();
    const ObservableParams& o = cfg.obs;

    SceneStack stack;
    stack.pixel_spacing_m = cfg.pixel_spacing_m;
    stack.incidence = terrain.incidence;
    stack.slope = terrain.slope;
    stack.aspect = terrain.aspect;
    stack.elevation = terrain.elevation;
    stack.veg_height = terrain.veg_height;
    stack.target = snow;

    // Accumulation schedule: a scene-wide storm weight per interval,
    // jittered per pixel, normalized so the increments sum to the depth.
    Rng inc_rng(cfg.season_seed, stream::kIncrements);
    std::array<double, kAcquisitionCount> storm{};
    for (auto& s : storm) {
        s = inc_rng.uniform(0.2, 1.8);
    }
    std::vector<double> increments(n * kAcquisitionCount);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        double* row = increments.data() + i * kAcquisitionCount;
        for (std::size_t k = 0; k < kAcquisitionCount; ++k) {
            row[k] = storm[k] * inc_rng.uniform(0.7, 1.3);
            total += row[k];
        }
        for (std::size_t k = 0; k < kAcquisitionCount; ++k) {
            row[k] = static_cast<double>(snow.values[i]) * row[k] / total;
        }
    }

    Rng phase_rng(cfg.season_seed, stream::kPhaseNoise);
    Rng speckle_rng(cfg.season_seed, stream::kSpeckle);
    for (std::size_t k = 0; k < kAcquisitionCount; ++k) {
        Acquisition acq;
        acq.index = k;
        acq.date_label = "interval_" + std::to_string(k);
        acq.phase = Grid(w, h);
        acq.coherence = Grid(w, h);
        acq.amplitude = Grid(w, h);
        for (std::size_t i = 0; i < n; ++i) {
            const double dk = increments[i * kAcquisitionCount + k];
            const double cos_inc = std::cos(static_cast<double>(terrain.incidence.values[i]) * kDeg);
            const double veg = terrain.veg_height.values[i];
            const double noise = o.phase_noise_sigma > 0.0 ? o.phase_noise_sigma * phase_rng.normal() : 0.0;
            acq.phase.values[i] = static_cast<float>(o.phase_per_meter * dk / cos_inc + noise);
            acq.coherence.values[i] = static_cast<float>(
                std::clamp(o.coherence_base - o.coherence_veg_coeff * veg - o.coherence_snow_coeff * std::abs(dk), 0.0, 1.0));
            const double mean_backscatter = o.backscatter_base * cos_inc * cos_inc * (1.0 + o.backscatter_veg_coeff * veg);
            const double speckle = speckle_rng.gamma(o.speckle_looks) / o.speckle_looks;
            acq.amplitude.values[i] = static_cast<float>(mean_backscatter * speckle);
        }
        stack.acquisitions.push_back(std::move(acq));
    }
    validate_stack(stack);
    return stack;
}

SceneStack generate_scene(const SynthConfig& cfg)
{
    const Terrain terrain = generate_terrain(cfg);
    const Grid snow = generate_snow(cfg, terrain);
    return simulate_observables(cfg, terrain, snow);
}

double depth_noise_floor(const SynthConfig& cfg, const Terrain& terrain)
{
    const double per_unit_cos =
        std::sqrt(static_cast<double>(kAcquisitionCount)) * cfg.obs.phase_noise_sigma / cfg.obs.phase_per_meter;
    double ss = 0.0;
    for (float inc : terrain.incidence.values) {
        const double e = per_unit_cos * std::cos(static_cast<double>(inc) * kDeg);
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(terrain.incidence.size()));
}

} // namespace snowpipe
