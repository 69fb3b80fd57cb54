#include "snowpipe/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "snowpipe/error.hpp"

namespace snowpipe {

std::vector<std::string> channel_names(bool with_los)
{
    std::vector<std::string> names(kChannelLayout.begin(), kChannelLayout.end());
    if (with_los) {
        names.emplace_back(kLosChannelName);
    }
    return names;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> positions) const
{
    FeatureMatrix out;
    out.rows = positions.size();
    out.channels = channels;
    out.names = names;
    out.data.resize(out.rows * channels);
    out.pixel_indices.resize(out.rows);
    out.targets.resize(out.rows);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t src = positions[i];
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(src * channels), channels,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * channels));
        out.pixel_indices[i] = pixel_indices[src];
        out.targets[i] = targets[src];
    }
    return out;
}

namespace {

void check_mask(const SceneStack& stack, const PixelMask& mask)
{
    const auto grids = stack.all_grids();
    const std::size_t n = stack.target.size();
    for (std::size_t p : mask.indices) {
        if (p >= n) {
            throw Error(ErrorCode::MaskNotValid, "pixel " + std::to_string(p) + " outside the grid");
        }
        for (const Grid* g : grids) {
            if (std::isnan(g->values[p])) {
                throw Error(ErrorCode::MaskNotValid, "pixel " + std::to_string(p) + " has nodata");
            }
        }
    }
}

} // namespace

FeatureMatrix assemble_features(const SceneStack& stack, const PixelMask& mask, bool with_los)
{
    validate_stack(stack);
    check_mask(stack, mask);

    FeatureMatrix m;
    m.rows = mask.size();
    m.channels = with_los ? kChannelCount + 1 : kChannelCount;
    m.names = channel_names(with_los);
    m.data.assign(m.rows * m.channels, 0.0);
    m.pixel_indices = mask.indices;
    m.targets.resize(m.rows);

    constexpr double kN = static_cast<double>(kAcquisitionCount);
    const auto& acqs = stack.acquisitions;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const std::size_t p = mask.indices[r];
        auto out = m.row(r);

        double phase_sum = 0.0;
        double amp_sum = 0.0;
        double coh_sum = 0.0;
        for (std::size_t k = 0; k < kAcquisitionCount; ++k) {
            const double amp = acqs[k].amplitude.values[p];
            phase_sum += acqs[k].phase.values[p];
            amp_sum += amp;
            coh_sum += acqs[k].coherence.values[p];
            out[1 + k] = amp;
        }
        const double coh_mean = coh_sum / kN;
        double coh_ss = 0.0;
        for (std::size_t k = 0; k < kAcquisitionCount; ++k) {
            const double d = acqs[k].coherence.values[p] - coh_mean;
            coh_ss += d * d;
        }

        out[0] = phase_sum / kN;
        out[13] = amp_sum / kN;
        out[14] = coh_mean;
        out[15] = std::sqrt(coh_ss / kN);
        out[16] = stack.incidence.values[p];
        out[17] = stack.slope.values[p];
        out[18] = stack.aspect.values[p];
        out[19] = stack.elevation.values[p];
        out[20] = stack.veg_height.values[p];
        if (with_los) {
            out[21] = phase_sum;
        }
        m.targets[r] = stack.target.values[p];
    }
    return m;
}

std::vector<double> cumulative_los_proxy(const SceneStack& stack, const PixelMask& mask)
{
    validate_stack(stack);
    check_mask(stack, mask);
    std::vector<double> proxy(mask.size(), 0.0);
    for (std::size_t r = 0; r < mask.size(); ++r) {
        double sum = 0.0;
        for (const auto& acq : stack.acquisitions) {
            sum += acq.phase.values[mask.indices[r]];
        }
        proxy[r] = sum;
    }
    return proxy;
}

Normalizer fit_normalizer(const FeatureMatrix& train)
{
    if (train.rows < 2) {
        throw Error(ErrorCode::TooFewRows, "normalizer needs at least 2 rows, got " + std::to_string(train.rows));
    }
    const std::size_t c = train.channels;
    const auto n = static_cast<double>(train.rows);
    Normalizer norm{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
    for (std::size_t r = 0; r < train.rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
            norm.mean[j] += train.at(r, j);
        }
    }
    for (auto& v : norm.mean) {
        v /= n;
    }
    for (std::size_t r = 0; r < train.rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
            const double d = train.at(r, j) - norm.mean[j];
            norm.std[j] += d * d;
        }
    }
    for (auto& v : norm.std) {
        v = std::sqrt(v / n);
        // zero-variance channel: pass through centered
        if (!(v > 0.0)) {
            v = 1.0;
        }
    }
    return norm;
}

void apply_normalizer_inplace(const Normalizer& norm, std::span<double> row)
{
    if (row.size() != norm.mean.size()) {
        throw Error(ErrorCode::ShapeMismatch, "row has " + std::to_string(row.size()) + " channels, normalizer " +
                                                  std::to_string(norm.mean.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = (row[j] - norm.mean[j]) / norm.std[j];
    }
}

FeatureMatrix apply_normalizer(const Normalizer& norm, const FeatureMatrix& m)
{
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < out.rows; ++r) {
        apply_normalizer_inplace(norm, out.row(r));
    }
    return out;
}

void write_features_csv(const FeatureMatrix& m, std::ostream& out)
{
    for (const auto& name : m.names) {
        out << name << ',';
    }
    out << "target\n";
    char buf[32];
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (double v : m.row(r)) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", m.targets[r]);
        out << buf;
    }
}

void write_features_csv(const FeatureMatrix& m, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    write_features_csv(m, out);
}

} // namespace snowpipe
