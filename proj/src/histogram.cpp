#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"

namespace snowpipe {

std::uint64_t Histogram2D::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

namespace {

std::optional<std::size_t> bin_of(double v, double lo, double hi, std::size_t nbins)
{
    if (!(v >= lo && v <= hi)) {
        return std::nullopt;
    }
    const auto idx = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(nbins)));
    return std::min(idx, nbins - 1);
}

} // namespace

Histogram2D residual_histogram(std::span<const double> pred, std::span<const double> truth, std::size_t nbins,
                               HistogramRange range)
{
    if (pred.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
    }
    if (nbins < 1 || !std::isfinite(range.lo) || !std::isfinite(range.hi) || !(range.lo < range.hi)) {
        throw Error(ErrorCode::BadRange, "histogram needs nbins >= 1 and a finite range with lo < hi");
    }
    Histogram2D h;
    h.nbins_x = h.nbins_y = nbins;
    h.x_min = h.y_min = range.lo;
    h.x_max = h.y_max = range.hi;
    h.counts.assign(nbins * nbins, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto ix = bin_of(truth[i], h.x_min, h.x_max, h.nbins_x);
        const auto iy = bin_of(pred[i], h.y_min, h.y_max, h.nbins_y);
        if (!ix || !iy) {
            ++h.n_out_of_range;
            continue;
        }
        ++h.counts[*ix * h.nbins_y + *iy];
    }
    return h;
}

void write_histogram_csv(const Histogram2D& h, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.precision(17);
    out << "# nbins_x=" << h.nbins_x << " nbins_y=" << h.nbins_y << " x_range=" << h.x_min << ':' << h.x_max
        << " y_range=" << h.y_min << ':' << h.y_max << " n_out_of_range=" << h.n_out_of_range
        << " x=truth y=prediction\n";
    out << "bin_x_index,bin_y_index,count\n";
    for (std::size_t ix = 0; ix < h.nbins_x; ++ix) {
        for (std::size_t iy = 0; iy < h.nbins_y; ++iy) {
            out << ix << ',' << iy << ',' << h.count(ix, iy) << '\n';
        }
    }
}

void write_histogram_pgm(const Histogram2D& h, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    const std::uint64_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
    out << "P5\n" << h.nbins_x << ' ' << h.nbins_y << "\n255\n";
    for (std::size_t row = 0; row < h.nbins_y; ++row) {
        const std::size_t iy = h.nbins_y - 1 - row;
        for (std::size_t ix = 0; ix < h.nbins_x; ++ix) {
            const std::uint64_t c = h.count(ix, iy);
            const auto level = peak == 0 ? 0 : static_cast<unsigned>((c * 255 + peak / 2) / peak);
            out.put(static_cast<char>(level));
        }
    }
}

} // namespace snowpipe
