#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <sstream>

#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"
#include "snowpipe/features.hpp"
#include "snowpipe/rng.hpp"

namespace snowpipe {

SplitSpec SplitSpec::holdout(double test_fraction, std::uint64_t seed)
{
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::BadRange, "holdout fraction must lie in (0, 1)");
    }
    SplitSpec s;
    s.kind = Kind::Holdout;
    s.fraction = test_fraction;
    s.seed = seed;
    return s;
}

SplitSpec SplitSpec::spatial_half(Axis axis, double boundary)
{
    if (!(boundary > 0.0 && boundary < 1.0)) {
        throw Error(ErrorCode::BadRange, "spatial split boundary must lie in (0, 1)");
    }
    SplitSpec s;
    s.kind = Kind::SpatialHalf;
    s.axis = axis;
    s.boundary = boundary;
    return s;
}

std::string SplitSpec::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case Kind::None: os << "transfer"; break;
    case Kind::Holdout: os << "holdout(" << fraction << ",seed=" << seed << ")"; break;
    case Kind::SpatialHalf: os << "spatial_half(" << (axis == Axis::Row ? "row" : "col") << ":" << boundary << ")"; break;
    }
    return os.str();
}

PixelSplit split_pixels(const PixelMask& valid, const SplitSpec& spec, std::uint32_t width, std::uint32_t height)
{
    PixelSplit out;
    switch (spec.kind) {
    case SplitSpec::Kind::None:
        out.train = valid;
        out.test = valid;
        return out;
    case SplitSpec::Kind::Holdout: {
        const std::size_t n = valid.size();
        if (n < 2) {
            throw Error(ErrorCode::TooFewRows, "holdout split needs at least 2 valid pixels");
        }
        std::vector<std::size_t> order = valid.indices;
        Rng rng(spec.seed, stream::kHoldout);
        rng.shuffle(std::span<std::size_t>(order));
        auto n_test = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(n)));
        n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        out.test.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
        std::sort(out.test.indices.begin(), out.test.indices.end());
        std::sort(out.train.indices.begin(), out.train.indices.end());
        break;
    }
    case SplitSpec::Kind::SpatialHalf: {
        const bool by_row = spec.axis == SplitSpec::Axis::Row;
        const std::uint32_t extent = by_row ? height : width;
        const auto cut = static_cast<std::uint32_t>(std::floor(spec.boundary * extent));
        for (std::size_t p : valid.indices) {
            const auto coord = static_cast<std::uint32_t>(by_row ? p / width : p % width);
            (coord < cut ? out.train : out.test).indices.push_back(p);
        }
        break;
    }
    }

    std::vector<std::size_t> both;
    std::set_intersection(out.train.indices.begin(), out.train.indices.end(), out.test.indices.begin(),
                          out.test.indices.end(), std::back_inserter(both));
    if (!both.empty()) {
        throw Error(ErrorCode::DisjointnessViolation,
                    std::to_string(both.size()) + " pixels are in both the train and test sets");
    }
    return out;
}

namespace {

double center(std::vector<double>& values)
{
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    for (auto& v : values) {
        v -= m;
    }
    return m;
}

PixelMask intersect(const PixelMask& a, const PixelMask& b)
{
    PixelMask out;
    std::set_intersection(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
                          std::back_inserter(out.indices));
    return out;
}

} // namespace

RegimeResult run_regime(const SceneStack& train_stack, const SceneStack* test_stack, const SplitSpec& split,
                        const RegimeOptions& options)
{
    const bool transfer = split.kind == SplitSpec::Kind::None;
    if (transfer && test_stack == nullptr) {
        throw Error(ErrorCode::SchemaError, "a transfer regime needs a separate test stack");
    }
    const SceneStack& test_src = test_stack ? *test_stack : train_stack;

    PixelSplit pixels;
    if (transfer) {
        pixels.train = valid_mask(train_stack);
        pixels.test = valid_mask(test_src);
    } else {
        if (!test_src.target.same_shape(train_stack.target)) {
            throw Error(ErrorCode::DimensionMismatch, "split regimes need train and test stacks on the same grid");
        }
        PixelMask valid = valid_mask(train_stack);
        if (test_stack != nullptr && test_stack != &train_stack) {
            valid = intersect(valid, valid_mask(*test_stack));
        }
        pixels = split_pixels(valid, split, train_stack.width(), train_stack.height());
    }

    FeatureMatrix train_rows = assemble_features(train_stack, pixels.train, options.with_los);
    FeatureMatrix test_rows = assemble_features(test_src, pixels.test, options.with_los);

    double offset = 0.0;
    if (options.debias) {
        // Each dataset is centered on its own target mean.
        offset = center(train_rows.targets);
        center(test_rows.targets);
    }

    RegimeResult result;
    result.model = train(options.config, train_rows);
    result.model.centered_targets = options.debias;
    result.model.target_offset = offset;

    const auto train_pred = predict(result.model, train_rows);
    result.train = evaluate(train_pred, train_rows.targets, options.label + ":train", options.debias);
    result.test_pred = predict(result.model, test_rows);
    result.test_truth = test_rows.targets;
    result.test = evaluate(result.test_pred, result.test_truth, options.label + ":test", options.debias);
    result.test_pixels = pixels.test;
    return result;
}

} // namespace snowpipe
