#include <cmath>
#include <limits>
#include <numeric>

#include "snowpipe/error.hpp"
#include "snowpipe/model.hpp"
#include "snowpipe/rng.hpp"

namespace snowpipe {

std::string to_string(StopReason r)
{
    return r == StopReason::EarlyStop ? "early_stop" : "max_epochs";
}

void TrainConfig::validate() const
{
    const bool ok = learning_rate > 0.0 && alpha >= 0.0 && max_epochs >= 1 && patience >= 1 &&
                    val_fraction > 0.0 && val_fraction < 1.0 && batch_size >= 1 && tol >= 0.0 &&
                    lr_decay_factor >= 1.0 && lr_patience >= 1 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 &&
                    adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0;
    if (!ok) {
        throw Error(ErrorCode::SchemaError, "training configuration out of range");
    }
}

namespace {

void gather(const FeatureMatrix& m, std::span<const std::size_t> rows, std::vector<double>& x,
            std::vector<double>& y)
{
    const std::size_t c = m.channels;
    x.resize(rows.size() * c);
    y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), x.begin() + static_cast<std::ptrdiff_t>(i * c));
        y[i] = m.targets[rows[i]];
    }
}

} // namespace

MlpModel train(const TrainConfig& config, const FeatureMatrix& features)
{
    config.validate();
    if (features.rows < 20) {
        throw Error(ErrorCode::TooFewRows, "training needs at least 20 rows, got " + std::to_string(features.rows));
    }
    const std::size_t n = features.rows;

    // Validation hold-out: the tail of a seeded permutation.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(config.seed, stream::kValidationSplit);
    split_rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.val_fraction)));
    const std::size_t n_train = n - n_val;

    const FeatureMatrix raw_train = features.select(std::span<const std::size_t>(order).first(n_train));
    const FeatureMatrix raw_val = features.select(std::span<const std::size_t>(order).subspan(n_train));

    MlpModel model;
    model.channel_layout = features.names;
    model.config = config;
    model.normalizer = fit_normalizer(raw_train);
    const FeatureMatrix train_set = apply_normalizer(model.normalizer, raw_train);
    const FeatureMatrix val_set = apply_normalizer(model.normalizer, raw_val);

    const auto sizes = default_layer_sizes(features.channels);
    MlpParams params = init_params(config.seed, sizes);
    AdamState adam = AdamState::zeros_like(params);
    MlpParams best = params;
    double best_val = std::numeric_limits<double>::infinity();

    TrainReport& report = model.report;
    report.train_rows = n_train;
    report.val_rows = n_val;

    Rng batch_rng(config.seed, stream::kBatchOrder);
    std::vector<std::size_t> batch_order(n_train);
    std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
    std::vector<double> bx;
    std::vector<double> by;

    double lr = config.learning_rate;
    std::size_t stalled = 0;
    std::size_t lr_stalled = 0;
    report.stop_reason = StopReason::MaxEpochs;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        batch_rng.shuffle(std::span<std::size_t>(batch_order));
        double weighted = 0.0;
        for (std::size_t start = 0; start < n_train; start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, n_train - start);
            gather(train_set, std::span<const std::size_t>(batch_order).subspan(start, count), bx, by);
            const LossGradient lg = loss_and_gradient(params, bx, by, config.alpha);
            if (!std::isfinite(lg.loss)) {
                throw Error(ErrorCode::NonFiniteLoss, "non-finite training loss in epoch " + std::to_string(epoch) +
                                                          " at batch offset " + std::to_string(start) +
                                                          ", lr=" + std::to_string(lr));
            }
            adam_step(params, lg.gradient, adam, lr, config.adam);
            weighted += lg.loss * static_cast<double>(count);
        }
        const double train_loss = weighted / static_cast<double>(n_train);
        const double val_loss = loss(params, val_set.data, val_set.targets, 0.0);
        if (!std::isfinite(val_loss)) {
            throw Error(ErrorCode::NonFiniteLoss, "non-finite validation loss in epoch " + std::to_string(epoch));
        }
        report.train_loss.push_back(train_loss);
        report.val_loss.push_back(val_loss);
        report.learning_rate.push_back(lr);
        report.epochs_run = epoch;

        const bool improved = val_loss < best_val - config.tol;
        if (val_loss < best_val) {
            best_val = val_loss;
            best = params;
            report.best_epoch = epoch;
        }
        if (improved) {
            stalled = 0;
            lr_stalled = 0;
            continue;
        }
        ++stalled;
        if (++lr_stalled >= config.lr_patience) {
            lr /= config.lr_decay_factor;
            lr_stalled = 0;
        }
        if (stalled >= config.patience) {
            report.stop_reason = StopReason::EarlyStop;
            break;
        }
    }

    model.params = std::move(best);
    report.final_learning_rate = lr;
    return model;
}

std::vector<double> predict_rows(const MlpModel& model, std::span<const double> rows)
{
    const std::size_t c = model.params.input_width();
    if (c == 0 || rows.size() % c != 0 || model.normalizer.mean.size() != c) {
        throw Error(ErrorCode::ShapeMismatch, "rows do not match the model's " + std::to_string(c) + " channels");
    }
    std::vector<double> normalized(rows.begin(), rows.end());
    for (std::size_t start = 0; start < normalized.size(); start += c) {
        apply_normalizer_inplace(model.normalizer, std::span<double>(normalized).subspan(start, c));
    }
    return forward_batch(model.params, normalized);
}

std::vector<double> predict(const MlpModel& model, const FeatureMatrix& features)
{
    if (features.channels != model.params.input_width()) {
        throw Error(ErrorCode::ShapeMismatch, "feature matrix has " + std::to_string(features.channels) +
                                                  " channels, model expects " +
                                                  std::to_string(model.params.input_width()));
    }
    if (features.rows == 0) {
        return {};
    }
    return predict_rows(model, features.data);
}

} // namespace snowpipe
