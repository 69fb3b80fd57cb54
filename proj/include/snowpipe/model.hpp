#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snowpipe/features.hpp"

namespace snowpipe {

// Fully connected layer y = W x + b with W stored row-major (rows = outputs).
struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in) : rows(out), cols(in), weights(out * in, 0.0), bias(out, 0.0) {}

    double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
    double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

// ReLU on every hidden layer, identity on the last.
struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t input_width() const { return layers.empty() ? 0 : layers.front().cols; }
    std::vector<std::size_t> layer_sizes() const;
    std::size_t parameter_count() const;
};

inline constexpr std::size_t kHiddenWidths[] = {128, 64, 32};

// [inputs, 128, 64, 32, 1]
std::vector<std::size_t> default_layer_sizes(std::size_t inputs = kChannelCount);

MlpParams zero_params(std::span<const std::size_t> sizes);

// Glorot-uniform weights, zero biases. Weights are drawn layer by layer in
// row-major order from Rng(seed, stream::kInit).
MlpParams init_params(std::uint64_t seed, std::span<const std::size_t> sizes);
MlpParams init_params(std::uint64_t seed);

double forward(const MlpParams& params, std::span<const double> x);
// `x` holds n rows of params.input_width() values.
std::vector<double> forward_batch(const MlpParams& params, std::span<const double> x);

// (1/N) sum (yhat - y)^2 + alpha/(2N) sum_l ||W_l||_F^2, biases unpenalized.
double loss(const MlpParams& params, std::span<const double> x, std::span<const double> y, double alpha);

struct LossGradient {
    double loss = 0.0;
    MlpParams gradient;
};

LossGradient loss_and_gradient(const MlpParams& params, std::span<const double> x, std::span<const double> y,
                               double alpha);
MlpParams backward(const MlpParams& params, std::span<const double> x, std::span<const double> y, double alpha);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    MlpParams m;
    MlpParams v;
    std::uint64_t t = 0;
    // beta^t kept as running products so no pow() enters the update.
    double beta1_power = 1.0;
    double beta2_power = 1.0;

    static AdamState zeros_like(const MlpParams& params);
};

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, const AdamHyper& hyper = {});

struct TrainConfig {
    double learning_rate = 1e-3;
    double alpha = 0.01;
    std::size_t max_epochs = 500;
    std::size_t patience = 15;
    double val_fraction = 0.10;
    std::size_t batch_size = 200;
    std::uint64_t seed = 42;
    double tol = 1e-4;
    double lr_decay_factor = 5.0;
    std::size_t lr_patience = 2;
    AdamHyper adam;

    void validate() const;
};

enum class StopReason { EarlyStop, MaxEpochs };
std::string to_string(StopReason r);

struct TrainReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;  // 1-based
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> learning_rate;
    StopReason stop_reason = StopReason::MaxEpochs;
    double final_learning_rate = 0.0;
    std::size_t train_rows = 0;
    std::size_t val_rows = 0;
};

struct MlpModel {
    std::vector<std::string> channel_layout;
    Normalizer normalizer;
    MlpParams params;
    TrainConfig config;
    TrainReport report;
    // Debias mode: the training-target mean that was removed before fitting.
    bool centered_targets = false;
    double target_offset = 0.0;
};

MlpModel train(const TrainConfig& config, const FeatureMatrix& features);

std::vector<double> predict(const MlpModel& model, const FeatureMatrix& features);
// Raw, un-normalized rows laid out back to back.
std::vector<double> predict_rows(const MlpModel& model, std::span<const double> rows);

inline constexpr int kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

} // namespace snowpipe
