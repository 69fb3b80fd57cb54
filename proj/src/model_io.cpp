#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "snowpipe/error.hpp"
#include "snowpipe/model.hpp"

namespace snowpipe {

using nlohmann::json;

namespace {

json config_to_json(const TrainConfig& c)
{
    return json{{"learning_rate", c.learning_rate}, {"alpha", c.alpha},
                {"max_epochs", c.max_epochs},       {"patience", c.patience},
                {"val_fraction", c.val_fraction},   {"batch_size", c.batch_size},
                {"seed", c.seed},                   {"tol", c.tol},
                {"lr_decay_factor", c.lr_decay_factor}, {"lr_patience", c.lr_patience},
                {"beta1", c.adam.beta1},            {"beta2", c.adam.beta2},
                {"epsilon", c.adam.epsilon}};
}

TrainConfig config_from_json(const json& j)
{
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.tol = j.at("tol").get<double>();
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    c.lr_patience = j.at("lr_patience").get<std::size_t>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("epsilon").get<double>();
    return c;
}

json report_to_json(const TrainReport& r)
{
    return json{{"epochs_run", r.epochs_run},
                {"best_epoch", r.best_epoch},
                {"train_loss", r.train_loss},
                {"val_loss", r.val_loss},
                {"learning_rate", r.learning_rate},
                {"stop_reason", to_string(r.stop_reason)},
                {"final_learning_rate", r.final_learning_rate},
                {"train_rows", r.train_rows},
                {"val_rows", r.val_rows}};
}

TrainReport report_from_json(const json& j)
{
    TrainReport r;
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.train_loss = j.at("train_loss").get<std::vector<double>>();
    r.val_loss = j.at("val_loss").get<std::vector<double>>();
    r.learning_rate = j.at("learning_rate").get<std::vector<double>>();
    const auto reason = j.at("stop_reason").get<std::string>();
    if (reason == "early_stop") {
        r.stop_reason = StopReason::EarlyStop;
    } else if (reason == "max_epochs") {
        r.stop_reason = StopReason::MaxEpochs;
    } else {
        throw Error(ErrorCode::SchemaError, "unknown stop_reason '" + reason + "'");
    }
    r.final_learning_rate = j.at("final_learning_rate").get<double>();
    r.train_rows = j.at("train_rows").get<std::size_t>();
    r.val_rows = j.at("val_rows").get<std::size_t>();
    if (r.train_loss.size() != r.epochs_run || r.val_loss.size() != r.epochs_run) {
        throw Error(ErrorCode::SchemaError, "train_report loss arrays disagree with epochs_run");
    }
    return r;
}

void require_finite(std::span<const double> values, const char* what)
{
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::SchemaError, std::string("non-finite value in ") + what);
        }
    }
}

DenseLayer layer_from_json(const json& j, std::size_t index)
{
    const std::string where = "layers[" + std::to_string(index) + "]";
    DenseLayer layer(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& w = j.at("W");
    if (!w.is_array() || w.size() != layer.rows) {
        throw Error(ErrorCode::ShapeMismatch, where + ".W does not have " + std::to_string(layer.rows) + " rows");
    }
    for (std::size_t r = 0; r < layer.rows; ++r) {
        const auto row = w[r].get<std::vector<double>>();
        if (row.size() != layer.cols) {
            throw Error(ErrorCode::ShapeMismatch, where + ".W row " + std::to_string(r) + " has " +
                                                      std::to_string(row.size()) + " columns, expected " +
                                                      std::to_string(layer.cols));
        }
        std::copy(row.begin(), row.end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(r * layer.cols));
    }
    layer.bias = j.at("b").get<std::vector<double>>();
    if (layer.bias.size() != layer.rows) {
        throw Error(ErrorCode::ShapeMismatch, where + ".b has the wrong length");
    }
    require_finite(layer.weights, "layer weights");
    require_finite(layer.bias, "layer biases");
    return layer;
}

} // namespace

std::string model_to_json(const MlpModel& model)
{
    json layers = json::array();
    for (const auto& layer : model.params.layers) {
        json rows = json::array();
        for (std::size_t r = 0; r < layer.rows; ++r) {
            rows.push_back(std::vector<double>(layer.weights.begin() + static_cast<std::ptrdiff_t>(r * layer.cols),
                                               layer.weights.begin() +
                                                   static_cast<std::ptrdiff_t>((r + 1) * layer.cols)));
        }
        layers.push_back({{"rows", layer.rows}, {"cols", layer.cols}, {"W", std::move(rows)}, {"b", layer.bias}});
    }
    json doc{{"format_version", kModelFormatVersion},
             {"channel_layout", model.channel_layout},
             {"normalizer", {{"mean", model.normalizer.mean}, {"std", model.normalizer.std}}},
             {"layers", std::move(layers)},
             {"config", config_to_json(model.config)},
             {"seed", model.config.seed},
             {"target_centering", {{"enabled", model.centered_targets}, {"offset", model.target_offset}}},
             {"train_report", report_to_json(model.report)}};
    return doc.dump(1) + "\n";
}

MlpModel model_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorCode::SchemaError, "unsupported model format_version");
        }
        MlpModel model;
        model.channel_layout = doc.at("channel_layout").get<std::vector<std::string>>();
        model.normalizer.mean = doc.at("normalizer").at("mean").get<std::vector<double>>();
        model.normalizer.std = doc.at("normalizer").at("std").get<std::vector<double>>();
        require_finite(model.normalizer.mean, "normalizer.mean");
        require_finite(model.normalizer.std, "normalizer.std");

        const auto& layers = doc.at("layers");
        if (!layers.is_array() || layers.empty()) {
            throw Error(ErrorCode::SchemaError, "layers must be a non-empty array");
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            model.params.layers.push_back(layer_from_json(layers[i], i));
        }
        const std::size_t width = model.channel_layout.size();
        if (model.params.input_width() != width || model.normalizer.mean.size() != width ||
            model.normalizer.std.size() != width) {
            throw Error(ErrorCode::ShapeMismatch, "first layer / normalizer width disagrees with the " +
                                                      std::to_string(width) + "-channel layout");
        }
        for (std::size_t i = 1; i < model.params.layers.size(); ++i) {
            if (model.params.layers[i].cols != model.params.layers[i - 1].rows) {
                throw Error(ErrorCode::ShapeMismatch, "layers[" + std::to_string(i) + "] input width " +
                                                          std::to_string(model.params.layers[i].cols) +
                                                          " does not chain from the previous layer");
            }
        }
        if (model.params.layers.back().rows != 1) {
            throw Error(ErrorCode::ShapeMismatch, "output layer must have a single unit");
        }

        model.config = config_from_json(doc.at("config"));
        if (doc.at("seed").get<std::uint64_t>() != model.config.seed) {
            throw Error(ErrorCode::SchemaError, "seed disagrees with config.seed");
        }
        model.centered_targets = doc.at("target_centering").at("enabled").get<bool>();
        model.target_offset = doc.at("target_centering").at("offset").get<double>();
        model.report = report_from_json(doc.at("train_report"));
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed model file: ") + e.what());
    }
}

void save_model(const MlpModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << model_to_json(model);
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
}

MlpModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

} // namespace snowpipe
