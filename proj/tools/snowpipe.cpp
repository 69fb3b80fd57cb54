// snowpipe: synthetic scenes, feature dumps, training, prediction and
// evaluation for per-pixel InSAR snow-depth regression.
//
// Exit status: 0 success, 1 usage error, 2 data or validation error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snowpipe/error.hpp"
#include "snowpipe/eval.hpp"
#include "snowpipe/features.hpp"
#include "snowpipe/gridstack.hpp"
#include "snowpipe/model.hpp"
#include "snowpipe/synth.hpp"

namespace fs = std::filesystem;
using namespace snowpipe;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<std::string, std::string> split_once(const std::string& text, char sep, const char* flag)
{
    const auto pos = text.find(sep);
    if (pos == std::string::npos || pos == 0 || pos + 1 == text.size()) {
        throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
    }
    return {text.substr(0, pos), text.substr(pos + 1)};
}

double parse_double(const std::string& s, const char* flag)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) {
            throw UsageError("");
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": '" + s + "' is not a number");
    }
}

std::uint32_t parse_extent(const std::string& s, const char* flag)
{
    const double v = parse_double(s, flag);
    if (v < 1 || v != std::floor(v) || v > 1e6) {
        throw UsageError(std::string(flag) + ": '" + s + "' is not a valid pixel count");
    }
    return static_cast<std::uint32_t>(v);
}

std::pair<std::uint32_t, std::uint32_t> parse_size(const std::string& text)
{
    auto [w, h] = split_once(text, 'x', "--size");
    return {parse_extent(w, "--size"), parse_extent(h, "--size")};
}

HistogramRange parse_range(const std::string& text)
{
    auto [lo, hi] = split_once(text, ':', "--range");
    HistogramRange r{parse_double(lo, "--range"), parse_double(hi, "--range")};
    if (!(r.lo < r.hi)) {
        throw UsageError("--range: lower bound must be below upper bound");
    }
    return r;
}

SplitSpec parse_spatial_half(const std::string& text)
{
    auto [axis, frac] = split_once(text, ':', "--spatial-half");
    SplitSpec::Axis a{};
    if (axis == "row") {
        a = SplitSpec::Axis::Row;
    } else if (axis == "col") {
        a = SplitSpec::Axis::Col;
    } else {
        throw UsageError("--spatial-half: axis must be 'row' or 'col'");
    }
    const double f = parse_double(frac, "--spatial-half");
    if (!(f > 0.0 && f < 1.0)) {
        throw UsageError("--spatial-half: fraction must lie in (0, 1)");
    }
    return SplitSpec::spatial_half(a, f);
}

bool layout_is_known(const std::vector<std::string>& layout)
{
    return layout == channel_names(false) || layout == channel_names(true);
}

void print_summaries(std::span<const EvalReport> reports)
{
    for (const auto& r : reports) {
        std::cout << summary_line(r) << '\n';
    }
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
    std::uint64_t seed = 7;
    std::optional<std::uint64_t> season_seed;
    std::string size = "128x128";
    double depth_scale = 1.0;
    double target_offset = 0.0;
    bool noise_free = false;
    std::string out;
};

int run_synth(const SynthArgs& a)
{
    const auto [w, h] = parse_size(a.size);
    if (!(a.depth_scale > 0.0)) {
        throw UsageError("--depth-scale must be positive");
    }
    SynthConfig cfg;
    cfg.seed = a.seed;
    cfg.season_seed = a.season_seed.value_or(a.seed);
    cfg.width = w;
    cfg.height = h;
    cfg = cfg.with_depth_scale(a.depth_scale);
    if (a.noise_free) {
        cfg = cfg.noise_free();
    }
    SceneStack stack = generate_scene(cfg);
    if (a.target_offset != 0.0) {
        for (float& v : stack.target.values) {
            v = static_cast<float>(v + a.target_offset);
        }
    }
    save_stack(stack, a.out);
    const Terrain terrain = generate_terrain(cfg);
    std::cout << "synth " << w << "x" << h << " seed=" << cfg.seed << " season_seed=" << cfg.season_seed
              << " noise_floor=" << depth_noise_floor(cfg, terrain) << " m -> " << (fs::path(a.out) / "stack.json").string()
              << '\n';
    return 0;
}

// --- features ------------------------------------------------------------

struct FeaturesArgs {
    std::string stack;
    std::string out = "features.csv";
    bool with_los = false;
};

int run_features(const FeaturesArgs& a)
{
    const SceneStack stack = load_stack(a.stack);
    const FeatureMatrix m = assemble_features(stack, valid_mask(stack), a.with_los);
    write_features_csv(m, a.out);
    std::cout << "features rows=" << m.rows << " channels=" << m.channels << " -> " << a.out << '\n';
    return 0;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
    std::string stack;
    std::string out;
    std::string report = "report.csv";
    std::uint64_t seed = 42;
    bool debias = false;
    std::optional<double> holdout;
    std::optional<std::string> spatial_half;
    bool with_los = false;
    std::optional<std::size_t> max_epochs;
};

int run_train(const TrainArgs& a)
{
    SplitSpec split = SplitSpec::none();
    if (a.holdout) {
        if (!(*a.holdout > 0.0 && *a.holdout < 1.0)) {
            throw UsageError("--holdout must lie in (0, 1)");
        }
        split = SplitSpec::holdout(*a.holdout, a.seed);
    } else if (a.spatial_half) {
        split = parse_spatial_half(*a.spatial_half);
    }
    TrainConfig config;
    config.seed = a.seed;
    if (a.max_epochs) {
        if (*a.max_epochs == 0) {
            throw UsageError("--max-epochs must be positive");
        }
        config.max_epochs = *a.max_epochs;
    }

    const SceneStack stack = load_stack(a.stack);
    std::vector<EvalReport> reports;
    MlpModel model;
    if (split.kind == SplitSpec::Kind::None) {
        FeatureMatrix rows = assemble_features(stack, valid_mask(stack), a.with_los);
        double offset = 0.0;
        if (a.debias) {
            offset = std::accumulate(rows.targets.begin(), rows.targets.end(), 0.0) /
                     static_cast<double>(rows.targets.size());
            for (auto& t : rows.targets) {
                t -= offset;
            }
        }
        model = train(config, rows);
        model.centered_targets = a.debias;
        model.target_offset = offset;
        reports.push_back(evaluate(predict(model, rows), rows.targets, "full:train", a.debias));
    } else {
        RegimeOptions opts{config, a.debias, a.with_los,
                           split.kind == SplitSpec::Kind::Holdout ? "holdout" : "spatial_half"};
        RegimeResult result = run_regime(stack, nullptr, split, opts);
        model = std::move(result.model);
        reports.push_back(result.train);
        reports.push_back(result.test);
    }

    save_model(model, a.out);
    write_report_csv(reports, a.report);
    print_summaries(reports);
    std::cout << "epochs=" << model.report.epochs_run << " best_epoch=" << model.report.best_epoch
              << " stop=" << to_string(model.report.stop_reason) << " -> " << a.out << '\n';
    return 0;
}

// --- predict / evaluate --------------------------------------------------

struct Scored {
    FeatureMatrix rows;
    std::vector<double> pred;
};

Scored score_stack(const MlpModel& model, const SceneStack& stack)
{
    if (!layout_is_known(model.channel_layout)) {
        throw Error(ErrorCode::SchemaError, "model channel layout does not match this build's feature layout");
    }
    const bool with_los = model.channel_layout.size() == kChannelCount + 1;
    Scored s;
    s.rows = assemble_features(stack, valid_mask(stack), with_los);
    s.pred = predict(model, s.rows);
    return s;
}

struct PredictArgs {
    std::string model;
    std::string stack;
    std::string out;
};

int run_predict(const PredictArgs& a)
{
    const MlpModel model = load_model(a.model);
    const SceneStack stack = load_stack(a.stack);
    const Scored s = score_stack(model, stack);
    Grid depth(stack.width(), stack.height(), std::numeric_limits<float>::quiet_NaN());
    for (std::size_t r = 0; r < s.rows.rows; ++r) {
        depth.values[s.rows.pixel_indices[r]] = static_cast<float>(s.pred[r]);
    }
    save_grid(depth, a.out);
    std::cout << "predict " << s.rows.rows << " valid pixels of " << depth.size() << " -> " << a.out << '\n';
    return 0;
}

struct HistArgs {
    std::optional<std::string> hist;
    std::optional<std::string> pgm;
    std::size_t bins = kDefaultHistogramBins;
    std::string range = "0:2.5";
};

void emit_histogram(const HistArgs& h, std::span<const double> pred, std::span<const double> truth)
{
    if (!h.hist && !h.pgm) {
        return;
    }
    const Histogram2D hist = residual_histogram(pred, truth, h.bins, parse_range(h.range));
    if (h.hist) {
        write_histogram_csv(hist, *h.hist);
    }
    if (h.pgm) {
        write_histogram_pgm(hist, *h.pgm);
    }
    std::cout << "histogram " << h.bins << "x" << h.bins << " in_range=" << hist.total()
              << " out_of_range=" << hist.n_out_of_range << '\n';
}

struct EvaluateArgs {
    std::string model;
    std::string stack;
    std::string report = "report.csv";
    bool debias = false;
    HistArgs hist;
};

int run_evaluate(const EvaluateArgs& a)
{
    const MlpModel model = load_model(a.model);
    const SceneStack stack = load_stack(a.stack);
    Scored s = score_stack(model, stack);
    std::vector<double> truth = s.rows.targets;
    if (a.debias) {
        // Score against the test scene's own centered targets; predictions are not re-offset.
        const double m = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
        for (auto& t : truth) {
            t -= m;
        }
    }
    const std::vector<EvalReport> reports{evaluate(s.pred, truth, "evaluate", a.debias)};
    write_report_csv(reports, a.report);
    print_summaries(reports);
    emit_histogram(a.hist, s.pred, truth);
    return 0;
}

// --- histogram -----------------------------------------------------------

struct HistogramArgs {
    std::string pred;
    std::string truth;
    std::string size;
    HistArgs hist;
};

int run_histogram(HistogramArgs a)
{
    const auto [w, h] = parse_size(a.size);
    const Grid pred = load_grid(a.pred, w, h);
    const Grid truth = load_grid(a.truth, w, h);
    std::vector<double> p;
    std::vector<double> t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!std::isnan(pred.values[i]) && !std::isnan(truth.values[i])) {
            p.push_back(pred.values[i]);
            t.push_back(truth.values[i]);
        }
    }
    if (!a.hist.hist && !a.hist.pgm) {
        a.hist.hist = "hist.csv";
    }
    emit_histogram(a.hist, p, t);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"snowpipe: per-pixel InSAR snow-depth regression"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "write a synthetic scene (stack.json + .f32 grids)");
    synth->add_option("--seed", synth_args.seed, "terrain seed")->capture_default_str();
    synth->add_option("--season-seed", synth_args.season_seed, "snow/noise seed (defaults to --seed)");
    synth->add_option("--size", synth_args.size, "WIDTHxHEIGHT")->capture_default_str();
    synth->add_option("--depth-scale", synth_args.depth_scale, "multiply every snow-depth term")->capture_default_str();
    synth->add_option("--target-offset", synth_args.target_offset, "add a constant (m) to the target grid")
        ->capture_default_str();
    synth->add_flag("--noise-free", synth_args.noise_free, "disable snow and phase noise");
    synth->add_option("--out", synth_args.out, "output directory")->required();

    FeaturesArgs feat_args;
    auto* features = app.add_subcommand("features", "dump the per-pixel feature matrix as CSV");
    features->add_option("--stack", feat_args.stack, "stack.json")->required();
    features->add_option("--out", feat_args.out, "CSV path")->capture_default_str();
    features->add_flag("--with-los-channel", feat_args.with_los, "append the cumulative LOS proxy channel");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the MLP and report fit metrics");
    train_cmd->add_option("--stack", train_args.stack, "stack.json")->required();
    train_cmd->add_option("--out", train_args.out, "model.json")->required();
    train_cmd->add_option("--report", train_args.report, "report CSV")->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed, "training seed")->capture_default_str();
    train_cmd->add_flag("--debias", train_args.debias, "train and score on mean-centered targets");
    auto* holdout = train_cmd->add_option("--holdout", train_args.holdout, "seeded pixel holdout test fraction");
    auto* spatial = train_cmd->add_option("--spatial-half", train_args.spatial_half,
                                          "row|col:FRAC, train below the boundary, test beyond it");
    holdout->excludes(spatial);
    spatial->excludes(holdout);
    train_cmd->add_flag("--with-los-channel", train_args.with_los, "append the cumulative LOS proxy channel");
    train_cmd->add_option("--max-epochs", train_args.max_epochs, "override the 500-epoch limit");

    PredictArgs pred_args;
    auto* predict_cmd = app.add_subcommand("predict", "write a predicted depth grid (.f32, NaN off-mask)");
    predict_cmd->add_option("--model", pred_args.model, "model.json")->required();
    predict_cmd->add_option("--stack", pred_args.stack, "stack.json")->required();
    predict_cmd->add_option("--out", pred_args.out, "output .f32")->required();

    auto add_hist_options = [](CLI::App* cmd, HistArgs& h, const char* hist_help) {
        cmd->add_option("--hist", h.hist, hist_help);
        cmd->add_option("--pgm", h.pgm, "8-bit PGM rendering of the histogram");
        cmd->add_option("--bins", h.bins, "bins per axis")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--range", h.range, "LO:HI in m, both axes")->capture_default_str();
    };

    EvaluateArgs eval_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a model on every valid pixel of a stack");
    evaluate_cmd->add_option("--model", eval_args.model, "model.json")->required();
    evaluate_cmd->add_option("--stack", eval_args.stack, "stack.json")->required();
    evaluate_cmd->add_option("--report", eval_args.report, "report CSV")->capture_default_str();
    evaluate_cmd->add_flag("--debias", eval_args.debias, "score against mean-centered targets");
    add_hist_options(evaluate_cmd, eval_args.hist, "2D truth/prediction histogram CSV");

    HistogramArgs hist_args;
    auto* histogram_cmd = app.add_subcommand("histogram", "2D histogram of two co-registered .f32 grids");
    histogram_cmd->add_option("--pred", hist_args.pred, "prediction .f32")->required();
    histogram_cmd->add_option("--truth", hist_args.truth, "truth .f32")->required();
    histogram_cmd->add_option("--size", hist_args.size, "WIDTHxHEIGHT")->required();
    add_hist_options(histogram_cmd, hist_args.hist, "histogram CSV (default hist.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (features->parsed()) return run_features(feat_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (predict_cmd->parsed()) return run_predict(pred_args);
        if (evaluate_cmd->parsed()) return run_evaluate(eval_args);
        if (histogram_cmd->parsed()) return run_histogram(hist_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
