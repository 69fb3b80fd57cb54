#include <cmath>

#include "snowpipe/error.hpp"
#include "snowpipe/model.hpp"
#include "snowpipe/rng.hpp"

namespace snowpipe {

std::vector<std::size_t> MlpParams::layer_sizes() const
{
    std::vector<std::size_t> sizes;
    if (layers.empty()) {
        return sizes;
    }
    sizes.push_back(layers.front().cols);
    for (const auto& l : layers) {
        sizes.push_back(l.rows);
    }
    return sizes;
}

std::size_t MlpParams::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.weights.size() + l.bias.size();
    }
    return n;
}

std::vector<std::size_t> default_layer_sizes(std::size_t inputs)
{
    std::vector<std::size_t> sizes{inputs};
    sizes.insert(sizes.end(), std::begin(kHiddenWidths), std::end(kHiddenWidths));
    sizes.push_back(1);
    return sizes;
}

MlpParams zero_params(std::span<const std::size_t> sizes)
{
    if (sizes.size() < 2 || sizes.back() != 1) {
        throw Error(ErrorCode::ShapeMismatch, "layer sizes must have at least two entries and end in 1");
    }
    MlpParams p;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] == 0 || sizes[i - 1] == 0) {
            throw Error(ErrorCode::ShapeMismatch, "zero-width layer");
        }
        p.layers.emplace_back(sizes[i], sizes[i - 1]);
    }
    return p;
}

MlpParams init_params(std::uint64_t seed, std::span<const std::size_t> sizes)
{
    MlpParams p = zero_params(sizes);
    Rng rng(seed, stream::kInit);
    for (auto& layer : p.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.cols + layer.rows));
        for (auto& w : layer.weights) {
            w = rng.uniform(-limit, limit);
        }
    }
    return p;
}

MlpParams init_params(std::uint64_t seed)
{
    const auto sizes = default_layer_sizes();
    return init_params(seed, sizes);
}

namespace {

void check_input(const MlpParams& params, std::size_t length)
{
    const std::size_t in = params.input_width();
    if (params.layers.empty() || length % in != 0) {
        throw Error(ErrorCode::ShapeMismatch, "input length " + std::to_string(length) +
                                                  " is not a multiple of the network input width " +
                                                  std::to_string(in));
    }
}

// Per-sample activations; acts[l] is the output of layer l-1 (acts[0] unused,
// the input span is read directly).
class Workspace {
public:
    explicit Workspace(const MlpParams& params)
    {
        acts_.resize(params.layers.size() + 1);
        deltas_.resize(params.layers.size() + 1);
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            acts_[l + 1].resize(params.layers[l].rows);
            deltas_[l + 1].resize(params.layers[l].rows);
        }
        deltas_[0].resize(params.input_width());
    }

    double forward(const MlpParams& params, std::span<const double> x)
    {
        const std::size_t last = params.layers.size() - 1;
        std::span<const double> in = x;
        for (std::size_t l = 0; l <= last; ++l) {
            const DenseLayer& layer = params.layers[l];
            auto& out = acts_[l + 1];
            for (std::size_t r = 0; r < layer.rows; ++r) {
                const double* w = layer.weights.data() + r * layer.cols;
                double acc = 0.0;
                for (std::size_t c = 0; c < layer.cols; ++c) {
                    acc += w[c] * in[c];
                }
                const double z = acc + layer.bias[r];
                out[r] = (l == last || z > 0.0) ? z : 0.0;
            }
            in = out;
        }
        return acts_.back()[0];
    }

    // Accumulates d(output)/d(theta) * dout into grad, after forward(x).
    void backward(const MlpParams& params, std::span<const double> x, double dout, MlpParams& grad)
    {
        const std::size_t n_layers = params.layers.size();
        deltas_[n_layers][0] = dout;
        for (std::size_t l = n_layers; l-- > 0;) {
            const DenseLayer& layer = params.layers[l];
            DenseLayer& g = grad.layers[l];
            const std::span<const double> in = l == 0 ? x : std::span<const double>(acts_[l]);
            const auto& delta = deltas_[l + 1];
            for (std::size_t r = 0; r < layer.rows; ++r) {
                const double d = delta[r];
                g.bias[r] += d;
                if (d == 0.0) {
                    continue;
                }
                double* gw = g.weights.data() + r * layer.cols;
                for (std::size_t c = 0; c < layer.cols; ++c) {
                    gw[c] += d * in[c];
                }
            }
            if (l == 0) {
                break;
            }
            auto& prev = deltas_[l];
            std::fill(prev.begin(), prev.end(), 0.0);
            for (std::size_t r = 0; r < layer.rows; ++r) {
                const double d = delta[r];
                if (d == 0.0) {
                    continue;
                }
                const double* w = layer.weights.data() + r * layer.cols;
                for (std::size_t c = 0; c < layer.cols; ++c) {
                    prev[c] += w[c] * d;
                }
            }
            // ReLU'(z) = 1 iff z > 0, i.e. iff the stored activation is positive
            const auto& a = acts_[l];
            for (std::size_t c = 0; c < prev.size(); ++c) {
                if (!(a[c] > 0.0)) {
                    prev[c] = 0.0;
                }
            }
        }
    }

private:
    std::vector<std::vector<double>> acts_;
    std::vector<std::vector<double>> deltas_;
};

double weight_penalty(const MlpParams& params)
{
    double sq = 0.0;
    for (const auto& layer : params.layers) {
        for (double w : layer.weights) {
            sq += w * w;
        }
    }
    return sq;
}

std::size_t batch_rows(const MlpParams& params, std::span<const double> x, std::span<const double> y)
{
    check_input(params, x.size());
    const std::size_t n = x.size() / params.input_width();
    if (n == 0) {
        throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
    }
    if (y.size() != n) {
        throw Error(ErrorCode::ShapeMismatch,
                    std::to_string(n) + " input rows but " + std::to_string(y.size()) + " targets");
    }
    return n;
}

} // namespace

double forward(const MlpParams& params, std::span<const double> x)
{
    if (params.layers.empty() || x.size() != params.input_width()) {
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) + " values, network expects " +
                                                  std::to_string(params.input_width()));
    }
    Workspace ws(params);
    return ws.forward(params, x);
}

std::vector<double> forward_batch(const MlpParams& params, std::span<const double> x)
{
    check_input(params, x.size());
    const std::size_t in = params.input_width();
    const std::size_t n = x.size() / in;
    std::vector<double> out(n);
    Workspace ws(params);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = ws.forward(params, x.subspan(i * in, in));
    }
    return out;
}

double loss(const MlpParams& params, std::span<const double> x, std::span<const double> y, double alpha)
{
    const std::size_t n = batch_rows(params, x, y);
    const std::size_t in = params.input_width();
    Workspace ws(params);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ws.forward(params, x.subspan(i * in, in)) - y[i];
        sse += e * e;
    }
    const auto nd = static_cast<double>(n);
    return sse / nd + alpha / (2.0 * nd) * weight_penalty(params);
}

LossGradient loss_and_gradient(const MlpParams& params, std::span<const double> x, std::span<const double> y,
                               double alpha)
{
    const std::size_t n = batch_rows(params, x, y);
    const std::size_t in = params.input_width();
    const auto nd = static_cast<double>(n);
    LossGradient out;
    out.gradient = zero_params(params.layer_sizes());
    Workspace ws(params);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.subspan(i * in, in);
        const double e = ws.forward(params, xi) - y[i];
        sse += e * e;
        ws.backward(params, xi, 2.0 * e / nd, out.gradient);
    }
    const double scale = alpha / nd;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& w = params.layers[l].weights;
        auto& g = out.gradient.layers[l].weights;
        for (std::size_t k = 0; k < w.size(); ++k) {
            g[k] += scale * w[k];
        }
    }
    out.loss = sse / nd + alpha / (2.0 * nd) * weight_penalty(params);
    return out;
}

MlpParams backward(const MlpParams& params, std::span<const double> x, std::span<const double> y, double alpha)
{
    return loss_and_gradient(params, x, y, alpha).gradient;
}

AdamState AdamState::zeros_like(const MlpParams& params)
{
    const auto sizes = params.layer_sizes();
    return AdamState{zero_params(sizes), zero_params(sizes), 0, 1.0, 1.0};
}

namespace {

void adam_update(std::span<double> theta, std::span<const double> g, std::span<double> m, std::span<double> v,
                 double lr, const AdamHyper& h, double bc1, double bc2)
{
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * (g[i] * g[i]);
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
}

} // namespace

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, const AdamHyper& hyper)
{
    const auto sizes = params.layer_sizes();
    if (grads.layer_sizes() != sizes || state.m.layer_sizes() != sizes || state.v.layer_sizes() != sizes) {
        throw Error(ErrorCode::ShapeMismatch, "Adam state, gradient and parameters disagree in shape");
    }
    ++state.t;
    state.beta1_power *= hyper.beta1;
    state.beta2_power *= hyper.beta2;
    const double bc1 = 1.0 - state.beta1_power;
    const double bc2 = 1.0 - state.beta2_power;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        const auto& g = grads.layers[l];
        adam_update(p.weights, g.weights, state.m.layers[l].weights, state.v.layers[l].weights, lr, hyper, bc1, bc2);
        adam_update(p.bias, g.bias, state.m.layers[l].bias, state.v.layers[l].bias, lr, hyper, bc1, bc2);
    }
}

} // namespace snowpipe
