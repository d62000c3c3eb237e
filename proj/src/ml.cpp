#include "tokmod/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "tokmod/errors.hpp"
#include "tokmod/rng.hpp"

namespace tokmod::ml {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void append_doubles(std::vector<std::uint8_t>& out, const std::vector<double>& values) {
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
}

} // namespace

void ToyModel::validate(std::size_t min_watermark_params) const {
    require(!layers.empty(), ErrorKind::parameter, "model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& layer = layers[i];
        require(layer.weights.rows > 0 && layer.weights.cols > 0, ErrorKind::parameter,
                "layer has empty weight matrix");
        require(layer.bias.size() == layer.out_dim(), ErrorKind::parameter,
                "bias length does not match layer output");
        if (i + 1 < layers.size()) {
            require(layer.out_dim() == layers[i + 1].in_dim(), ErrorKind::parameter,
                    "layer shapes do not chain");
        }
    }
    require(watermark_layer < layers.size(), ErrorKind::parameter,
            "watermark layer index out of range");
    require(layers[watermark_layer].param_count() >= min_watermark_params, ErrorKind::parameter,
            "watermark layer too small for requested watermark length");
}

std::vector<double> ToyModel::watermark_params() const {
    const Layer& layer = layers.at(watermark_layer);
    std::vector<double> out;
    out.reserve(layer.param_count());
    out.insert(out.end(), layer.weights.data.begin(), layer.weights.data.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    return out;
}

void ToyModel::set_watermark_params(std::span<const double> params) {
    Layer& layer = layers.at(watermark_layer);
    require(params.size() == layer.param_count(), ErrorKind::parameter,
            "watermark parameter count mismatch");
    std::copy(params.begin(), params.begin() + layer.weights.data.size(),
              layer.weights.data.begin());
    std::copy(params.begin() + layer.weights.data.size(), params.end(), layer.bias.begin());
}

std::size_t ToyModel::watermark_param_count() const {
    return layers.at(watermark_layer).param_count();
}

std::vector<std::uint8_t> ToyModel::canonical_bytes() const {
    std::vector<std::uint8_t> out;
    append_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const Layer& layer : layers) {
        append_u32(out, static_cast<std::uint32_t>(layer.weights.rows));
        append_u32(out, static_cast<std::uint32_t>(layer.weights.cols));
        append_doubles(out, layer.weights.data);
        append_doubles(out, layer.bias);
    }
    return out;
}

ToyModel make_mlp(const std::vector<std::size_t>& dims, std::size_t watermark_layer,
                  std::uint64_t seed) {
    require(dims.size() >= 2, ErrorKind::parameter, "mlp needs at least input and output dims");
    Rng rng(seed);
    ToyModel model;
    model.watermark_layer = watermark_layer;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer layer;
        layer.weights = Matrix(dims[i + 1], dims[i]);
        layer.bias.assign(dims[i + 1], 0.0);
        double scale = std::sqrt(2.0 / static_cast<double>(dims[i]));
        for (double& w : layer.weights.data) {
            w = scale * rng.normal();
        }
        layer.activation = (i + 2 < dims.size()) ? Activation::relu : Activation::identity;
        model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
}

void Dataset::validate() const {
    require(labels.size() == size(), ErrorKind::parameter, "label count != sample count");
    require(num_classes >= 1, ErrorKind::parameter, "dataset needs at least one class");
    for (int label : labels) {
        require(label >= 0 && label < num_classes, ErrorKind::parameter,
                "label outside [0, num_classes)");
    }
}

Dataset make_blobs(int num_classes, int dim, int samples_per_class, double spread,
                   std::uint64_t seed) {
    require(num_classes >= 2, ErrorKind::parameter, "make_blobs: num_classes must be >= 2");
    require(dim >= 2, ErrorKind::parameter, "make_blobs: dim must be >= 2");
    require(samples_per_class >= 1, ErrorKind::parameter,
            "make_blobs: samples_per_class must be >= 1");
    require(spread >= 0.0, ErrorKind::parameter, "make_blobs: spread must be >= 0");

    Rng rng(seed);
    Matrix centers(num_classes, dim);
    for (double& c : centers.data) {
        c = rng.uniform();
    }

    Dataset out;
    out.num_classes = num_classes;
    out.features = Matrix(static_cast<std::size_t>(num_classes) * samples_per_class, dim);
    out.labels.reserve(out.features.rows);
    std::size_t row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < samples_per_class; ++s, ++row) {
            for (int j = 0; j < dim; ++j) {
                double v = centers.at(c, j);
                if (spread > 0.0) {
                    v += spread * rng.normal();
                }
                out.features.at(row, j) = clamp01(v);
            }
            out.labels.push_back(c);
        }
    }
    out.validate();
    return out;
}

Dataset make_grid_images(int num_classes, int side, int samples_per_class, std::uint64_t seed) {
    require(num_classes >= 2, ErrorKind::parameter, "make_grid_images: num_classes must be >= 2");
    require(side >= 4, ErrorKind::parameter, "make_grid_images: side must be >= 4");
    require(samples_per_class >= 1, ErrorKind::parameter,
            "make_grid_images: samples_per_class must be >= 1");

    constexpr double noise_std = 0.1;
    int dim = side * side;
    Rng rng(seed);
    Matrix textures(num_classes, dim);
    for (double& t : textures.data) {
        t = rng.uniform();
    }

    Dataset out;
    out.num_classes = num_classes;
    out.features = Matrix(static_cast<std::size_t>(num_classes) * samples_per_class, dim);
    out.labels.reserve(out.features.rows);
    std::size_t row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < samples_per_class; ++s, ++row) {
            for (int j = 0; j < dim; ++j) {
                out.features.at(row, j) = clamp01(textures.at(c, j) + noise_std * rng.normal());
            }
            out.labels.push_back(c);
        }
    }
    out.validate();
    return out;
}

namespace {

// Forward activations for one sample; returns per-layer pre/post activations.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;  // z = W a + b
    std::vector<std::vector<double>> post; // a = act(z)
};

ForwardTrace forward_sample(const ToyModel& model, const Matrix& features, std::size_t row) {
    ForwardTrace trace;
    std::vector<double> input(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) {
        input[j] = features.at(row, j);
    }
    const std::vector<double>* current = &input;
    for (const Layer& layer : model.layers) {
        std::vector<double> z(layer.out_dim());
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            double acc = layer.bias[r];
            const double* wrow = layer.weights.data.data() + r * layer.weights.cols;
            for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                acc += wrow[c] * (*current)[c];
            }
            z[r] = acc;
        }
        std::vector<double> a = z;
        if (layer.activation == Activation::relu) {
            for (double& v : a) {
                v = std::max(0.0, v);
            }
        }
        trace.pre.push_back(std::move(z));
        trace.post.push_back(std::move(a));
        current = &trace.post.back();
    }
    return trace;
}

// Softmax cross-entropy and dL/dlogits for one sample.
double softmax_ce(const std::vector<double>& logits, int label, std::vector<double>* dlogits) {
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) {
        sum += std::exp(v - max_logit);
    }
    double log_z = max_logit + std::log(sum);
    if (dlogits) {
        dlogits->resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            (*dlogits)[i] = std::exp(logits[i] - log_z);
        }
        (*dlogits)[static_cast<std::size_t>(label)] -= 1.0;
    }
    return log_z - logits[static_cast<std::size_t>(label)];
}

Gradients zero_gradients(const ToyModel& model) {
    Gradients grads;
    for (const Layer& layer : model.layers) {
        grads.weight_grads.emplace_back(layer.weights.rows, layer.weights.cols);
        grads.bias_grads.emplace_back(layer.out_dim(), 0.0);
    }
    return grads;
}

// Accumulates mean loss and gradients over the index subset.
double batch_loss_and_gradient(const ToyModel& model, const Dataset& data,
                               std::span<const std::size_t> indices, Gradients& grads) {
    double total_loss = 0.0;
    double inv = 1.0 / static_cast<double>(indices.size());
    std::vector<double> delta;
    std::vector<double> sample(data.features.cols);
    for (std::size_t idx : indices) {
        for (std::size_t j = 0; j < sample.size(); ++j) {
            sample[j] = data.features.at(idx, j);
        }
        ForwardTrace trace = forward_sample(model, data.features, idx);
        total_loss += softmax_ce(trace.pre.back(), data.labels[idx], &delta);

        // Backprop: delta holds dL/dz for the current layer.
        for (std::size_t li = model.layers.size(); li-- > 0;) {
            const Layer& layer = model.layers[li];
            if (layer.activation == Activation::relu) {
                for (std::size_t r = 0; r < delta.size(); ++r) {
                    if (trace.pre[li][r] <= 0.0) {
                        delta[r] = 0.0;
                    }
                }
            }
            const std::vector<double>& input = (li == 0) ? sample : trace.post[li - 1];
            Matrix& wg = grads.weight_grads[li];
            std::vector<double>& bg = grads.bias_grads[li];
            for (std::size_t r = 0; r < layer.out_dim(); ++r) {
                double d = delta[r] * inv;
                bg[r] += d;
                double* grow = wg.data.data() + r * wg.cols;
                for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                    grow[c] += d * input[c];
                }
            }
            if (li > 0) {
                std::vector<double> prev(layer.in_dim(), 0.0);
                for (std::size_t r = 0; r < layer.out_dim(); ++r) {
                    const double* wrow = layer.weights.data.data() + r * layer.weights.cols;
                    for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                        prev[c] += delta[r] * wrow[c];
                    }
                }
                delta = std::move(prev);
            }
        }
    }
    return total_loss * inv;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

} // namespace

double task_loss(const ToyModel& model, const Dataset& data) {
    model.validate();
    data.validate();
    require(model.input_dim() == data.dim(), ErrorKind::parameter,
            "model input dim does not match dataset dim");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardTrace trace = forward_sample(model, data.features, i);
        total += softmax_ce(trace.pre.back(), data.labels[i], nullptr);
    }
    return total / static_cast<double>(data.size());
}

std::pair<double, Gradients> task_loss_and_gradient(const ToyModel& model, const Dataset& data) {
    model.validate();
    data.validate();
    require(model.input_dim() == data.dim(), ErrorKind::parameter,
            "model input dim does not match dataset dim");
    Gradients grads = zero_gradients(model);
    auto idx = all_indices(data.size());
    double loss = batch_loss_and_gradient(model, data, idx, grads);
    return {loss, std::move(grads)};
}

ToyModel train(const ToyModel& model, const Dataset& data, const TrainConfig& cfg,
               const WatermarkHook& hook) {
    model.validate();
    data.validate();
    require(model.input_dim() == data.dim(), ErrorKind::parameter,
            "model input dim does not match dataset dim");
    require(cfg.learning_rate > 0.0, ErrorKind::parameter, "learning rate must be > 0");
    require(cfg.epochs >= 0, ErrorKind::parameter, "epochs must be >= 0");
    require(cfg.batch_size >= 1, ErrorKind::parameter, "batch size must be >= 1");
    require(cfg.lambda >= 0.0, ErrorKind::parameter, "lambda must be >= 0");

    ToyModel current = model;
    bool use_hook = hook && cfg.lambda > 0.0;
    Rng rng(cfg.seed);
    std::vector<std::size_t> order = all_indices(data.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::span<const std::size_t> batch(order.data() + start, end - start);

            Gradients grads = zero_gradients(current);
            double loss = batch_loss_and_gradient(current, data, batch, grads);

            if (use_hook) {
                std::vector<double> wm = current.watermark_params();
                HookResult hr = hook(wm);
                require(hr.grad.size() == wm.size(), ErrorKind::parameter,
                        "watermark hook gradient size mismatch");
                loss += cfg.lambda * hr.loss;
                Layer& wl = current.layers[current.watermark_layer];
                Matrix& wg = grads.weight_grads[current.watermark_layer];
                std::vector<double>& bg = grads.bias_grads[current.watermark_layer];
                std::size_t wcount = wl.weights.data.size();
                for (std::size_t i = 0; i < wcount; ++i) {
                    wg.data[i] += cfg.lambda * hr.grad[i];
                }
                for (std::size_t i = 0; i < bg.size(); ++i) {
                    bg[i] += cfg.lambda * hr.grad[wcount + i];
                }
            }

            require(std::isfinite(loss), ErrorKind::training_diverged,
                    "non-finite training loss");

            for (std::size_t li = 0; li < current.layers.size(); ++li) {
                Layer& layer = current.layers[li];
                const Matrix& wg = grads.weight_grads[li];
                for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
                    layer.weights.data[i] -= cfg.learning_rate * wg.data[i];
                }
                for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                    layer.bias[i] -= cfg.learning_rate * grads.bias_grads[li][i];
                }
            }
        }
    }
    return current;
}

ToyModel fed_avg(const std::vector<ToyModel>& models) {
    require(!models.empty(), ErrorKind::parameter, "fed_avg: empty model list");
    const ToyModel& first = models.front();
    for (const ToyModel& m : models) {
        require(m.layers.size() == first.layers.size(), ErrorKind::parameter,
                "fed_avg: architecture mismatch");
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
            require(m.layers[li].weights.rows == first.layers[li].weights.rows &&
                        m.layers[li].weights.cols == first.layers[li].weights.cols,
                    ErrorKind::parameter, "fed_avg: architecture mismatch");
        }
    }
    ToyModel out = first;
    double inv = 1.0 / static_cast<double>(models.size());
    for (std::size_t li = 0; li < out.layers.size(); ++li) {
        Layer& layer = out.layers[li];
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
            double sum = 0.0;
            for (const ToyModel& m : models) {
                sum += m.layers[li].weights.data[i];
            }
            layer.weights.data[i] = sum * inv;
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            double sum = 0.0;
            for (const ToyModel& m : models) {
                sum += m.layers[li].bias[i];
            }
            layer.bias[i] = sum * inv;
        }
    }
    return out;
}

std::vector<int> predict(const ToyModel& model, const Matrix& features) {
    std::vector<int> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
        ForwardTrace trace = forward_sample(model, features, i);
        const std::vector<double>& logits = trace.pre.back();
        int best = 0;
        for (std::size_t c = 1; c < logits.size(); ++c) {
            if (logits[c] > logits[static_cast<std::size_t>(best)]) {
                best = static_cast<int>(c);
            }
        }
        out[i] = best;
    }
    return out;
}

double evaluate(const ToyModel& model, const Dataset& data) {
    model.validate();
    data.validate();
    require(model.input_dim() == data.dim(), ErrorKind::parameter,
            "model input dim does not match dataset dim");
    std::vector<int> preds = predict(model, data.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == data.labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

ToyModel perturb_gaussian(const ToyModel& model, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, ErrorKind::parameter, "perturb_gaussian: sigma must be >= 0");
    if (sigma == 0.0) {
        return model;
    }
    Rng rng(seed);
    ToyModel out = model;
    for (Layer& layer : out.layers) {
        for (double& w : layer.weights.data) {
            w += sigma * rng.normal();
        }
        for (double& b : layer.bias) {
            b += sigma * rng.normal();
        }
    }
    return out;
}

} // namespace tokmod::ml
