#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tokmod::ml {

enum class Activation { relu, identity };

// Dense row-major matrix, sized for desk-scale models.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

struct Layer {
    Matrix weights; // out_dim x in_dim
    std::vector<double> bias;
    Activation activation = Activation::relu;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }
    std::size_t param_count() const { return weights.data.size() + bias.size(); }

    bool operator==(const Layer&) const = default;
};

// Feed-forward parameter container. Immutable by convention: operations that
// change parameters return a new model.
struct ToyModel {
    std::vector<Layer> layers;
    std::size_t watermark_layer = 0;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }

    // Shape chaining plus watermark-layer bounds.
    void validate(std::size_t min_watermark_params = 0) const;

    // Flattened watermark-layer parameters: weights row-major, then bias.
    std::vector<double> watermark_params() const;
    void set_watermark_params(std::span<const double> params);
    std::size_t watermark_param_count() const;

    // Canonical little-endian byte serialization of shapes and parameters,
    // the base for model-id commitments.
    std::vector<std::uint8_t> canonical_bytes() const;

    bool operator==(const ToyModel&) const = default;
};

// He-initialized MLP: relu hidden layers, identity output.
// dims = {input, hidden..., output}.
ToyModel make_mlp(const std::vector<std::size_t>& dims, std::size_t watermark_layer,
                  std::uint64_t seed);

struct Dataset {
    Matrix features; // samples x dim, values in [0, 1]
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 1;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double lambda = 1.0; // watermark regularization weight
    double margin = 0.1; // hinge margin, consulted by embedding hooks
};

// Watermark-loss callback: flattened watermark-layer parameters in,
// (loss, gradient w.r.t. those parameters) out.
struct HookResult {
    double loss = 0.0;
    std::vector<double> grad;
};
using WatermarkHook = std::function<HookResult(std::span<const double>)>;

// Gaussian-blob classification data; class centers drawn once from the
// seeded generator, features clamped to [0, 1].
Dataset make_blobs(int num_classes, int dim, int samples_per_class, double spread,
                   std::uint64_t seed);

// Pixel-grid data: one seeded texture per class plus per-sample noise.
// dim = side * side.
Dataset make_grid_images(int num_classes, int side, int samples_per_class, std::uint64_t seed);

// Full gradient of the mean softmax cross-entropy over `data`, exposed for
// finite-difference checks.
struct Gradients {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
};
double task_loss(const ToyModel& model, const Dataset& data);
std::pair<double, Gradients> task_loss_and_gradient(const ToyModel& model, const Dataset& data);

// Minibatch SGD on cross-entropy. With a hook, total loss per batch is
// task + lambda * hook loss and the hook gradient applies to the watermark
// layer. Deterministic in (cfg.seed, data).
ToyModel train(const ToyModel& model, const Dataset& data, const TrainConfig& cfg,
               const WatermarkHook& hook = nullptr);

// Parameter-wise arithmetic mean over identically shaped models.
ToyModel fed_avg(const std::vector<ToyModel>& models);

// Fraction of argmax-correct predictions; ties resolve to the lowest class.
double evaluate(const ToyModel& model, const Dataset& data);

std::vector<int> predict(const ToyModel& model, const Matrix& features);

// Adds i.i.d. zero-mean Gaussian noise with absolute standard deviation
// sigma to every parameter.
ToyModel perturb_gaussian(const ToyModel& model, double sigma, std::uint64_t seed);

} // namespace tokmod::ml
