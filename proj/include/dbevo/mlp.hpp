#pragma once

// Minimal feed-forward classifier: ReLU hidden layers whose last activation is
// the embedding, followed by a linear classifier head.

#include "dbevo/linalg.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dbevo {

enum class Variant { plain, residual };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct NetConfig {
    std::size_t input_dim = 16;
    std::vector<std::size_t> hidden{32, 32};
    std::size_t num_classes = 4;
    Variant variant = Variant::plain;
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;

    std::size_t embedding_dim() const { return hidden.empty() ? 0 : hidden.back(); }
    /// Throws BadSpec when the shape rules are violated.
    void validate() const;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct DenseLayer {
    Matrix weight;               // out×in
    std::vector<double> bias;    // out
};

/// Last-layer parameters: logits = e·Wᵀ + b.
struct ClassifierHead {
    Matrix weight;               // C×d
    std::vector<double> bias;    // C
    std::vector<std::string> class_names;

    std::size_t num_classes() const noexcept { return weight.rows(); }
    std::size_t dim() const noexcept { return weight.cols(); }
};

/// Layer 0 maps the input to the first hidden width. In the residual variant
/// every later layer computes h <- ReLU(W h + b) + h.
struct NetParams {
    NetConfig config;
    std::vector<DenseLayer> layers;
    ClassifierHead head;
};

/// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
NetParams init_params(const NetConfig& config);
NetParams zeros_like(const NetParams& params);

/// A named view of one parameter tensor; biases are 1×n.
template <class T>
struct BasicParamRef {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<T> values;
};
using ParamRef = BasicParamRef<double>;
using ConstParamRef = BasicParamRef<const double>;

/// Tensors in a fixed order: layer.k.weight, layer.k.bias, ..., head.weight, head.bias.
std::vector<ParamRef> param_refs(NetParams& params);
std::vector<ConstParamRef> param_refs(const NetParams& params);
std::size_t param_count(const NetParams& params);

struct ForwardResult {
    Matrix embeddings;  // n×d
    Matrix logits;      // n×C
};

ForwardResult forward(const NetParams& params, const Matrix& batch);

struct LossAndGrads {
    double loss = 0.0;
    NetParams grads;
};

/// Mean softmax cross-entropy.
double loss(const NetParams& params, const Matrix& batch, std::span<const std::uint32_t> labels);
LossAndGrads loss_and_grads(const NetParams& params, const Matrix& batch, std::span<const std::uint32_t> labels);

/// Two-class softmax restricted to classes i and j, evaluated at embedding e.
double pair_probability(const ClassifierHead& head, std::span<const double> embedding, std::size_t i,
                        std::size_t j);

/// Row-wise softmax with max subtraction.
Matrix full_softmax(const Matrix& logits);

} // namespace dbevo
