#include "dbevo/mlp.hpp"

#include "dbevo/error.hpp"
#include "dbevo/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dbevo {

namespace {

// out(i, o) = b[o] + in_i · W_o
Matrix affine(const Matrix& in, const Matrix& w, const std::vector<double>& b) {
    Matrix out(in.rows(), w.rows());
    for (std::size_t i = 0; i < in.rows(); ++i) {
        const auto x = in.row(i);
        auto dst = out.row(i);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            dst[o] = b[o] + dot(x, w.row(o));
        }
    }
    return out;
}

void glorot(Matrix& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& x : w.data()) {
        x = rng.uniform(-limit, limit);
    }
}

struct Trace {
    std::vector<Matrix> inputs;  // input to each hidden layer
    std::vector<Matrix> pre;     // pre-activations of each hidden layer
    Matrix embeddings;
    Matrix logits;
};

Trace run_forward(const NetParams& params, const Matrix& batch, bool keep) {
    if (batch.cols() != params.config.input_dim) {
        fail(Errc::ShapeMismatch, "batch has " + std::to_string(batch.cols()) + " columns, net expects " +
                                      std::to_string(params.config.input_dim));
    }
    Trace t;
    Matrix h = batch;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Matrix z = affine(h, layer.weight, layer.bias);
        Matrix a = z;
        for (double& x : a.data()) {
            x = std::max(x, 0.0);
        }
        if (params.config.variant == Variant::residual && l > 0) {
            for (std::size_t k = 0; k < a.size(); ++k) {
                a.data()[k] += h.data()[k];
            }
        }
        if (keep) {
            t.inputs.push_back(std::move(h));
            t.pre.push_back(std::move(z));
        }
        h = std::move(a);
    }
    t.logits = affine(h, params.head.weight, params.head.bias);
    t.embeddings = std::move(h);
    return t;
}

void check_labels(const NetParams& params, const Matrix& batch, std::span<const std::uint32_t> labels) {
    if (labels.size() != batch.rows()) {
        fail(Errc::ShapeMismatch, "label count does not match batch rows");
    }
    for (auto y : labels) {
        if (y >= params.config.num_classes) {
            fail(Errc::BadClass, "label " + std::to_string(y) + " out of range");
        }
    }
}

// Mean cross-entropy; when `dlogits` is non-null it receives d(loss)/d(logits).
double cross_entropy(const Matrix& logits, std::span<const std::uint32_t> labels, Matrix* dlogits) {
    const std::size_t n = logits.rows();
    const std::size_t c = logits.cols();
    double total = 0.0;
    if (dlogits != nullptr) {
        *dlogits = Matrix(n, c);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double z : row) {
            sum += std::exp(z - m);
        }
        const double log_z = m + std::log(sum);
        total += log_z - row[labels[i]];
        if (dlogits != nullptr) {
            auto g = dlogits->row(i);
            for (std::size_t k = 0; k < c; ++k) {
                g[k] = std::exp(row[k] - log_z) / static_cast<double>(n);
            }
            g[labels[i]] -= 1.0 / static_cast<double>(n);
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

} // namespace

std::string_view variant_name(Variant v) {
    return v == Variant::residual ? "residual" : "plain";
}

Variant parse_variant(std::string_view name) {
    if (name == "plain") {
        return Variant::plain;
    }
    if (name == "residual") {
        return Variant::residual;
    }
    fail(Errc::InvalidArgument, "unknown network variant '" + std::string(name) + "'");
}

void NetConfig::validate() const {
    if (input_dim == 0) {
        fail(Errc::BadSpec, "input dimension must be positive");
    }
    if (hidden.empty()) {
        fail(Errc::BadSpec, "at least one hidden layer is required");
    }
    if (embedding_dim() < 2) {
        fail(Errc::BadSpec, "embedding dimension must be at least 2");
    }
    if (num_classes < 2) {
        fail(Errc::BadSpec, "at least 2 classes are required");
    }
    if (std::any_of(hidden.begin(), hidden.end(), [](std::size_t w) { return w == 0; })) {
        fail(Errc::BadSpec, "hidden widths must be positive");
    }
    if (variant == Variant::residual &&
        std::any_of(hidden.begin(), hidden.end(), [&](std::size_t w) { return w != hidden.front(); })) {
        fail(Errc::BadSpec, "residual variant requires equal hidden widths");
    }
    if (!class_names.empty() && class_names.size() != num_classes) {
        fail(Errc::BadSpec, "class name count does not match class count");
    }
}

NetParams init_params(const NetConfig& config) {
    config.validate();
    NetParams p;
    p.config = config;
    Rng rng(mix_seed(config.seed, 0x1417ULL));
    std::size_t fan_in = config.input_dim;
    for (std::size_t width : config.hidden) {
        DenseLayer layer{Matrix(width, fan_in), std::vector<double>(width, 0.0)};
        glorot(layer.weight, rng);
        p.layers.push_back(std::move(layer));
        fan_in = width;
    }
    p.head.weight = Matrix(config.num_classes, fan_in);
    glorot(p.head.weight, rng);
    p.head.bias.assign(config.num_classes, 0.0);
    p.head.class_names = config.class_names;
    return p;
}

NetParams zeros_like(const NetParams& params) {
    NetParams z = params;
    for (auto& ref : param_refs(z)) {
        std::fill(ref.values.begin(), ref.values.end(), 0.0);
    }
    return z;
}

std::vector<ParamRef> param_refs(NetParams& params) {
    std::vector<ParamRef> refs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        const std::string base = "layer." + std::to_string(l);
        refs.push_back({base + ".weight", layer.weight.rows(), layer.weight.cols(), layer.weight.data()});
        refs.push_back({base + ".bias", 1, layer.bias.size(), layer.bias});
    }
    refs.push_back({"head.weight", params.head.weight.rows(), params.head.weight.cols(), params.head.weight.data()});
    refs.push_back({"head.bias", 1, params.head.bias.size(), params.head.bias});
    return refs;
}

std::vector<ConstParamRef> param_refs(const NetParams& params) {
    std::vector<ConstParamRef> out;
    for (auto& r : param_refs(const_cast<NetParams&>(params))) {
        out.push_back({std::move(r.name), r.rows, r.cols, r.values});
    }
    return out;
}

std::size_t param_count(const NetParams& params) {
    std::size_t n = 0;
    for (const auto& r : param_refs(params)) {
        n += r.values.size();
    }
    return n;
}

ForwardResult forward(const NetParams& params, const Matrix& batch) {
    Trace t = run_forward(params, batch, false);
    return {std::move(t.embeddings), std::move(t.logits)};
}

double loss(const NetParams& params, const Matrix& batch, std::span<const std::uint32_t> labels) {
    check_labels(params, batch, labels);
    const Trace t = run_forward(params, batch, false);
    return cross_entropy(t.logits, labels, nullptr);
}

LossAndGrads loss_and_grads(const NetParams& params, const Matrix& batch, std::span<const std::uint32_t> labels) {
    check_labels(params, batch, labels);
    const Trace t = run_forward(params, batch, true);
    Matrix dlogits;
    LossAndGrads out;
    out.loss = cross_entropy(t.logits, labels, &dlogits);
    out.grads = zeros_like(params);

    auto& hg = out.grads.head;
    hg.weight = matmul_tn(dlogits, t.embeddings);
    for (std::size_t i = 0; i < dlogits.rows(); ++i) {
        for (std::size_t k = 0; k < dlogits.cols(); ++k) {
            hg.bias[k] += dlogits(i, k);
        }
    }
    Matrix dact = matmul(dlogits, params.head.weight);  // d(loss)/d(layer output)

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& layer = params.layers[l];
        const Matrix& z = t.pre[l];
        Matrix dz = dact;
        for (std::size_t k = 0; k < dz.size(); ++k) {
            if (!(z.data()[k] > 0.0)) {
                dz.data()[k] = 0.0;
            }
        }
        auto& g = out.grads.layers[l];
        g.weight = matmul_tn(dz, t.inputs[l]);
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            for (std::size_t k = 0; k < dz.cols(); ++k) {
                g.bias[k] += dz(i, k);
            }
        }
        if (l == 0) {
            break;
        }
        Matrix dinput = matmul(dz, layer.weight);
        if (params.config.variant == Variant::residual) {
            for (std::size_t k = 0; k < dinput.size(); ++k) {
                dinput.data()[k] += dact.data()[k];
            }
        }
        dact = std::move(dinput);
    }
    return out;
}

double pair_probability(const ClassifierHead& head, std::span<const double> embedding, std::size_t i,
                        std::size_t j) {
    if (i == j || i >= head.num_classes() || j >= head.num_classes()) {
        fail(Errc::BadClass, "pair (" + std::to_string(i) + "," + std::to_string(j) + ") is not a valid class pair");
    }
    if (embedding.size() != head.dim()) {
        fail(Errc::ShapeMismatch, "embedding dimension does not match head");
    }
    const double margin = dot(head.weight.row(i), embedding) - dot(head.weight.row(j), embedding) +
                          head.bias[i] - head.bias[j];
    // Evaluate the logistic function on the side that cannot overflow.
    if (margin >= 0.0) {
        return 1.0 / (1.0 + std::exp(-margin));
    }
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

Matrix full_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    if (logits.cols() == 0) {
        return out;
    }
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        auto dst = out.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            dst[k] = std::exp(row[k] - m);
            sum += dst[k];
        }
        for (double& x : dst) {
            x /= sum;
        }
    }
    return out;
}

} // namespace dbevo
