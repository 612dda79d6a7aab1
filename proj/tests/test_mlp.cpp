#include "dbevo/mlp.hpp"
#include "dbevo/rng.hpp"
#include "support/check.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dbevo;

namespace {

NetParams single_layer_identity() {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden = {2};
    cfg.num_classes = 2;
    NetParams p = zeros_like(init_params(cfg));
    p.layers[0].weight = Matrix::identity(2);
    return p;
}

} // namespace

TEST_CASE("config validation") {
    NetConfig c;
    CHECK_NOTHROW(c.validate());
    c.hidden = {};
    CHECK_ERRC(c.validate(), Errc::BadSpec);
    c = NetConfig{};
    c.hidden = {32, 1};
    CHECK_ERRC(c.validate(), Errc::BadSpec);
    c = NetConfig{};
    c.num_classes = 1;
    CHECK_ERRC(c.validate(), Errc::BadSpec);
    c = NetConfig{};
    c.variant = Variant::residual;
    c.hidden = {32, 16};
    CHECK_ERRC(c.validate(), Errc::BadSpec);
    c.hidden = {8, 8, 8};
    CHECK_NOTHROW(c.validate());
    c = NetConfig{};
    c.class_names = {"a", "b"};
    CHECK_ERRC(c.validate(), Errc::BadSpec);
    CHECK(parse_variant("residual") == Variant::residual);
    CHECK_ERRC(parse_variant("dense"), Errc::InvalidArgument);
}

TEST_CASE("initialization is seeded and within the Glorot range") {
    NetConfig cfg;
    cfg.seed = 4;
    const NetParams a = init_params(cfg);
    const NetParams b = init_params(cfg);
    CHECK(a.layers[0].weight == b.layers[0].weight);
    CHECK(a.head.weight == b.head.weight);
    const double limit = std::sqrt(6.0 / (16.0 + 32.0));
    for (double w : a.layers[0].weight.data()) {
        CHECK(std::abs(w) <= limit);
    }
    for (double x : a.layers[1].bias) {
        CHECK(x == 0.0);
    }
    cfg.seed = 5;
    CHECK_FALSE(init_params(cfg).layers[0].weight == a.layers[0].weight);
    CHECK(param_count(a) == 16 * 32 + 32 + 32 * 32 + 32 + 4 * 32 + 4);
}

TEST_CASE("forward examples") {
    SUBCASE("zero parameters give uniform softmax") {
        NetConfig cfg;
        const NetParams p = zeros_like(init_params(cfg));
        const auto fr = forward(p, Matrix(3, 16, 1.0));
        for (double z : fr.logits.data()) {
            CHECK(z == 0.0);
        }
        const Matrix sm = full_softmax(fr.logits);
        for (double x : sm.data()) {
            CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
        }
    }
    SUBCASE("ReLU clamps negatives") {
        const auto fr = forward(single_layer_identity(), Matrix{{-1, 2}});
        CHECK(fr.embeddings(0, 0) == 0.0);
        CHECK(fr.embeddings(0, 1) == 2.0);
    }
    SUBCASE("residual block with zero weights passes its input") {
        NetConfig cfg;
        cfg.input_dim = 3;
        cfg.hidden = {4, 4, 4};
        cfg.variant = Variant::residual;
        cfg.seed = 1;
        NetParams p = init_params(cfg);
        NetParams stem_only = p;
        for (std::size_t l = 1; l < p.layers.size(); ++l) {
            p.layers[l].weight = Matrix(4, 4);
            std::fill(p.layers[l].bias.begin(), p.layers[l].bias.end(), 0.0);
        }
        stem_only.config.hidden = {4};
        stem_only.layers.resize(1);
        const Matrix x{{0.3, -1.0, 2.0}, {1.0, 1.0, 1.0}};
        CHECK(forward(p, x).embeddings == forward(stem_only, x).embeddings);
    }
    SUBCASE("shape mismatch") {
        CHECK_ERRC(forward(single_layer_identity(), Matrix(1, 3)), Errc::ShapeMismatch);
    }
}

TEST_CASE("forward agrees with the naive oracle") {
    Rng rng(8);
    for (auto variant : {Variant::plain, Variant::residual}) {
        for (int t = 0; t < 5; ++t) {
            const NetParams p = oracle::random_net(rng, variant);
            const Matrix x = oracle::random_matrix(rng, 6, p.config.input_dim);
            const auto lib = forward(p, x);
            const auto ref = oracle::naive_forward(p, x);
            for (std::size_t k = 0; k < lib.logits.size(); ++k) {
                CHECK(lib.logits.data()[k] == doctest::Approx(ref.logits.data()[k]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("loss examples") {
    NetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden = {2};
    cfg.num_classes = 2;
    NetParams p = zeros_like(init_params(cfg));
    const Matrix x{{1, 2}, {3, 4}};
    const std::vector<std::uint32_t> y{0, 1};
    CHECK(loss(p, x, y) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    // Logits ±20 through the bias.
    p.head.bias = {20, -20};
    const std::vector<std::uint32_t> y0{0, 0};
    CHECK(loss(p, x, y0) < 1e-8);

    CHECK_ERRC(loss(p, x, std::vector<std::uint32_t>{0}), Errc::ShapeMismatch);
    CHECK_ERRC(loss(p, x, std::vector<std::uint32_t>{0, 2}), Errc::BadClass);
}

TEST_CASE("gradients match central differences on a tiny net") {
    NetConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = {4};
    cfg.num_classes = 2;
    cfg.seed = 12;
    Rng rng(12);
    NetParams p = init_params(cfg);
    for (auto& b : p.layers[0].bias) {
        b = 0.1 * rng.normal();
    }
    const Matrix x = oracle::random_matrix(rng, 5, 3);
    const std::vector<std::uint32_t> y{0, 1, 1, 0, 1};
    const auto lg = loss_and_grads(p, x, y);
    CHECK(lg.loss == doctest::Approx(oracle::naive_loss(p, x, y)).epsilon(1e-13));
    const auto res = oracle::gradient_check(p, x, y, lg.grads, 1e-5, 1e-6);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_error <= 1e-4);
}

TEST_CASE("gradients on residual nets") {
    Rng rng(31);
    for (int t = 0; t < 3; ++t) {
        const NetParams p = oracle::random_net(rng, Variant::residual);
        const Matrix x = oracle::random_matrix(rng, 4, p.config.input_dim);
        std::vector<std::uint32_t> y;
        for (int i = 0; i < 4; ++i) {
            y.push_back(static_cast<std::uint32_t>(rng.below(p.config.num_classes)));
        }
        const auto lg = loss_and_grads(p, x, y);
        const auto res = oracle::gradient_check(p, x, y, lg.grads, 1e-5, 1e-6);
        CHECK(res.max_rel_error <= 1e-4);
    }
}

TEST_CASE("pair probability") {
    ClassifierHead h;
    h.weight = Matrix{{1, 0}, {1, 0}, {0, 1}};
    h.bias = {0.5, 0.5, 0};
    const std::vector<double> e{0.3, -0.7};
    CHECK(pair_probability(h, e, 0, 1) == 0.5);

    h.bias = {2.0, 0.0, 0.0};
    CHECK(std::abs(pair_probability(h, e, 0, 1) - 1.0 / (1.0 + std::exp(-2.0))) <= 1e-9);
    CHECK(std::abs(pair_probability(h, e, 0, 1) - 0.8807970779778823) <= 1e-9);
    CHECK(pair_probability(h, e, 1, 0) == doctest::Approx(1.0 - pair_probability(h, e, 0, 1)).epsilon(1e-15));

    h.bias = {1000.0, -1000.0, 0.0};
    const double p = pair_probability(h, e, 0, 1);
    CHECK(std::isfinite(p));
    CHECK(p <= 1.0);

    CHECK_ERRC(pair_probability(h, e, 1, 1), Errc::BadClass);
    CHECK_ERRC(pair_probability(h, e, 0, 3), Errc::BadClass);
}

TEST_CASE("full softmax") {
    const Matrix eq{{3, 3, 3, 3}};
    const Matrix uniform = full_softmax(eq);
    for (double x : uniform.data()) {
        CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
    }
    Rng rng(1);
    const Matrix z = oracle::random_matrix(rng, 5, 4, 3.0);
    Matrix shifted = z;
    for (std::size_t c = 0; c < 4; ++c) {
        shifted(2, c) += 17.5;
    }
    const Matrix a = full_softmax(z);
    const Matrix b = full_softmax(shifted);
    for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
            sum += a(r, c);
            CHECK(std::abs(a(r, c) - b(r, c)) <= 1e-12);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    const Matrix big = full_softmax(Matrix{{1000, 0}});
    CHECK(big(0, 0) == doctest::Approx(1.0));
    CHECK(big(0, 1) >= 0.0);
    CHECK(big(0, 1) < 1e-300);
}

TEST_CASE("param refs cover every tensor in order") {
    NetConfig cfg;
    cfg.hidden = {8, 6};
    NetParams p = init_params(cfg);
    const auto refs = param_refs(p);
    REQUIRE(refs.size() == 6);
    CHECK(refs[0].name == "layer.0.weight");
    CHECK(refs[1].name == "layer.0.bias");
    CHECK(refs[4].name == "head.weight");
    CHECK(refs[5].name == "head.bias");
    CHECK(refs[2].rows == 6);
    CHECK(refs[2].cols == 8);
}
