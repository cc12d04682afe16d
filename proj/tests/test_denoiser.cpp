// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "shortdf/denoiser.hpp"
#include "shortdf/rng.hpp"
#include "support/gradcheck.hpp"

using namespace shortdf;
using shortdf::testing::compare_grads;
using shortdf::testing::finite_difference_grads;

TEST_CASE("same seed gives bitwise-identical parameters") {
    auto a = make_mlp_denoiser(2, {16, 16}, 8, 77);
    auto b = make_mlp_denoiser(2, {16, 16}, 8, 77);
    REQUIRE(a->params().size() == b->params().size());
    for (std::size_t i = 0; i < a->params().size(); ++i) {
        CHECK(a->params()[i].data == b->params()[i].data);
    }
    auto c = make_mlp_denoiser(2, {16, 16}, 8, 78);
    CHECK(c->params()[0].data != a->params()[0].data);
}

TEST_CASE("predict keeps the batch shape") {
    auto model = make_mlp_denoiser(3, {8}, 4, 1);
    RngStream rng(2, "x");
    const Sample x = gaussian_sample(rng, 5, 3);
    const Sample y = model->predict(x, 7);
    CHECK(y.batch == 5);
    CHECK(y.dims == 3);
}

TEST_CASE("zeroed parameters predict zero") {
    auto model = make_mlp_denoiser(2, {8, 8}, 4, 3);
    for (auto& arr : model->params()) arr.data.assign(arr.data.size(), 0.0);
    RngStream rng(4, "x");
    const Sample y = model->predict(gaussian_sample(rng, 3, 2), 5);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("clone is a deep copy") {
    auto src = make_mlp_denoiser(2, {8}, 4, 9);
    auto copy = src->clone();
    for (std::size_t i = 0; i < src->params().size(); ++i) {
        CHECK(copy->params()[i].data == src->params()[i].data);
    }

    RngStream rng(5, "x");
    const Sample x = gaussian_sample(rng, 4, 2);
    const Sample before = copy->predict(x, 3);
    for (auto& arr : src->params()) {
        for (auto& v : arr.data) v += 1.0;
    }
    const Sample after = copy->predict(x, 3);
    CHECK(before.data == after.data);

    // triple clone predicts identically
    auto second = src->clone();
    auto third = src->clone();
    const Sample y1 = src->predict(x, 3);
    const Sample y2 = second->predict(x, 3);
    const Sample y3 = third->predict(x, 3);
    CHECK(y1.data == y2.data);
    CHECK(y1.data == y3.data);
}

TEST_CASE("time embedding is deterministic and injective over [0, T]") {
    const TimeEmbedding emb(20);
    CHECK(emb.encode(17) == emb.encode(17));

    std::map<std::vector<double>, int> seen;
    for (int t = 0; t <= 1000; ++t) {
        const auto code = emb.encode(t);
        auto [it, inserted] = seen.insert({code, t});
        CHECK(inserted);
    }
    CHECK_THROWS_AS(TimeEmbedding(3), std::invalid_argument);
}

TEST_CASE("frozen evaluation is referentially transparent") {
    auto model = make_mlp_denoiser(2, {12}, 6, 21);
    const ParamSet before = model->params();
    RngStream rng(6, "x");
    const Sample x = gaussian_sample(rng, 6, 2);
    const Sample y1 = model->predict(x, 9);
    const Sample y2 = model->predict(x, 9);
    CHECK(y1.data == y2.data);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(model->params()[i].data == before[i].data);
    }
}

TEST_CASE("mlp analytic gradients match central finite differences") {
    auto model = make_mlp_denoiser(2, {16}, 16, 33);
    CHECK(param_count(model->params()) <= 1000);

    RngStream rng(7, "x");
    const Sample x = gaussian_sample(rng, 4, 2);
    const Sample w = gaussian_sample(rng, 4, 2);  // fixed cotangent weights
    const int t = 13;

    auto loss = [&]() {
        const Sample y = model->predict(x, t);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += w.data[i] * y.data[i];
        return acc;
    };

    Denoiser::Trace trace;
    model->forward(x, t, trace);
    ParamSet analytic = zeros_like(model->params());
    model->backward(trace, w, analytic);

    const ParamSet numeric = finite_difference_grads(*model, loss);
    const auto result = compare_grads(analytic, numeric);
    CHECK(result.checked == param_count(model->params()));
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("conv analytic gradients match central finite differences") {
    const ImageShape shape{1, 4, 4};
    auto model = make_conv_denoiser(shape, 3, 8, 5);

    RngStream rng(8, "x");
    Sample x = gaussian_sample(rng, 2, shape.flat_size());
    x.image = shape;
    const Sample w = gaussian_sample(rng, 2, shape.flat_size());
    const int t = 4;

    auto loss = [&]() {
        const Sample y = model->predict(x, t);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += w.data[i] * y.data[i];
        return acc;
    };

    Denoiser::Trace trace;
    model->forward(x, t, trace);
    ParamSet analytic = zeros_like(model->params());
    model->backward(trace, w, analytic);

    const ParamSet numeric = finite_difference_grads(*model, loss);
    CHECK(compare_grads(analytic, numeric).max_rel_err < 1e-4);
}

TEST_CASE("conv predict keeps the image shape metadata") {
    const ImageShape shape{1, 6, 6};
    auto model = make_conv_denoiser(shape, 4, 8, 11);
    CHECK(model->input_dim() == 36);
    RngStream rng(10, "x");
    Sample x = gaussian_sample(rng, 3, 36);
    const Sample y = model->predict(x, 2);
    CHECK(y.batch == 3);
    CHECK(y.dims == 36);
    CHECK(model->image_shape().has_value());
}

TEST_CASE("fixed-output stub replays its batch and checks shape") {
    RngStream rng(12, "x");
    const Sample eps = gaussian_sample(rng, 4, 2);
    auto stub = make_fixed_output_denoiser(eps);
    const Sample x = gaussian_sample(rng, 4, 2);
    CHECK(stub->predict(x, 3).data == eps.data);
    CHECK(stub->predict(x, 99).data == eps.data);
    CHECK_THROWS_AS(stub->predict(gaussian_sample(rng, 5, 2), 3), std::invalid_argument);
}

TEST_CASE("build_denoiser round-trips the model config") {
    auto mlp = make_mlp_denoiser(2, {24, 24}, 8, 4);
    auto rebuilt = build_denoiser(mlp->config(), 4);
    for (std::size_t i = 0; i < mlp->params().size(); ++i) {
        CHECK(rebuilt->params()[i].name == mlp->params()[i].name);
        CHECK(rebuilt->params()[i].data == mlp->params()[i].data);
    }
    CHECK_THROWS_AS(build_denoiser(ModelConfig{.kind = "transformer"}, 0),
                    std::invalid_argument);
}
