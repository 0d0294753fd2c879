#include "doctest.h"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/rng.hpp"
#include "test_support.hpp"

using namespace dstnet;
using testsupport::max_grad_rel_error;
using testsupport::random_tensor;

// Every gradient is validated against a central finite difference; the
// objective is sum(op(...)) or a squared variant so errors anywhere in the
// output surface.

namespace {

constexpr double kTol = 1e-5;

Var sq_sum(const Var& v) { return sum_all(square(v)); }

}  // namespace

TEST_CASE("elementwise gradients") {
    Rng rng(101);
    const Tensor a = random_tensor({2, 3, 3}, rng, 0.2, 1.5);
    const Tensor b = random_tensor({2, 3, 3}, rng, 0.2, 1.5);

    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(add(v[0], v[1])); },
                             {a, b}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(sub(v[0], v[1])); },
                             {a, b}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(mul(v[0], v[1])); },
                             {a, b}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(div_v(v[0], v[1])); }, {a, b}) <
          kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sum_all(scale(v[0], -2.5)); }, {a}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(add_scalar(v[0], 0.7)); }, {a}) <
          kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(gelu(v[0])); },
                             {random_tensor({2, 4, 4}, rng, -2.0, 2.0)}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(sigmoid_v(v[0])); },
                             {random_tensor({2, 4, 4}, rng, -2.0, 2.0)}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(tanh_v(v[0])); },
                             {random_tensor({2, 4, 4}, rng, -2.0, 2.0)}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(square(v[0])); },
                             {a}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sum_all(pow_const(v[0], 3.0)); }, {a}) <
          kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return mean_all(v[0]); }, {a}) <
          kTol);
}

TEST_CASE("relu abs and huber gradients away from kinks") {
    // Points are kept clear of the non-differentiable set so the FD probe
    // stays on one branch.
    Rng rng(103);
    Tensor a = random_tensor({3, 3, 3}, rng, 0.1, 1.0);
    for (std::int64_t i = 0; i < a.numel(); i += 2) a[i] = -a[i];
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(relu(v[0])); },
                             {a}) < kTol);
    CHECK(max_grad_rel_error([](const std::vector<Var>& v) { return sq_sum(abs_v(v[0])); },
                             {a}) < kTol);
    // huber: mix of inside (|d| < 0.5) and outside points
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sum_all(huber(v[0], 0.5)); }, {a}) < kTol);
}

TEST_CASE("shape op gradients") {
    Rng rng(107);
    const Tensor a = random_tensor({2, 3, 4}, rng);
    const Tensor b = random_tensor({3, 3, 4}, rng);

    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(concat_ch({v[0], v[1]})); },
              {a, b}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(slice_ch(v[0], 1, 3)); }, {b}) <
          kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(pad_reflect(v[0], 1, 2, 2, 1)); },
              {a}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(crop(v[0], 1, 0, 2, 3)); }, {a}) <
          kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(upsample_bilinear2x(v[0])); },
              {a}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(avg_pool2(v[0])); },
              {random_tensor({2, 5, 6}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(tile_mean(v[0], 3)); },
              {random_tensor({1, 7, 8}, rng)}) < kTol);
}

TEST_CASE("conv gradients") {
    Rng rng(109);
    const Tensor x = random_tensor({2, 6, 5}, rng);
    const Tensor w = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
    const Tensor b = random_tensor({3}, rng);
    for (int stride : {1, 2}) {
        CHECK(max_grad_rel_error(
                  [stride](const std::vector<Var>& v) {
                      return sq_sum(conv2d(v[0], v[1], v[2], stride, 1));
                  },
                  {x, w, b}) < kTol);
    }
    const Tensor k3 = random_tensor({3, 3, 1}, rng, -0.5, 0.5);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(plane_conv3(v[0], v[1])); },
              {random_tensor({4, 5, 5}, rng), k3}) < kTol);
}

TEST_CASE("normalization and attention gradients") {
    Rng rng(113);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(softmax_ch(v[0])); },
              {random_tensor({4, 3, 3}, rng, -2.0, 2.0)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) {
                  return sq_sum(layernorm_ch(v[0], v[1], v[2]));
              },
              {random_tensor({4, 3, 3}, rng), random_tensor({4}, rng, 0.5, 1.5),
               random_tensor({4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(global_avg(v[0])); },
              {random_tensor({3, 4, 4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(global_max(v[0])); },
              {random_tensor({3, 4, 4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(channel_mean_map(v[0])); },
              {random_tensor({3, 4, 4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(channel_max_map(v[0])); },
              {random_tensor({3, 4, 4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(linear(v[0], v[1], v[2])); },
              {random_tensor({3, 5}, rng), random_tensor({5}, rng), random_tensor({3}, rng)}) <
          kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(mul_channels(v[0], v[1])); },
              {random_tensor({3, 4, 4}, rng), random_tensor({3}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(mul_spatial(v[0], v[1])); },
              {random_tensor({3, 4, 4}, rng), random_tensor({1, 4, 4}, rng)}) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(add_channels(v[0], v[1])); },
              {random_tensor({3, 4, 4}, rng), random_tensor({3}, rng)}) < kTol);
}

TEST_CASE("cross_attention gradients, aligned and padded") {
    Rng rng(127);
    const int c = 3;
    const Tensor wq = random_tensor({c, c}, rng, -0.5, 0.5);
    const Tensor wk = random_tensor({c, c}, rng, -0.5, 0.5);
    const Tensor wv = random_tensor({c, c}, rng, -0.5, 0.5);
    for (auto [h, w] : {std::pair{4, 4}, {3, 5}}) {
        const Tensor xi = random_tensor({c, h, w}, rng);
        const Tensor xf = random_tensor({c, h, w}, rng);
        CHECK(max_grad_rel_error(
                  [](const std::vector<Var>& v) {
                      return sq_sum(cross_attention(v[0], v[1], v[2], v[3], v[4], 4));
                  },
                  {xi, xf, wq, wk, wv}) < kTol);
    }
}

TEST_CASE("color op gradients") {
    Rng rng(131);
    // Stay away from hue branch switches: pick channels well separated.
    Tensor rgb({3, 2, 2});
    const double vals[12] = {0.8, 0.2, 0.1, 0.4,   // r
                             0.3, 0.7, 0.5, 0.9,   // g
                             0.1, 0.4, 0.9, 0.15}; // b
    for (int i = 0; i < 12; ++i) rgb[i] = vals[i];
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) { return sq_sum(rgb_to_hsv_v(v[0])); }, {rgb},
              1e-7) < kTol);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) {
                  return sum_all(channel_weighted_sum(v[0], {0.299, 0.587, 0.114}));
              },
              {random_tensor({3, 3, 3}, rng)}) < kTol);
    const double pi = 3.14159265358979323846;
    const Tensor ha = random_tensor({1, 3, 3}, rng, 0.1, 2.0 * pi - 0.1);
    const Tensor hb = random_tensor({1, 3, 3}, rng, 0.1, 2.0 * pi - 0.1);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) {
                  return sum_all(hue_circular_distance(v[0], v[1]));
              },
              {ha, hb}) < kTol);
}

TEST_CASE("gradients accumulate across two uses of one leaf") {
    Rng rng(137);
    const Tensor a = random_tensor({2, 3, 3}, rng, 0.3, 1.0);
    CHECK(max_grad_rel_error(
              [](const std::vector<Var>& v) {
                  Var both = add(mul(v[0], v[0]), scale(v[0], 3.0));
                  return sum_all(both);
              },
              {a}) < kTol);
}

TEST_CASE("no-grad mode skips graph construction") {
    Rng rng(139);
    const Tensor a = random_tensor({2, 2, 2}, rng);
    ad::NoGradGuard guard;
    Var x = Var::leaf(a, true);
    Var y = sum_all(square(x));
    CHECK(y.node()->parents.empty());
    CHECK_FALSE(y.node()->backward_fn);
}
