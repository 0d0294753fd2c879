#include "dstnet/net/msfb.hpp"

#include <cmath>

#include "dstnet/core/checks.hpp"

namespace dstnet {

namespace {

constexpr int kScales[] = {1, 3, 5, 7, 9};

Tensor fan_in_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    const double limit = std::sqrt(3.0 / fan_in);
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

Var conv_weight(int out, int in, int k, Rng& rng) {
    return Var::leaf(fan_in_uniform({out, in, k, k}, in * k * k, rng), true);
}

Var zero_bias(int n) { return Var::leaf(Tensor::zeros({n}), true); }

// Separable 3x3x3 tap table k[c][h][w] = a[c] * b[h] * c[w].
Tensor outer3(const double (&a)[3], const double (&b)[3], const double (&c)[3]) {
    Tensor t(std::vector<int>{3, 3, 3});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) t.at(i, j, l) = a[i] * b[j] * c[l];
    return t;
}

}  // namespace

GradientStencils make_gradient_stencils() {
    GradientStencils s;
    s.lap_x = Tensor::from({1, 1, 3}, {1.0, -2.0, 1.0});
    s.lap_y = Tensor::from({1, 3, 1}, {1.0, -2.0, 1.0});
    s.lap_z = Tensor::from({3, 1, 1}, {1.0, -2.0, 1.0});
    const double d[3] = {-1.0, 0.0, 1.0};
    const double m[3] = {1.0, 2.0, 1.0};
    s.sob_x = outer3(m, m, d);
    s.sob_y = outer3(m, d, m);
    s.sob_z = outer3(d, m, m);
    return s;
}

std::pair<Var, Var> p3d_gradients(const Var& x, const GradientStencils& s) {
    require(x.val().rank() == 3 && x.val().dim(0) >= 3,
            "p3d_gradients: channel-axis stencils need at least 3 channels");
    auto inject = [&](const Tensor& kx, const Tensor& ky, const Tensor& kz) {
        Var acc = abs_v(plane_conv3(x, Var::leaf(kx)));
        acc = add(acc, abs_v(plane_conv3(x, Var::leaf(ky))));
        acc = add(acc, abs_v(plane_conv3(x, Var::leaf(kz))));
        return gelu(acc);
    };
    return {inject(s.lap_x, s.lap_y, s.lap_z), inject(s.sob_x, s.sob_y, s.sob_z)};
}

P3dKernels make_p3d_kernels(int channels, int scale, Rng& rng) {
    require(scale >= 1 && scale % 2 == 1, "make_p3d_kernels: scale must be odd");
    auto plane = [&](int a, int b, int c) {
        return Var::leaf(fan_in_uniform({a, b, c}, a * b * c, rng), true);
    };
    P3dKernels p;
    p.k_ch = plane(scale, scale, 1);
    p.k_cw = plane(scale, 1, scale);
    p.k_hw = plane(1, scale, scale);
    p.k_o = plane(1, 1, 1);
    p.conv_w = conv_weight(channels, channels, 3, rng);
    p.conv_b = zero_bias(channels);
    p.scale = scale;
    return p;
}

Var p3d_block(const Var& x, const P3dKernels& k) {
    Var planes = relu(plane_conv3(x, k.k_ch));
    planes = add(planes, relu(plane_conv3(x, k.k_cw)));
    planes = add(planes, relu(plane_conv3(x, k.k_hw)));
    planes = add(planes, relu(plane_conv3(x, k.k_o)));
    return relu(add(conv2d(planes, k.conv_w, k.conv_b, 1, 1), x));
}

MaffParams make_maff_params(int channels, Rng& rng, int reduction) {
    require(reduction >= 1 && channels % reduction == 0,
            "make_maff_params: reduction must divide the channel count");
    const int mid = channels / reduction;
    MaffParams p;
    p.phi_local_w = conv_weight(channels, channels, 3, rng);
    p.phi_local_b = zero_bias(channels);
    p.phi_global_w = Var::leaf(fan_in_uniform({channels, channels}, channels, rng), true);
    p.phi_global_b = zero_bias(channels);
    p.se_w1 = Var::leaf(fan_in_uniform({mid, channels}, channels, rng), true);
    p.se_w2 = Var::leaf(fan_in_uniform({channels, mid}, mid, rng), true);
    p.spa_w = conv_weight(1, 2, 7, rng);
    p.spa_b = zero_bias(1);
    for (int i = 0; i < 5; ++i) {
        p.rep_w.push_back(conv_weight(channels, channels, 1, rng));
        p.rep_b.push_back(zero_bias(channels));
    }
    p.psi_w = conv_weight(5, 5 * channels, 1, rng);
    p.psi_b = zero_bias(5);
    p.out_w = conv_weight(channels, channels, 3, rng);
    p.out_b = zero_bias(channels);
    return p;
}

Var maff(const std::vector<Var>& branches, const MaffParams& p, Tensor* omega_probe) {
    require(branches.size() == 5, "maff: expected exactly five branches");
    for (const Var& b : branches)
        require(b.val().same_shape(branches[0].val()), "maff: branch shapes differ");
    const int c = branches[0].val().dim(0);
    require(p.phi_local_w.val().dim(0) == c, "maff: channel width mismatch");

    Var fin = branches[0];
    for (int i = 1; i < 5; ++i) fin = add(fin, branches[i]);

    const Var local = conv2d(fin, p.phi_local_w, p.phi_local_b, 1, 1);
    const Var pooled = linear(p.phi_global_w, global_avg(fin), p.phi_global_b);
    const Var base = relu(add_channels(local, pooled));

    // Channel attention: bottleneck MLP on the pooled descriptor.
    const int mid = p.se_w1.val().dim(0);
    const Var no_bias_mid = Var::leaf(Tensor::zeros({mid}));
    const Var no_bias_c = Var::leaf(Tensor::zeros({c}));
    const Var cgate = sigmoid_v(
        linear(p.se_w2, relu(linear(p.se_w1, global_avg(base), no_bias_mid)), no_bias_c));
    const Var refined = mul_channels(base, cgate);

    // Spatial attention on the stacked mean/max channel-pooled maps.
    const Var stacked = concat_ch({channel_mean_map(refined), channel_max_map(refined)});
    const Var sgate = sigmoid_v(conv2d(stacked, p.spa_w, p.spa_b, 1, 3));
    const Var f_att = mul_spatial(refined, sgate);

    // Per-branch gates, then one softmax mixture weight per branch and pixel.
    std::vector<Var> gated;
    gated.reserve(5);
    for (int i = 0; i < 5; ++i)
        gated.push_back(
            mul(sigmoid_v(conv2d(f_att, p.rep_w[i], p.rep_b[i], 1, 0)), branches[i]));
    const Var omega = softmax_ch(conv2d(concat_ch(gated), p.psi_w, p.psi_b, 1, 0));
    if (omega_probe) *omega_probe = omega.val();

    Var mix = mul_spatial(branches[0], slice_ch(omega, 0, 1));
    for (int i = 1; i < 5; ++i)
        mix = add(mix, mul_spatial(branches[i], slice_ch(omega, i, i + 1)));
    return conv2d(mix, p.out_w, p.out_b, 1, 1);
}

MsfbParams make_msfb_params(int channels, Rng& rng) {
    MsfbParams p;
    p.stencils = make_gradient_stencils();
    for (int k : kScales) p.scales.push_back(make_p3d_kernels(channels, k, rng));
    p.maff1 = make_maff_params(channels, rng);
    p.maff2 = make_maff_params(channels, rng);
    p.maff3 = make_maff_params(channels, rng);
    p.res_w = conv_weight(channels, channels, 1, rng);
    p.res_b = zero_bias(channels);
    return p;
}

Var msfb_forward(const Var& x, const MsfbParams& p, MsfbProbe* probe) {
    auto [f_lap, f_sob] = p3d_gradients(x, p.stencils);

    std::vector<Var> stage1;
    stage1.reserve(p.scales.size());
    for (const P3dKernels& k : p.scales) stage1.push_back(p3d_block(x, k));
    const Var h1 = add(add(maff(stage1, p.maff1), f_lap), x);

    std::vector<Var> stage2;
    stage2.reserve(p.scales.size());
    for (const P3dKernels& k : p.scales) stage2.push_back(p3d_block(h1, k));
    const Var h2 = add(add(add(maff(stage2, p.maff2), f_sob), x), h1);

    const Var fused = maff({h2, h1, f_lap, f_sob, x}, p.maff3);
    const Var out = add(fused, gelu(conv2d(x, p.res_w, p.res_b, 1, 0)));

    if (probe) {
        probe->f_lap = f_lap.val();
        probe->f_sob = f_sob.val();
        probe->h1 = h1.val();
        probe->h2 = h2.val();
        probe->stage1_input = x.val();
        probe->stage2_input = h1.val();
    }
    return out;
}

}  // namespace dstnet
