#include "dstnet/ref/reference_msfb.hpp"

#include <algorithm>
#include <cmath>

#include "dstnet/ref/reference_kernels.hpp"

namespace dstnet::ref {

namespace {

double gelu1(double t) { return 0.5 * t * (1.0 + std::erf(t / std::sqrt(2.0))); }
double sigmoid1(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<double> channel_mean(const Tensor& x) {
    const int c = x.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    std::vector<double> out(static_cast<size_t>(c), 0.0);
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) s += x[ch * plane + i];
        out[static_cast<size_t>(ch)] = s / static_cast<double>(plane);
    }
    return out;
}

std::vector<double> matvec(const Tensor& w, const std::vector<double>& v,
                           const Tensor* bias) {
    const int rows = w.dim(0), cols = w.dim(1);
    std::vector<double> out(static_cast<size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double s = bias ? (*bias)[r] : 0.0;
        for (int cc = 0; cc < cols; ++cc) s += w.at(r, cc) * v[static_cast<size_t>(cc)];
        out[static_cast<size_t>(r)] = s;
    }
    return out;
}

}  // namespace

std::pair<Tensor, Tensor> p3d_gradients(const Tensor& x, const GradientStencils& s) {
    auto inject = [&](const Tensor& ka, const Tensor& kb, const Tensor& kc) {
        const Tensor a = plane_conv3(x, ka);
        const Tensor b = plane_conv3(x, kb);
        const Tensor c = plane_conv3(x, kc);
        Tensor out(x.shape());
        for (std::int64_t i = 0; i < out.numel(); ++i)
            out[i] = gelu1(std::fabs(a[i]) + std::fabs(b[i]) + std::fabs(c[i]));
        return out;
    };
    return {inject(s.lap_x, s.lap_y, s.lap_z), inject(s.sob_x, s.sob_y, s.sob_z)};
}

Tensor p3d_block(const Tensor& x, const P3dKernels& k) {
    const Tensor pch = plane_conv3(x, k.k_ch.val());
    const Tensor pcw = plane_conv3(x, k.k_cw.val());
    const Tensor phw = plane_conv3(x, k.k_hw.val());
    const Tensor po = plane_conv3(x, k.k_o.val());
    Tensor summed(x.shape());
    for (std::int64_t i = 0; i < summed.numel(); ++i)
        summed[i] = std::max(0.0, pch[i]) + std::max(0.0, pcw[i]) +
                    std::max(0.0, phw[i]) + std::max(0.0, po[i]);
    Tensor mixed = conv2d(summed, k.conv_w.val(), k.conv_b.val(), 1, 1);
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(0.0, mixed[i] + x[i]);
    return out;
}

Tensor maff(const std::vector<Tensor>& branches, const MaffParams& p) {
    const int c = branches[0].dim(0), h = branches[0].dim(1), w = branches[0].dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;

    Tensor fin(branches[0].shape());
    for (std::int64_t i = 0; i < fin.numel(); ++i) {
        double s = 0.0;
        for (const Tensor& b : branches) s += b[i];
        fin[i] = s;
    }

    const Tensor local = conv2d(fin, p.phi_local_w.val(), p.phi_local_b.val(), 1, 1);
    const Tensor gb = p.phi_global_b.val();
    const std::vector<double> glob = matvec(p.phi_global_w.val(), channel_mean(fin), &gb);
    Tensor base(fin.shape());
    for (int ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < plane; ++i)
            base[ch * plane + i] =
                std::max(0.0, local[ch * plane + i] + glob[static_cast<size_t>(ch)]);

    std::vector<double> hidden = matvec(p.se_w1.val(), channel_mean(base), nullptr);
    for (double& v : hidden) v = std::max(0.0, v);
    std::vector<double> gate = matvec(p.se_w2.val(), hidden, nullptr);
    Tensor refined(base.shape());
    for (int ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < plane; ++i)
            refined[ch * plane + i] =
                base[ch * plane + i] * sigmoid1(gate[static_cast<size_t>(ch)]);

    Tensor stacked(std::vector<int>{2, h, w});
    for (std::int64_t i = 0; i < plane; ++i) {
        double s = 0.0, mx = refined[i];
        for (int ch = 0; ch < c; ++ch) {
            s += refined[ch * plane + i];
            mx = std::max(mx, refined[ch * plane + i]);
        }
        stacked[i] = s / c;
        stacked[plane + i] = mx;
    }
    const Tensor sg = conv2d(stacked, p.spa_w.val(), p.spa_b.val(), 1, 3);
    Tensor f_att(refined.shape());
    for (int ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < plane; ++i)
            f_att[ch * plane + i] = refined[ch * plane + i] * sigmoid1(sg[i]);

    Tensor cat(std::vector<int>{5 * c, h, w});
    for (int bi = 0; bi < 5; ++bi) {
        const Tensor gi = conv2d(f_att, p.rep_w[bi].val(), p.rep_b[bi].val(), 1, 0);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(c) * plane; ++i)
            cat[bi * c * plane + i] = sigmoid1(gi[i]) * branches[static_cast<size_t>(bi)][i];
    }
    const Tensor omega = softmax_ch(conv2d(cat, p.psi_w.val(), p.psi_b.val(), 1, 0));

    Tensor mix(branches[0].shape());
    for (int ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < plane; ++i) {
            double s = 0.0;
            for (int bi = 0; bi < 5; ++bi)
                s += omega[bi * plane + i] * branches[static_cast<size_t>(bi)][ch * plane + i];
            mix[ch * plane + i] = s;
        }
    return conv2d(mix, p.out_w.val(), p.out_b.val(), 1, 1);
}

Tensor msfb_forward(const Tensor& x, const MsfbParams& p) {
    auto [f_lap, f_sob] = p3d_gradients(x, p.stencils);

    std::vector<Tensor> stage1;
    for (const P3dKernels& k : p.scales) stage1.push_back(p3d_block(x, k));
    const Tensor m1 = maff(stage1, p.maff1);
    Tensor h1(x.shape());
    for (std::int64_t i = 0; i < h1.numel(); ++i) h1[i] = m1[i] + f_lap[i] + x[i];

    std::vector<Tensor> stage2;
    for (const P3dKernels& k : p.scales) stage2.push_back(p3d_block(h1, k));
    const Tensor m2 = maff(stage2, p.maff2);
    Tensor h2(x.shape());
    for (std::int64_t i = 0; i < h2.numel(); ++i) h2[i] = m2[i] + f_sob[i] + x[i] + h1[i];

    const Tensor m3 = maff({h2, h1, f_lap, f_sob, x}, p.maff3);
    const Tensor res = conv2d(x, p.res_w.val(), p.res_b.val(), 1, 0);
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = m3[i] + gelu1(res[i]);
    return out;
}

}  // namespace dstnet::ref
