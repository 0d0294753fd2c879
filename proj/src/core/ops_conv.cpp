#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
    const Tensor& xv = x.val();
    const Tensor& wv = w.val();
    const Tensor& bv = bias.val();
    require(xv.rank() == 3, "conv2d: input must be C x H x W");
    require(wv.rank() == 4, "conv2d: weight must be Co x Ci x Kh x Kw");
    require(wv.dim(1) == xv.dim(0), "conv2d: channel mismatch");
    require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "conv2d: bias must be {Co}");
    require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
    const int ci = xv.dim(0), h = xv.dim(1), win = xv.dim(2);
    const int co = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
    require(h + 2 * pad >= kh && win + 2 * pad >= kw, "conv2d: kernel larger than input");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (win + 2 * pad - kw) / stride + 1;

    Tensor out({co, ho, wo});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % wo);
        const int oy = static_cast<int>((i / wo) % ho);
        const int oc = static_cast<int>(i / (static_cast<std::int64_t>(wo) * ho));
        double acc = bv[oc];
        for (int ic = 0; ic < ci; ++ic)
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= win) continue;
                    acc += xv.at(ic, iy, ix) * wv.at(oc, ic, ky, kx);
                }
            }
        out[i] = acc;
    });

    return Var::make(std::move(out), {x, w, bias}, [stride, pad](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& pw = *n.parents[1];
        ad::Node& pb = *n.parents[2];
        const Tensor& xv = px.value;
        const Tensor& wv = pw.value;
        const int ci = xv.dim(0), h = xv.dim(1), win = xv.dim(2);
        const int co = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
        const int ho = n.grad.dim(1), wo = n.grad.dim(2);

        if (px.requires_grad) {
            Tensor d(xv.shape());
            parallel_for(d.numel(), [&](std::int64_t i) {
                const int ix = static_cast<int>(i % win);
                const int iy = static_cast<int>((i / win) % h);
                const int ic = static_cast<int>(i / (static_cast<std::int64_t>(win) * h));
                double acc = 0.0;
                for (int ky = 0; ky < kh; ++ky) {
                    const int num_y = iy + pad - ky;
                    if (num_y < 0 || num_y % stride != 0) continue;
                    const int oy = num_y / stride;
                    if (oy >= ho) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int num_x = ix + pad - kx;
                        if (num_x < 0 || num_x % stride != 0) continue;
                        const int ox = num_x / stride;
                        if (ox >= wo) continue;
                        for (int oc = 0; oc < co; ++oc)
                            acc += n.grad.at(oc, oy, ox) * wv.at(oc, ic, ky, kx);
                    }
                }
                d[i] = acc;
            });
            ad::accumulate(px.grad, d);
        }
        if (pw.requires_grad) {
            Tensor d(wv.shape());
            parallel_for(d.numel(), [&](std::int64_t i) {
                const int kx = static_cast<int>(i % kw);
                const int ky = static_cast<int>((i / kw) % kh);
                const int ic = static_cast<int>((i / (static_cast<std::int64_t>(kw) * kh)) % ci);
                const int oc =
                    static_cast<int>(i / (static_cast<std::int64_t>(kw) * kh * ci));
                double acc = 0.0;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= win) continue;
                        acc += n.grad.at(oc, oy, ox) * xv.at(ic, iy, ix);
                    }
                }
                d[i] = acc;
            });
            ad::accumulate(pw.grad, d);
        }
        if (pb.requires_grad) {
            Tensor d({co});
            const std::int64_t plane = static_cast<std::int64_t>(ho) * wo;
            parallel_for(co, [&](std::int64_t oc) {
                double acc = 0.0;
                for (std::int64_t j = 0; j < plane; ++j) acc += n.grad[oc * plane + j];
                d[oc] = acc;
            });
            ad::accumulate(pb.grad, d);
        }
    });
}

Var plane_conv3(const Var& x, const Var& w) {
    const Tensor& xv = x.val();
    const Tensor& wv = w.val();
    require(xv.rank() == 3, "plane_conv3: input must be C x H x W");
    require(wv.rank() == 3, "plane_conv3: kernel must be Kc x Kh x Kw");
    require(wv.dim(0) % 2 == 1 && wv.dim(1) % 2 == 1 && wv.dim(2) % 2 == 1,
            "plane_conv3: kernel dims must be odd");
    const int c = xv.dim(0), h = xv.dim(1), win = xv.dim(2);
    const int kc = wv.dim(0), kh = wv.dim(1), kw = wv.dim(2);
    const int pc = kc / 2, ph = kh / 2, pw = kw / 2;

    // Same-size correlation over the full C x H x W volume, zero padded.
    Tensor out(xv.shape());
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % win);
        const int oy = static_cast<int>((i / win) % h);
        const int oc = static_cast<int>(i / (static_cast<std::int64_t>(win) * h));
        double acc = 0.0;
        for (int dc = 0; dc < kc; ++dc) {
            const int ic = oc + dc - pc;
            if (ic < 0 || ic >= c) continue;
            for (int dy = 0; dy < kh; ++dy) {
                const int iy = oy + dy - ph;
                if (iy < 0 || iy >= h) continue;
                for (int dx = 0; dx < kw; ++dx) {
                    const int ix = ox + dx - pw;
                    if (ix < 0 || ix >= win) continue;
                    acc += xv.at(ic, iy, ix) * wv.at(dc, dy, dx);
                }
            }
        }
        out[i] = acc;
    });

    return Var::make(std::move(out), {x, w}, [](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& pw = *n.parents[1];
        const Tensor& xv = px.value;
        const Tensor& wv = pw.value;
        const int c = xv.dim(0), h = xv.dim(1), win = xv.dim(2);
        const int kc = wv.dim(0), kh = wv.dim(1), kw = wv.dim(2);
        const int pc = kc / 2, ph = kh / 2, pwid = kw / 2;

        if (px.requires_grad) {
            Tensor d(xv.shape());
            parallel_for(d.numel(), [&](std::int64_t i) {
                const int ix = static_cast<int>(i % win);
                const int iy = static_cast<int>((i / win) % h);
                const int ic = static_cast<int>(i / (static_cast<std::int64_t>(win) * h));
                double acc = 0.0;
                for (int dc = 0; dc < kc; ++dc) {
                    const int oc = ic - dc + pc;
                    if (oc < 0 || oc >= c) continue;
                    for (int dy = 0; dy < kh; ++dy) {
                        const int oy = iy - dy + ph;
                        if (oy < 0 || oy >= h) continue;
                        for (int dx = 0; dx < kw; ++dx) {
                            const int ox = ix - dx + pwid;
                            if (ox < 0 || ox >= win) continue;
                            acc += n.grad.at(oc, oy, ox) * wv.at(dc, dy, dx);
                        }
                    }
                }
                d[i] = acc;
            });
            ad::accumulate(px.grad, d);
        }
        if (pw.requires_grad) {
            Tensor d(wv.shape());
            parallel_for(d.numel(), [&](std::int64_t i) {
                const int dx = static_cast<int>(i % kw);
                const int dy = static_cast<int>((i / kw) % kh);
                const int dc = static_cast<int>(i / (static_cast<std::int64_t>(kw) * kh));
                double acc = 0.0;
                for (int oc = 0; oc < c; ++oc) {
                    const int ic = oc + dc - pc;
                    if (ic < 0 || ic >= c) continue;
                    for (int oy = 0; oy < h; ++oy) {
                        const int iy = oy + dy - ph;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < win; ++ox) {
                            const int ix = ox + dx - pwid;
                            if (ix < 0 || ix >= win) continue;
                            acc += n.grad.at(oc, oy, ox) * xv.at(ic, iy, ix);
                        }
                    }
                }
                d[i] = acc;
            });
            ad::accumulate(pw.grad, d);
        }
    });
}

}  // namespace dstnet
