#include <cmath>
#include <utility>
#include <vector>

#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

Var softmax_ch(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "softmax_ch: expected C x H x W");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out(xv.shape());
    parallel_for(plane, [&](std::int64_t p) {
        double m = xv[p];
        for (int k = 1; k < c; ++k) m = std::max(m, xv[k * plane + p]);
        double z = 0.0;
        for (int k = 0; k < c; ++k) z += std::exp(xv[k * plane + p] - m);
        for (int k = 0; k < c; ++k) out[k * plane + p] = std::exp(xv[k * plane + p] - m) / z;
    });
    Tensor saved = out;
    return Var::make(std::move(out), {x}, [saved, c, plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(p.value.shape());
        parallel_for(plane, [&](std::int64_t px) {
            double dot = 0.0;
            for (int k = 0; k < c; ++k) dot += n.grad[k * plane + px] * saved[k * plane + px];
            for (int k = 0; k < c; ++k)
                d[k * plane + px] = saved[k * plane + px] * (n.grad[k * plane + px] - dot);
        });
        ad::accumulate(p.grad, d);
    });
}

Var layernorm_ch(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "layernorm_ch: expected C x H x W");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    require(gamma.val().rank() == 1 && gamma.val().dim(0) == c, "layernorm_ch: gamma must be {C}");
    require(beta.val().rank() == 1 && beta.val().dim(0) == c, "layernorm_ch: beta must be {C}");
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const Tensor& gv = gamma.val();
    const Tensor& bv = beta.val();
    Tensor out(xv.shape());
    Tensor xhat(xv.shape());
    Tensor inv_std({static_cast<int>(plane)});
    parallel_for(plane, [&](std::int64_t p) {
        double mu = 0.0;
        for (int k = 0; k < c; ++k) mu += xv[k * plane + p];
        mu /= c;
        double var = 0.0;
        for (int k = 0; k < c; ++k) {
            const double dv = xv[k * plane + p] - mu;
            var += dv * dv;
        }
        var /= c;
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std[p] = istd;
        for (int k = 0; k < c; ++k) {
            const double xh = (xv[k * plane + p] - mu) * istd;
            xhat[k * plane + p] = xh;
            out[k * plane + p] = gv[k] * xh + bv[k];
        }
    });
    return Var::make(std::move(out), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), c, plane](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& pg = *n.parents[1];
        ad::Node& pb = *n.parents[2];
        const Tensor& gv = pg.value;
        if (px.requires_grad) {
            Tensor d(px.value.shape());
            parallel_for(plane, [&](std::int64_t p) {
                double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                for (int k = 0; k < c; ++k) {
                    const double dxh = n.grad[k * plane + p] * gv[k];
                    mean_dxh += dxh;
                    mean_dxh_xh += dxh * xhat[k * plane + p];
                }
                mean_dxh /= c;
                mean_dxh_xh /= c;
                for (int k = 0; k < c; ++k) {
                    const double dxh = n.grad[k * plane + p] * gv[k];
                    d[k * plane + p] =
                        inv_std[p] * (dxh - mean_dxh - xhat[k * plane + p] * mean_dxh_xh);
                }
            });
            ad::accumulate(px.grad, d);
        }
        if (pg.requires_grad) {
            Tensor d({c});
            parallel_for(c, [&](std::int64_t k) {
                double acc = 0.0;
                for (std::int64_t p = 0; p < plane; ++p)
                    acc += n.grad[k * plane + p] * xhat[k * plane + p];
                d[k] = acc;
            });
            ad::accumulate(pg.grad, d);
        }
        if (pb.requires_grad) {
            Tensor d({c});
            parallel_for(c, [&](std::int64_t k) {
                double acc = 0.0;
                for (std::int64_t p = 0; p < plane; ++p) acc += n.grad[k * plane + p];
                d[k] = acc;
            });
            ad::accumulate(pb.grad, d);
        }
    });
}

Var global_avg(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "global_avg: expected C x H x W");
    const int c = xv.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor out({c});
    parallel_for(c, [&](std::int64_t k) {
        double acc = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) acc += xv[k * plane + p];
        out[k] = acc / static_cast<double>(plane);
    });
    return Var::make(std::move(out), {x}, [plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(p.value.shape());
        const double inv = 1.0 / static_cast<double>(plane);
        parallel_for(d.numel(), [&](std::int64_t i) { d[i] = n.grad[i / plane] * inv; });
        ad::accumulate(p.grad, d);
    });
}

Var global_max(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "global_max: expected C x H x W");
    const int c = xv.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor out({c});
    std::vector<std::int64_t> arg(static_cast<size_t>(c));
    parallel_for(c, [&](std::int64_t k) {
        double best = xv[k * plane];
        std::int64_t bi = 0;
        for (std::int64_t p = 1; p < plane; ++p) {
            if (xv[k * plane + p] > best) {
                best = xv[k * plane + p];
                bi = p;
            }
        }
        out[k] = best;
        arg[static_cast<size_t>(k)] = bi;
    });
    return Var::make(std::move(out), {x}, [arg = std::move(arg), plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d = Tensor::zeros(p.value.shape());
        const int c = p.value.dim(0);
        parallel_for(c, [&](std::int64_t k) {
            d[k * plane + arg[static_cast<size_t>(k)]] = n.grad[k];
        });
        ad::accumulate(p.grad, d);
    });
}

Var channel_mean_map(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "channel_mean_map: expected C x H x W");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out({1, h, w});
    parallel_for(plane, [&](std::int64_t p) {
        double acc = 0.0;
        for (int k = 0; k < c; ++k) acc += xv[k * plane + p];
        out[p] = acc / c;
    });
    return Var::make(std::move(out), {x}, [c, plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(p.value.shape());
        const double inv = 1.0 / c;
        parallel_for(d.numel(), [&](std::int64_t i) { d[i] = n.grad[i % plane] * inv; });
        ad::accumulate(p.grad, d);
    });
}

Var channel_max_map(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "channel_max_map: expected C x H x W");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out({1, h, w});
    std::vector<int> arg(static_cast<size_t>(plane));
    parallel_for(plane, [&](std::int64_t p) {
        double best = xv[p];
        int bk = 0;
        for (int k = 1; k < c; ++k) {
            if (xv[k * plane + p] > best) {
                best = xv[k * plane + p];
                bk = k;
            }
        }
        out[p] = best;
        arg[static_cast<size_t>(p)] = bk;
    });
    return Var::make(std::move(out), {x}, [arg = std::move(arg), plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d = Tensor::zeros(p.value.shape());
        parallel_for(plane, [&](std::int64_t px) {
            d[static_cast<std::int64_t>(arg[static_cast<size_t>(px)]) * plane + px] = n.grad[px];
        });
        ad::accumulate(p.grad, d);
    });
}

Var linear(const Var& w, const Var& x, const Var& bias) {
    const Tensor& wv = w.val();
    const Tensor& xv = x.val();
    const Tensor& bv = bias.val();
    require(wv.rank() == 2, "linear: weight must be {out, in}");
    require(xv.rank() == 1 && xv.dim(0) == wv.dim(1), "linear: input mismatch");
    require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "linear: bias mismatch");
    const int no = wv.dim(0), ni = wv.dim(1);
    Tensor out({no});
    parallel_for(no, [&](std::int64_t o) {
        double acc = bv[o];
        for (int i = 0; i < ni; ++i) acc += wv.at(static_cast<int>(o), i) * xv[i];
        out[o] = acc;
    });
    return Var::make(std::move(out), {w, x, bias}, [no, ni](ad::Node& n) {
        ad::Node& pw = *n.parents[0];
        ad::Node& px = *n.parents[1];
        ad::Node& pb = *n.parents[2];
        if (pw.requires_grad) {
            Tensor d({no, ni});
            parallel_for(static_cast<std::int64_t>(no) * ni, [&](std::int64_t i) {
                d[i] = n.grad[i / ni] * px.value[i % ni];
            });
            ad::accumulate(pw.grad, d);
        }
        if (px.requires_grad) {
            Tensor d({ni});
            parallel_for(ni, [&](std::int64_t i) {
                double acc = 0.0;
                for (int o = 0; o < no; ++o)
                    acc += n.grad[o] * pw.value.at(o, static_cast<int>(i));
                d[i] = acc;
            });
            ad::accumulate(px.grad, d);
        }
        if (pb.requires_grad) ad::accumulate(pb.grad, n.grad);
    });
}

Var mul_channels(const Var& x, const Var& s) {
    const Tensor& xv = x.val();
    const Tensor& sv = s.val();
    require(xv.rank() == 3, "mul_channels: expected C x H x W");
    require(sv.rank() == 1 && sv.dim(0) == xv.dim(0), "mul_channels: scale must be {C}");
    const std::int64_t plane = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor out(xv.shape());
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = xv[i] * sv[i / plane]; });
    return Var::make(std::move(out), {x, s}, [plane](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& ps = *n.parents[1];
        if (px.requires_grad) {
            Tensor d(px.value.shape());
            parallel_for(d.numel(),
                         [&](std::int64_t i) { d[i] = n.grad[i] * ps.value[i / plane]; });
            ad::accumulate(px.grad, d);
        }
        if (ps.requires_grad) {
            const int c = px.value.dim(0);
            Tensor d({c});
            parallel_for(c, [&](std::int64_t k) {
                double acc = 0.0;
                for (std::int64_t p = 0; p < plane; ++p)
                    acc += n.grad[k * plane + p] * px.value[k * plane + p];
                d[k] = acc;
            });
            ad::accumulate(ps.grad, d);
        }
    });
}

Var add_channels(const Var& x, const Var& s) {
    const Tensor& xv = x.val();
    const Tensor& sv = s.val();
    require(xv.rank() == 3, "add_channels: expected C x H x W");
    require(sv.rank() == 1 && sv.dim(0) == xv.dim(0), "add_channels: offset must be {C}");
    const std::int64_t plane = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor out(xv.shape());
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = xv[i] + sv[i / plane]; });
    return Var::make(std::move(out), {x, s}, [plane](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& ps = *n.parents[1];
        if (px.requires_grad) ad::accumulate(px.grad, n.grad);
        if (ps.requires_grad) {
            const int c = px.value.dim(0);
            Tensor d({c});
            parallel_for(c, [&](std::int64_t k) {
                double acc = 0.0;
                for (std::int64_t p = 0; p < plane; ++p) acc += n.grad[k * plane + p];
                d[k] = acc;
            });
            ad::accumulate(ps.grad, d);
        }
    });
}

Var mul_spatial(const Var& x, const Var& m) {
    const Tensor& xv = x.val();
    const Tensor& mv = m.val();
    require(xv.rank() == 3, "mul_spatial: expected C x H x W");
    require(mv.rank() == 3 && mv.dim(0) == 1 && mv.dim(1) == xv.dim(1) &&
                mv.dim(2) == xv.dim(2),
            "mul_spatial: mask must be 1 x H x W");
    const std::int64_t plane = static_cast<std::int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor out(xv.shape());
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = xv[i] * mv[i % plane]; });
    return Var::make(std::move(out), {x, m}, [plane](ad::Node& n) {
        ad::Node& px = *n.parents[0];
        ad::Node& pm = *n.parents[1];
        if (px.requires_grad) {
            Tensor d(px.value.shape());
            parallel_for(d.numel(),
                         [&](std::int64_t i) { d[i] = n.grad[i] * pm.value[i % plane]; });
            ad::accumulate(px.grad, d);
        }
        if (pm.requires_grad) {
            const int c = px.value.dim(0);
            Tensor d(pm.value.shape());
            parallel_for(plane, [&](std::int64_t p) {
                double acc = 0.0;
                for (int k = 0; k < c; ++k)
                    acc += n.grad[k * plane + p] * px.value[k * plane + p];
                d[p] = acc;
            });
            ad::accumulate(pm.grad, d);
        }
    });
}

namespace {

// Token bookkeeping for the window grid: token t = wi * n + l maps to pixel
// (wy * win + l / win, wx * win + l % win) with wi = wy * nwx + wx.
struct WindowGrid {
    int win = 0, nwx = 0, n = 0;
    std::int64_t pixel(int c, std::int64_t t, std::int64_t plane, int wp) const {
        const std::int64_t wi = t / n;
        const int l = static_cast<int>(t % n);
        const int y = static_cast<int>(wi / nwx) * win + l / win;
        const int x = static_cast<int>(wi % nwx) * win + l % win;
        return static_cast<std::int64_t>(c) * plane + static_cast<std::int64_t>(y) * wp + x;
    }
};

// Project padded feature map {C, Hp, Wp} into tokens {T, C} with a {C, C}
// pointwise weight.
Tensor project_tokens(const Tensor& feat, const Tensor& w, const WindowGrid& g,
                      std::int64_t t_total, std::int64_t plane, int wp) {
    const int c = feat.dim(0);
    Tensor tok({static_cast<int>(t_total), c});
    parallel_for(t_total * c, [&](std::int64_t i) {
        const int oc = static_cast<int>(i % c);
        const std::int64_t t = i / c;
        double acc = 0.0;
        for (int ic = 0; ic < c; ++ic) acc += w.at(oc, ic) * feat[g.pixel(ic, t, plane, wp)];
        tok[i] = acc;
    });
    return tok;
}

// Core of the windowed attention on inputs already aligned to the window.
Var attention_aligned(const Var& x_img, const Var& x_feat, const Var& wq, const Var& wk,
                      const Var& wv, int window, AttnProbe* probe) {
    const Tensor& xi = x_img.val();
    const Tensor& xf = x_feat.val();
    const int c = xi.dim(0), hp = xi.dim(1), wp = xi.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(hp) * wp;
    WindowGrid grid{window, wp / window, window * window};
    const std::int64_t nwin =
        static_cast<std::int64_t>(hp / window) * (wp / window);
    const int n = grid.n;
    const std::int64_t t_total = nwin * n;
    const double scl = 1.0 / std::sqrt(static_cast<double>(c));

    Tensor q = project_tokens(xi, wq.val(), grid, t_total, plane, wp);
    Tensor k = project_tokens(xf, wk.val(), grid, t_total, plane, wp);
    Tensor v = project_tokens(xf, wv.val(), grid, t_total, plane, wp);

    const bool want_grad = ad::grad_enabled() &&
                           (x_img.requires_grad() || x_feat.requires_grad() ||
                            wq.requires_grad() || wk.requires_grad() || wv.requires_grad());
    const bool keep_p = want_grad || probe != nullptr;
    Tensor p_all = keep_p ? Tensor({static_cast<int>(nwin), n, n}) : Tensor({1});

    Tensor o_tok({static_cast<int>(t_total), c});
    parallel_for(nwin, [&](std::int64_t wi) {
        std::vector<double> row(static_cast<size_t>(n));
        for (int l = 0; l < n; ++l) {
            const std::int64_t tl = wi * n + l;
            double m = -1e300;
            for (int j = 0; j < n; ++j) {
                const std::int64_t tj = wi * n + j;
                double acc = 0.0;
                for (int cc = 0; cc < c; ++cc)
                    acc += q.at(static_cast<int>(tl), cc) * k.at(static_cast<int>(tj), cc);
                row[static_cast<size_t>(j)] = acc * scl;
                m = std::max(m, row[static_cast<size_t>(j)]);
            }
            double z = 0.0;
            for (int j = 0; j < n; ++j) {
                row[static_cast<size_t>(j)] = std::exp(row[static_cast<size_t>(j)] - m);
                z += row[static_cast<size_t>(j)];
            }
            for (int j = 0; j < n; ++j) row[static_cast<size_t>(j)] /= z;
            if (keep_p)
                for (int j = 0; j < n; ++j)
                    p_all.at(static_cast<int>(wi), l, j) = row[static_cast<size_t>(j)];
            for (int cc = 0; cc < c; ++cc) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j)
                    acc += row[static_cast<size_t>(j)] *
                           v.at(static_cast<int>(wi * n + j), cc);
                o_tok.at(static_cast<int>(tl), cc) = acc;
            }
        }
    });

    if (probe) probe->attention = p_all;

    Tensor out(xi.shape());
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = xi[i]; });
    parallel_for(t_total, [&](std::int64_t t) {
        for (int cc = 0; cc < c; ++cc)
            out[grid.pixel(cc, t, plane, wp)] += o_tok.at(static_cast<int>(t), cc);
    });

    return Var::make(
        std::move(out), {x_img, x_feat, wq, wk, wv},
        [q = std::move(q), k = std::move(k), v = std::move(v), p_all, grid, nwin, plane, wp,
         c, scl, t_total](ad::Node& node) {
            const int n = grid.n;
            ad::Node& pxi = *node.parents[0];
            ad::Node& pxf = *node.parents[1];
            ad::Node& pwq = *node.parents[2];
            ad::Node& pwk = *node.parents[3];
            ad::Node& pwv = *node.parents[4];
            const Tensor& g = node.grad;

            // Upstream gradient in token form.
            Tensor g_o({static_cast<int>(t_total), c});
            parallel_for(t_total * c, [&](std::int64_t i) {
                const int cc = static_cast<int>(i % c);
                const std::int64_t t = i / c;
                g_o[i] = g[grid.pixel(cc, t, plane, wp)];
            });

            Tensor g_q({static_cast<int>(t_total), c});
            Tensor g_k({static_cast<int>(t_total), c});
            Tensor g_v({static_cast<int>(t_total), c});
            parallel_for(nwin, [&](std::int64_t wi) {
                std::vector<double> g_p(static_cast<size_t>(n));
                std::vector<double> g_s(static_cast<size_t>(n) * static_cast<size_t>(n));
                for (int l = 0; l < n; ++l) {
                    const int tl = static_cast<int>(wi * n + l);
                    double dot = 0.0;
                    for (int j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (int cc = 0; cc < c; ++cc)
                            acc += g_o.at(tl, cc) * v.at(static_cast<int>(wi * n + j), cc);
                        g_p[static_cast<size_t>(j)] = acc;
                        dot += acc * p_all.at(static_cast<int>(wi), l, j);
                    }
                    for (int j = 0; j < n; ++j)
                        g_s[static_cast<size_t>(l * n + j)] =
                            scl * p_all.at(static_cast<int>(wi), l, j) *
                            (g_p[static_cast<size_t>(j)] - dot);
                }
                for (int l = 0; l < n; ++l) {
                    const int tl = static_cast<int>(wi * n + l);
                    for (int cc = 0; cc < c; ++cc) {
                        double acc_q = 0.0, acc_k = 0.0, acc_v = 0.0;
                        for (int j = 0; j < n; ++j) {
                            const int tj = static_cast<int>(wi * n + j);
                            acc_q += g_s[static_cast<size_t>(l * n + j)] * k.at(tj, cc);
                            acc_k += g_s[static_cast<size_t>(j * n + l)] * q.at(tj, cc);
                            acc_v += p_all.at(static_cast<int>(wi), j, l) * g_o.at(tj, cc);
                        }
                        g_q.at(tl, cc) = acc_q;
                        g_k.at(tl, cc) = acc_k;
                        g_v.at(tl, cc) = acc_v;
                    }
                }
            });

            auto unproject = [&](const Tensor& g_tok, const Tensor& w, Tensor& dst) {
                parallel_for(dst.numel(), [&](std::int64_t i) {
                    const std::int64_t p = i % plane;
                    const int ic = static_cast<int>(i / plane);
                    // Recover the token index for this pixel.
                    const int y = static_cast<int>(p / wp);
                    const int x = static_cast<int>(p % wp);
                    const std::int64_t wi =
                        static_cast<std::int64_t>(y / grid.win) * grid.nwx + x / grid.win;
                    const int l = (y % grid.win) * grid.win + x % grid.win;
                    const int t = static_cast<int>(wi * n + l);
                    double acc = 0.0;
                    for (int oc = 0; oc < c; ++oc) acc += g_tok.at(t, oc) * w.at(oc, ic);
                    dst[i] += acc;
                });
            };

            if (pxi.requires_grad) {
                Tensor d(pxi.value.shape());
                parallel_for(d.numel(), [&](std::int64_t i) { d[i] = g[i]; });
                unproject(g_q, pwq.value, d);
                ad::accumulate(pxi.grad, d);
            }
            if (pxf.requires_grad) {
                Tensor d = Tensor::zeros(pxf.value.shape());
                unproject(g_k, pwk.value, d);
                unproject(g_v, pwv.value, d);
                ad::accumulate(pxf.grad, d);
            }

            auto weight_grad = [&](const Tensor& g_tok, const Tensor& feat, ad::Node& pw) {
                if (!pw.requires_grad) return;
                Tensor d({c, c});
                parallel_for(static_cast<std::int64_t>(c) * c, [&](std::int64_t i) {
                    const int ic = static_cast<int>(i % c);
                    const int oc = static_cast<int>(i / c);
                    double acc = 0.0;
                    for (std::int64_t t = 0; t < t_total; ++t)
                        acc += g_tok.at(static_cast<int>(t), oc) *
                               feat[grid.pixel(ic, t, plane, wp)];
                    d[i] = acc;
                });
                ad::accumulate(pw.grad, d);
            };
            weight_grad(g_q, pxi.value, pwq);
            weight_grad(g_k, pxf.value, pwk);
            weight_grad(g_v, pxf.value, pwv);
        });
}

}  // namespace

Var cross_attention(const Var& x_img, const Var& x_feat, const Var& wq, const Var& wk,
                    const Var& wv, int window, AttnProbe* probe) {
    const Tensor& xi = x_img.val();
    require(xi.rank() == 3, "cross_attention: expected C x H x W");
    require(x_feat.val().same_shape(xi), "cross_attention: stream shapes must match");
    const int c = xi.dim(0);
    require(wq.val().rank() == 2 && wq.val().dim(0) == c && wq.val().dim(1) == c,
            "cross_attention: wq must be {C, C}");
    require(wk.val().same_shape(wq.val()) && wv.val().same_shape(wq.val()),
            "cross_attention: wk/wv must be {C, C}");
    require(window >= 1, "cross_attention: bad window");
    const int h = xi.dim(1), w = xi.dim(2);
    const int hp = (h + window - 1) / window * window;
    const int wp = (w + window - 1) / window * window;
    if (hp == h && wp == w) return attention_aligned(x_img, x_feat, wq, wk, wv, window, probe);
    Var xi_p = pad_reflect(x_img, 0, hp - h, 0, wp - w);
    Var xf_p = pad_reflect(x_feat, 0, hp - h, 0, wp - w);
    Var out = attention_aligned(xi_p, xf_p, wq, wk, wv, window, probe);
    return crop(out, 0, 0, h, w);
}

}  // namespace dstnet
