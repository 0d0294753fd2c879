#include <algorithm>
#include <tuple>
#include <utility>
#include <vector>

#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

namespace {

// Mirror index into [0, n) without repeating the border sample:
// reflect(-1) == 1, reflect(n) == n - 2.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

// For each source index, the list of (target index, weight) pairs that read it.
using Pulls = std::vector<std::vector<std::pair<int, double>>>;

}  // namespace

Var concat_ch(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_ch: no inputs");
    const Tensor& first = parts[0].val();
    require(first.rank() == 3, "concat_ch: expected C x H x W inputs");
    const int h = first.dim(1);
    const int w = first.dim(2);
    int c_total = 0;
    for (const Var& p : parts) {
        require(p.val().rank() == 3 && p.val().dim(1) == h && p.val().dim(2) == w,
                "concat_ch: spatial shape mismatch");
        c_total += p.val().dim(0);
    }
    Tensor out({c_total, h, w});
    std::vector<int> offsets;
    int off = 0;
    for (const Var& p : parts) {
        offsets.push_back(off);
        const Tensor& pv = p.val();
        const std::int64_t n = pv.numel();
        double* dst = out.data() + static_cast<std::int64_t>(off) * h * w;
        parallel_for(n, [&](std::int64_t i) { dst[i] = pv[i]; });
        off += pv.dim(0);
    }
    return Var::make(std::move(out), parts, [offsets, h, w](ad::Node& n) {
        for (size_t k = 0; k < n.parents.size(); ++k) {
            ad::Node& p = *n.parents[k];
            if (!p.requires_grad) continue;
            const std::int64_t base = static_cast<std::int64_t>(offsets[k]) * h * w;
            Tensor d(p.value.shape());
            parallel_for(d.numel(), [&](std::int64_t i) { d[i] = n.grad[base + i]; });
            ad::accumulate(p.grad, d);
        }
    });
}

Var slice_ch(const Var& x, int c0, int c1) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "slice_ch: expected C x H x W");
    require(0 <= c0 && c0 < c1 && c1 <= xv.dim(0), "slice_ch: bad channel range");
    const int h = xv.dim(1);
    const int w = xv.dim(2);
    Tensor out({c1 - c0, h, w});
    const std::int64_t base = static_cast<std::int64_t>(c0) * h * w;
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = xv[base + i]; });
    return Var::make(std::move(out), {x}, [c0, h, w](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d = Tensor::zeros(p.value.shape());
        const std::int64_t base = static_cast<std::int64_t>(c0) * h * w;
        parallel_for(n.grad.numel(), [&](std::int64_t i) { d[base + i] = n.grad[i]; });
        ad::accumulate(p.grad, d);
    });
}

Var pad_reflect(const Var& x, int top, int bottom, int left, int right) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "pad_reflect: expected C x H x W");
    require(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad_reflect: negative pad");
    const int c = xv.dim(0);
    const int h = xv.dim(1);
    const int w = xv.dim(2);
    const int ho = h + top + bottom;
    const int wo = w + left + right;
    Tensor out({c, ho, wo});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % wo);
        const int oy = static_cast<int>((i / wo) % ho);
        const int ch = static_cast<int>(i / (static_cast<std::int64_t>(wo) * ho));
        const int sy = reflect_index(oy - top, h);
        const int sx = reflect_index(ox - left, w);
        out[i] = xv.at(ch, sy, sx);
    });
    return Var::make(std::move(out), {x}, [top, left, h, w, ho, wo](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        // Gather: collect, per source row/col, which padded rows/cols read it.
        Pulls rows(static_cast<size_t>(h)), cols(static_cast<size_t>(w));
        for (int oy = 0; oy < ho; ++oy)
            rows[static_cast<size_t>(reflect_index(oy - top, h))].push_back({oy, 1.0});
        for (int ox = 0; ox < wo; ++ox)
            cols[static_cast<size_t>(reflect_index(ox - left, w))].push_back({ox, 1.0});
        const int ch_count = p.value.dim(0);
        Tensor d(p.value.shape());
        parallel_for(static_cast<std::int64_t>(ch_count) * h * w, [&](std::int64_t i) {
            const int sx = static_cast<int>(i % w);
            const int sy = static_cast<int>((i / w) % h);
            const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
            double acc = 0.0;
            for (const auto& [oy, wr] : rows[static_cast<size_t>(sy)])
                for (const auto& [ox, wc] : cols[static_cast<size_t>(sx)])
                    acc += wr * wc * n.grad.at(ch, oy, ox);
            d[i] = acc;
        });
        ad::accumulate(p.grad, d);
    });
}

Var crop(const Var& x, int top, int left, int h, int w) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "crop: expected C x H x W");
    require(top >= 0 && left >= 0 && h > 0 && w > 0 && top + h <= xv.dim(1) &&
                left + w <= xv.dim(2),
            "crop: window out of bounds");
    const int c = xv.dim(0);
    Tensor out({c, h, w});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % w);
        const int oy = static_cast<int>((i / w) % h);
        const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
        out[i] = xv.at(ch, top + oy, left + ox);
    });
    return Var::make(std::move(out), {x}, [top, left, h, w](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d = Tensor::zeros(p.value.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            const int ox = static_cast<int>(i % w);
            const int oy = static_cast<int>((i / w) % h);
            const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
            d.at(ch, top + oy, left + ox) = n.grad[i];
        });
        ad::accumulate(p.grad, d);
    });
}

Var upsample_bilinear2x(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "upsample: expected C x H x W");
    const int c = xv.dim(0);
    const int h = xv.dim(1);
    const int w = xv.dim(2);
    const int ho = 2 * h;
    const int wo = 2 * w;
    // Half-pixel source coordinates with edge clamping: one (lo, hi, frac)
    // triple per output row/column.
    auto make_axis = [](int n_out, int n_in) {
        std::vector<int> lo(static_cast<size_t>(n_out)), hi(static_cast<size_t>(n_out));
        std::vector<double> frac(static_cast<size_t>(n_out));
        for (int o = 0; o < n_out; ++o) {
            double s = (o + 0.5) * 0.5 - 0.5;
            if (s < 0.0) s = 0.0;
            int l = static_cast<int>(s);
            if (l > n_in - 1) l = n_in - 1;
            const int u = l + 1 < n_in ? l + 1 : n_in - 1;
            lo[static_cast<size_t>(o)] = l;
            hi[static_cast<size_t>(o)] = u;
            frac[static_cast<size_t>(o)] = s - l;
        }
        return std::tuple{lo, hi, frac};
    };
    auto [ylo, yhi, yfrac] = make_axis(ho, h);
    auto [xlo, xhi, xfrac] = make_axis(wo, w);
    Tensor out({c, ho, wo});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % wo);
        const int oy = static_cast<int>((i / wo) % ho);
        const int ch = static_cast<int>(i / (static_cast<std::int64_t>(wo) * ho));
        const double fy = yfrac[static_cast<size_t>(oy)];
        const double fx = xfrac[static_cast<size_t>(ox)];
        const int y0 = ylo[static_cast<size_t>(oy)], y1 = yhi[static_cast<size_t>(oy)];
        const int x0 = xlo[static_cast<size_t>(ox)], x1 = xhi[static_cast<size_t>(ox)];
        out[i] = (1.0 - fy) * ((1.0 - fx) * xv.at(ch, y0, x0) + fx * xv.at(ch, y0, x1)) +
                 fy * ((1.0 - fx) * xv.at(ch, y1, x0) + fx * xv.at(ch, y1, x1));
    });
    return Var::make(std::move(out), {x},
                     [h, w, ho, wo, ylo, yhi, yfrac, xlo, xhi, xfrac](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Pulls rows(static_cast<size_t>(h)), cols(static_cast<size_t>(w));
        for (int oy = 0; oy < ho; ++oy) {
            const double fy = yfrac[static_cast<size_t>(oy)];
            rows[static_cast<size_t>(ylo[static_cast<size_t>(oy)])].push_back({oy, 1.0 - fy});
            if (fy != 0.0 || yhi[static_cast<size_t>(oy)] != ylo[static_cast<size_t>(oy)])
                rows[static_cast<size_t>(yhi[static_cast<size_t>(oy)])].push_back({oy, fy});
        }
        for (int ox = 0; ox < wo; ++ox) {
            const double fx = xfrac[static_cast<size_t>(ox)];
            cols[static_cast<size_t>(xlo[static_cast<size_t>(ox)])].push_back({ox, 1.0 - fx});
            if (fx != 0.0 || xhi[static_cast<size_t>(ox)] != xlo[static_cast<size_t>(ox)])
                cols[static_cast<size_t>(xhi[static_cast<size_t>(ox)])].push_back({ox, fx});
        }
        const int c = p.value.dim(0);
        Tensor d(p.value.shape());
        parallel_for(static_cast<std::int64_t>(c) * h * w, [&](std::int64_t i) {
            const int sx = static_cast<int>(i % w);
            const int sy = static_cast<int>((i / w) % h);
            const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
            double acc = 0.0;
            for (const auto& [oy, wr] : rows[static_cast<size_t>(sy)])
                for (const auto& [ox, wc] : cols[static_cast<size_t>(sx)])
                    acc += wr * wc * n.grad.at(ch, oy, ox);
            d[i] = acc;
        });
        ad::accumulate(p.grad, d);
    });
}

Var avg_pool2(const Var& x) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "avg_pool2: expected C x H x W");
    const int c = xv.dim(0);
    const int h = xv.dim(1);
    const int w = xv.dim(2);
    require(h >= 2 && w >= 2, "avg_pool2: input too small");
    const int ho = h / 2;
    const int wo = w / 2;
    Tensor out({c, ho, wo});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % wo);
        const int oy = static_cast<int>((i / wo) % ho);
        const int ch = static_cast<int>(i / (static_cast<std::int64_t>(wo) * ho));
        out[i] = 0.25 * (xv.at(ch, 2 * oy, 2 * ox) + xv.at(ch, 2 * oy, 2 * ox + 1) +
                         xv.at(ch, 2 * oy + 1, 2 * ox) + xv.at(ch, 2 * oy + 1, 2 * ox + 1));
    });
    return Var::make(std::move(out), {x}, [h, w, ho, wo](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const int c = p.value.dim(0);
        Tensor d = Tensor::zeros(p.value.shape());
        parallel_for(static_cast<std::int64_t>(c) * h * w, [&](std::int64_t i) {
            const int sx = static_cast<int>(i % w);
            const int sy = static_cast<int>((i / w) % h);
            const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
            const int oy = sy / 2;
            const int ox = sx / 2;
            if (oy < ho && ox < wo) d[i] = 0.25 * n.grad.at(ch, oy, ox);
        });
        ad::accumulate(p.grad, d);
    });
}

Var tile_mean(const Var& x, int tile) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "tile_mean: expected C x H x W");
    require(tile > 0, "tile_mean: tile must be positive");
    const int c = xv.dim(0);
    const int h = xv.dim(1);
    const int w = xv.dim(2);
    const int ho = (h + tile - 1) / tile;
    const int wo = (w + tile - 1) / tile;
    Tensor out({c, ho, wo});
    parallel_for(out.numel(), [&](std::int64_t i) {
        const int ox = static_cast<int>(i % wo);
        const int oy = static_cast<int>((i / wo) % ho);
        const int ch = static_cast<int>(i / (static_cast<std::int64_t>(wo) * ho));
        const int y0 = oy * tile, y1 = std::min(h, y0 + tile);
        const int x0 = ox * tile, x1 = std::min(w, x0 + tile);
        double acc = 0.0;
        for (int y = y0; y < y1; ++y)
            for (int xx = x0; xx < x1; ++xx) acc += xv.at(ch, y, xx);
        out[i] = acc / static_cast<double>((y1 - y0) * (x1 - x0));
    });
    return Var::make(std::move(out), {x}, [tile, h, w, ho, wo](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const int c = p.value.dim(0);
        Tensor d(p.value.shape());
        parallel_for(static_cast<std::int64_t>(c) * h * w, [&](std::int64_t i) {
            const int sx = static_cast<int>(i % w);
            const int sy = static_cast<int>((i / w) % h);
            const int ch = static_cast<int>(i / (static_cast<std::int64_t>(w) * h));
            const int oy = sy / tile;
            const int ox = sx / tile;
            const int cnt = (std::min(h, (oy + 1) * tile) - oy * tile) *
                            (std::min(w, (ox + 1) * tile) - ox * tile);
            d[i] = n.grad.at(ch, oy, ox) / static_cast<double>(cnt);
        });
        ad::accumulate(p.grad, d);
    });
}

}  // namespace dstnet
