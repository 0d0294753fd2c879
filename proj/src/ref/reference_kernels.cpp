#include "dstnet/ref/reference_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "dstnet/core/checks.hpp"

namespace dstnet::ref {

namespace {

constexpr double kPi = 3.14159265358979323846;

int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
    const int ci = x.dim(0), h = x.dim(1), wi = x.dim(2);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wi + 2 * pad - kw) / stride + 1;
    Tensor out({co, ho, wo});
    for (int oc = 0; oc < co; ++oc)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = bias[oc];
                for (int ic = 0; ic < ci; ++ic)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = oy * stride - pad + ky;
                            const int ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wi) continue;
                            acc += x.at(ic, iy, ix) * w.at(oc, ic, ky, kx);
                        }
                out.at(oc, oy, ox) = acc;
            }
    return out;
}

Tensor plane_conv3(const Tensor& x, const Tensor& w) {
    const int c = x.dim(0), h = x.dim(1), wi = x.dim(2);
    const int kc = w.dim(0), kh = w.dim(1), kw = w.dim(2);
    const int pc = kc / 2, ph = kh / 2, pw = kw / 2;
    Tensor out({c, h, wi});
    for (int oc = 0; oc < c; ++oc)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < wi; ++ox) {
                double acc = 0.0;
                for (int dc = 0; dc < kc; ++dc)
                    for (int dy = 0; dy < kh; ++dy)
                        for (int dx = 0; dx < kw; ++dx) {
                            const int ic = oc + dc - pc;
                            const int iy = oy + dy - ph;
                            const int ix = ox + dx - pw;
                            if (ic < 0 || ic >= c || iy < 0 || iy >= h || ix < 0 || ix >= wi)
                                continue;
                            acc += x.at(ic, iy, ix) * w.at(dc, dy, dx);
                        }
                out.at(oc, oy, ox) = acc;
            }
    return out;
}

Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h + top + bottom, w + left + right});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h + top + bottom; ++y)
            for (int xx = 0; xx < w + left + right; ++xx)
                out.at(ch, y, xx) = x.at(ch, mirror(y - top, h), mirror(xx - left, w));
    return out;
}

Tensor cross_attention(const Tensor& x_img, const Tensor& x_feat, const Tensor& wq,
                       const Tensor& wk, const Tensor& wv, int window, Tensor* probs) {
    const int c = x_img.dim(0), h = x_img.dim(1), w = x_img.dim(2);
    const int hp = (h + window - 1) / window * window;
    const int wp = (w + window - 1) / window * window;
    const Tensor xi = pad_reflect(x_img, 0, hp - h, 0, wp - w);
    const Tensor xf = pad_reflect(x_feat, 0, hp - h, 0, wp - w);

    auto project = [&](const Tensor& src, const Tensor& proj, int ch, int y, int x) {
        double acc = 0.0;
        for (int ic = 0; ic < c; ++ic) acc += proj.at(ch, ic) * src.at(ic, y, x);
        return acc;
    };

    const int nwy = hp / window, nwx = wp / window;
    const int n = window * window;
    const double scl = 1.0 / std::sqrt(static_cast<double>(c));
    if (probs) *probs = Tensor({nwy * nwx, n, n});

    Tensor out = xi;
    for (int wy = 0; wy < nwy; ++wy)
        for (int wx = 0; wx < nwx; ++wx) {
            const int wi = wy * nwx + wx;
            // token (ly, lx) -> padded pixel
            auto py = [&](int l) { return wy * window + l / window; };
            auto px = [&](int l) { return wx * window + l % window; };
            std::vector<double> scores(static_cast<size_t>(n));
            for (int l = 0; l < n; ++l) {
                for (int j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (int ch = 0; ch < c; ++ch)
                        dot += project(xi, wq, ch, py(l), px(l)) *
                               project(xf, wk, ch, py(j), px(j));
                    scores[static_cast<size_t>(j)] = dot * scl;
                }
                double m = scores[0];
                for (int j = 1; j < n; ++j) m = std::max(m, scores[static_cast<size_t>(j)]);
                double z = 0.0;
                for (int j = 0; j < n; ++j) {
                    scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - m);
                    z += scores[static_cast<size_t>(j)];
                }
                for (int j = 0; j < n; ++j) scores[static_cast<size_t>(j)] /= z;
                if (probs)
                    for (int j = 0; j < n; ++j)
                        probs->at(wi, l, j) = scores[static_cast<size_t>(j)];
                for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += scores[static_cast<size_t>(j)] * project(xf, wv, ch, py(j), px(j));
                    out.at(ch, py(l), px(l)) += acc;
                }
            }
        }

    if (hp == h && wp == w) return out;
    Tensor cropped({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) cropped.at(ch, y, xx) = out.at(ch, y, xx);
    return cropped;
}

Tensor upsample_bilinear2x(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < 2 * h; ++oy)
            for (int ox = 0; ox < 2 * w; ++ox) {
                double sy = (oy + 0.5) * 0.5 - 0.5;
                double sx = (ox + 0.5) * 0.5 - 0.5;
                sy = std::max(0.0, std::min(sy, static_cast<double>(h - 1)));
                sx = std::max(0.0, std::min(sx, static_cast<double>(w - 1)));
                const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
                const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
                const double fy = sy - y0, fx = sx - x0;
                out.at(ch, oy, ox) =
                    (1 - fy) * ((1 - fx) * x.at(ch, y0, x0) + fx * x.at(ch, y0, x1)) +
                    fy * ((1 - fx) * x.at(ch, y1, x0) + fx * x.at(ch, y1, x1));
            }
    return out;
}

Tensor avg_pool2(const Tensor& x) {
    const int c = x.dim(0), ho = x.dim(1) / 2, wo = x.dim(2) / 2;
    Tensor out({c, ho, wo});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < ho; ++y)
            for (int xx = 0; xx < wo; ++xx)
                out.at(ch, y, xx) =
                    (x.at(ch, 2 * y, 2 * xx) + x.at(ch, 2 * y, 2 * xx + 1) +
                     x.at(ch, 2 * y + 1, 2 * xx) + x.at(ch, 2 * y + 1, 2 * xx + 1)) /
                    4.0;
    return out;
}

Tensor tile_mean(const Tensor& x, int tile) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int ho = (h + tile - 1) / tile, wo = (w + tile - 1) / tile;
    Tensor out({c, ho, wo});
    for (int ch = 0; ch < c; ++ch)
        for (int ty = 0; ty < ho; ++ty)
            for (int tx = 0; tx < wo; ++tx) {
                double acc = 0.0;
                int cnt = 0;
                for (int y = ty * tile; y < std::min(h, (ty + 1) * tile); ++y)
                    for (int xx = tx * tile; xx < std::min(w, (tx + 1) * tile); ++xx) {
                        acc += x.at(ch, y, xx);
                        ++cnt;
                    }
                out.at(ch, ty, tx) = acc / cnt;
            }
    return out;
}

Tensor softmax_ch(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out(x.shape());
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            double m = x.at(0, y, xx);
            for (int ch = 1; ch < c; ++ch) m = std::max(m, x.at(ch, y, xx));
            double z = 0.0;
            for (int ch = 0; ch < c; ++ch) z += std::exp(x.at(ch, y, xx) - m);
            for (int ch = 0; ch < c; ++ch) out.at(ch, y, xx) = std::exp(x.at(ch, y, xx) - m) / z;
        }
    return out;
}

Tensor layernorm_ch(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out(x.shape());
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            double mu = 0.0;
            for (int ch = 0; ch < c; ++ch) mu += x.at(ch, y, xx);
            mu /= c;
            double var = 0.0;
            for (int ch = 0; ch < c; ++ch) {
                const double d = x.at(ch, y, xx) - mu;
                var += d * d;
            }
            var /= c;
            for (int ch = 0; ch < c; ++ch)
                out.at(ch, y, xx) =
                    gamma[ch] * (x.at(ch, y, xx) - mu) / std::sqrt(var + eps) + beta[ch];
        }
    return out;
}

Tensor rgb_to_hsv(const Tensor& rgb) {
    const int h = rgb.dim(1), w = rgb.dim(2);
    Tensor out(rgb.shape());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r = rgb.at(0, y, x), g = rgb.at(1, y, x), b = rgb.at(2, y, x);
            const double mx = std::max({r, g, b});
            const double mn = std::min({r, g, b});
            const double c = mx - mn;
            double hue = 0.0;
            if (c > 0.0) {
                if (mx == r)
                    hue = std::fmod((g - b) / c, 6.0);
                else if (mx == g)
                    hue = (b - r) / c + 2.0;
                else
                    hue = (r - g) / c + 4.0;
                hue *= kPi / 3.0;
                if (hue < 0.0) hue += 2.0 * kPi;
            }
            out.at(0, y, x) = hue;
            out.at(1, y, x) = mx > 0.0 ? c / mx : 0.0;
            out.at(2, y, x) = mx;
        }
    return out;
}

Tensor gaussian_kernel(int size, double sigma) {
    require(size >= 1 && size % 2 == 1, "gaussian_kernel: size must be odd");
    const int r = size / 2;
    Tensor k({size, size});
    double total = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma)) /
                             (2.0 * kPi * sigma * sigma);
            k.at(y + r, x + r) = v;
            total += v;
        }
    for (std::int64_t i = 0; i < k.numel(); ++i) k[i] /= total;
    return k;
}

Tensor gaussian_blur(const Tensor& x, int size, double sigma) {
    const Tensor k = gaussian_kernel(size, sigma);
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int r = size / 2;
    Tensor out(x.shape());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        acc += x.at(ch, mirror(y + dy, h), mirror(xx + dx, w)) *
                               k.at(dy + r, dx + r);
                out.at(ch, y, xx) = acc;
            }
    return out;
}

}  // namespace dstnet::ref
