#include <cmath>
#include <vector>

#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kHueSector = kPi / 3.0;  // 60 degrees per hexcone sector

}  // namespace

Var channel_weighted_sum(const Var& x, const std::vector<double>& weights) {
    const Tensor& xv = x.val();
    require(xv.rank() == 3, "channel_weighted_sum: expected C x H x W");
    require(static_cast<int>(weights.size()) == xv.dim(0),
            "channel_weighted_sum: weight count must match channels");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out({1, h, w});
    parallel_for(plane, [&](std::int64_t p) {
        double acc = 0.0;
        for (int k = 0; k < c; ++k) acc += weights[static_cast<size_t>(k)] * xv[k * plane + p];
        out[p] = acc;
    });
    return Var::make(std::move(out), {x}, [weights, plane](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(p.value.shape());
        parallel_for(d.numel(), [&](std::int64_t i) {
            d[i] = n.grad[i % plane] * weights[static_cast<size_t>(i / plane)];
        });
        ad::accumulate(p.grad, d);
    });
}

Var rgb_to_hsv_v(const Var& rgb) {
    const Tensor& xv = rgb.val();
    require(xv.rank() == 3 && xv.dim(0) == 3, "rgb_to_hsv: expected 3 x H x W");
    const int h = xv.dim(1), w = xv.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out(xv.shape());
    parallel_for(plane, [&](std::int64_t p) {
        const double r = xv[p], g = xv[plane + p], b = xv[2 * plane + p];
        const double mx = std::max(r, std::max(g, b));
        const double mn = std::min(r, std::min(g, b));
        const double chroma = mx - mn;
        double hue = 0.0;
        if (chroma > 0.0) {
            if (mx == r)
                hue = (g - b) / chroma;
            else if (mx == g)
                hue = (b - r) / chroma + 2.0;
            else
                hue = (r - g) / chroma + 4.0;
            hue *= kHueSector;
            if (hue < 0.0) hue += kTwoPi;
            if (hue >= kTwoPi) hue -= kTwoPi;
        }
        out[p] = hue;
        out[plane + p] = mx > 0.0 ? chroma / mx : 0.0;
        out[2 * plane + p] = mx;
    });
    return Var::make(std::move(out), {rgb}, [plane](ad::Node& n) {
        ad::Node& par = *n.parents[0];
        if (!par.requires_grad) return;
        const Tensor& xv = par.value;
        Tensor d(xv.shape());
        parallel_for(plane, [&](std::int64_t p) {
            const double x[3] = {xv[p], xv[plane + p], xv[2 * plane + p]};
            int imax = 0, imin = 0;
            for (int i = 1; i < 3; ++i) {
                if (x[i] > x[imax]) imax = i;
                if (x[i] < x[imin]) imin = i;
            }
            const double mx = x[imax], mn = x[imin];
            const double chroma = mx - mn;
            const double gh = n.grad[p];
            const double gs = n.grad[plane + p];
            const double gv = n.grad[2 * plane + p];
            double acc[3] = {0.0, 0.0, 0.0};
            // value: identity on the max channel
            acc[imax] += gv;
            // saturation: d(C/M) with dC_i = [i==max]-[i==min], dM_i = [i==max]
            if (mx > 0.0 && imax != imin) {
                acc[imax] += gs * mn / (mx * mx);
                acc[imin] -= gs / mx;
            }
            // hue: sector-local (n/C + base) * pi/3; the wrap adds a constant
            if (chroma > 0.0) {
                int ia, ib;  // numerator is x[ia] - x[ib]
                if (imax == 0) {
                    ia = 1;
                    ib = 2;
                } else if (imax == 1) {
                    ia = 2;
                    ib = 0;
                } else {
                    ia = 0;
                    ib = 1;
                }
                const double num = x[ia] - x[ib];
                for (int i = 0; i < 3; ++i) {
                    const double dnum = (i == ia ? 1.0 : 0.0) - (i == ib ? 1.0 : 0.0);
                    const double dchroma = (i == imax ? 1.0 : 0.0) - (i == imin ? 1.0 : 0.0);
                    acc[i] += gh * kHueSector * (dnum * chroma - num * dchroma) /
                              (chroma * chroma);
                }
            }
            d[p] = acc[0];
            d[plane + p] = acc[1];
            d[2 * plane + p] = acc[2];
        });
        ad::accumulate(par.grad, d);
    });
}

Var hue_circular_distance(const Var& a, const Var& b) {
    require(a.val().same_shape(b.val()), "hue_circular_distance: shape mismatch");
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    Tensor out(av.shape());
    parallel_for(out.numel(), [&](std::int64_t i) {
        const double diff = std::fabs(av[i] - bv[i]);
        out[i] = diff <= kPi ? diff : kTwoPi - diff;
    });
    return Var::make(std::move(out), {a, b}, [](ad::Node& n) {
        ad::Node& pa = *n.parents[0];
        ad::Node& pb = *n.parents[1];
        if (!pa.requires_grad && !pb.requires_grad) return;
        const Tensor& av = pa.value;
        const Tensor& bv = pb.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            const double delta = av[i] - bv[i];
            double s = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
            if (std::fabs(delta) > kPi) s = -s;
            d[i] = n.grad[i] * s;
        });
        if (pa.requires_grad) ad::accumulate(pa.grad, d);
        if (pb.requires_grad) {
            Tensor db(n.grad.shape());
            parallel_for(n.grad.numel(), [&](std::int64_t i) { db[i] = -d[i]; });
            ad::accumulate(pb.grad, db);
        }
    });
}

}  // namespace dstnet
