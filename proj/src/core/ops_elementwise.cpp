#include <cmath>

#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

Tensor map_unary(const Tensor& a, double (*f)(double)) {
    Tensor out(a.shape());
    parallel_for(a.numel(), [&](std::int64_t i) { out[i] = f(a[i]); });
    return out;
}

void add_grad_mapped(ad::Node& n, int parent, const Tensor& factor) {
    ad::Node& p = *n.parents[static_cast<size_t>(parent)];
    if (!p.requires_grad) return;
    Tensor d(n.grad.shape());
    parallel_for(n.grad.numel(), [&](std::int64_t i) { d[i] = n.grad[i] * factor[i]; });
    ad::accumulate(p.grad, d);
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require(a.val().same_shape(b.val()), "add: shape mismatch");
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] + bv[i]; });
    return Var::make(std::move(out), {a, b}, [](ad::Node& n) {
        for (int k = 0; k < 2; ++k) {
            ad::Node& p = *n.parents[static_cast<size_t>(k)];
            if (p.requires_grad) ad::accumulate(p.grad, n.grad);
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require(a.val().same_shape(b.val()), "sub: shape mismatch");
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] - bv[i]; });
    return Var::make(std::move(out), {a, b}, [](ad::Node& n) {
        ad::Node& pa = *n.parents[0];
        ad::Node& pb = *n.parents[1];
        if (pa.requires_grad) ad::accumulate(pa.grad, n.grad);
        if (pb.requires_grad) {
            Tensor d(n.grad.shape());
            parallel_for(n.grad.numel(), [&](std::int64_t i) { d[i] = -n.grad[i]; });
            ad::accumulate(pb.grad, d);
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require(a.val().same_shape(b.val()), "mul: shape mismatch");
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] * bv[i]; });
    return Var::make(std::move(out), {a, b}, [](ad::Node& n) {
        add_grad_mapped(n, 0, n.parents[1]->value);
        add_grad_mapped(n, 1, n.parents[0]->value);
    });
}

Var div_v(const Var& a, const Var& b) {
    require(a.val().same_shape(b.val()), "div: shape mismatch");
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    const Tensor& bv = b.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] / bv[i]; });
    return Var::make(std::move(out), {a, b}, [](ad::Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        ad::Node& pa = *n.parents[0];
        ad::Node& pb = *n.parents[1];
        if (pa.requires_grad) {
            Tensor d(n.grad.shape());
            parallel_for(n.grad.numel(), [&](std::int64_t i) { d[i] = n.grad[i] / bv[i]; });
            ad::accumulate(pa.grad, d);
        }
        if (pb.requires_grad) {
            Tensor d(n.grad.shape());
            parallel_for(n.grad.numel(),
                         [&](std::int64_t i) { d[i] = -n.grad[i] * av[i] / (bv[i] * bv[i]); });
            ad::accumulate(pb.grad, d);
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] * s; });
    return Var::make(std::move(out), {a}, [s](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) { d[i] = n.grad[i] * s; });
        ad::accumulate(p.grad, d);
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = av[i] + s; });
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (p.requires_grad) ad::accumulate(p.grad, n.grad);
    });
}

Var relu(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) { return x > 0.0 ? x : 0.0; });
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const Tensor& av = p.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(),
                     [&](std::int64_t i) { d[i] = av[i] > 0.0 ? n.grad[i] : 0.0; });
        ad::accumulate(p.grad, d);
    });
}

Var gelu(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) {
        return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    });
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const Tensor& av = p.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            const double x = av[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            d[i] = n.grad[i] * (cdf + x * pdf);
        });
        ad::accumulate(p.grad, d);
    });
}

Var sigmoid_v(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Tensor saved = out;
    return Var::make(std::move(out), {a}, [saved](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            d[i] = n.grad[i] * saved[i] * (1.0 - saved[i]);
        });
        ad::accumulate(p.grad, d);
    });
}

Var tanh_v(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) { return std::tanh(x); });
    Tensor saved = out;
    return Var::make(std::move(out), {a}, [saved](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            d[i] = n.grad[i] * (1.0 - saved[i] * saved[i]);
        });
        ad::accumulate(p.grad, d);
    });
}

Var abs_v(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) { return std::fabs(x); });
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const Tensor& av = p.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            const double s = av[i] > 0.0 ? 1.0 : (av[i] < 0.0 ? -1.0 : 0.0);
            d[i] = n.grad[i] * s;
        });
        ad::accumulate(p.grad, d);
    });
}

Var square(const Var& a) {
    Tensor out = map_unary(a.val(), [](double x) { return x * x; });
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const Tensor& av = p.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(),
                     [&](std::int64_t i) { d[i] = n.grad[i] * 2.0 * av[i]; });
        ad::accumulate(p.grad, d);
    });
}

Var pow_const(const Var& a, double p) {
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    parallel_for(out.numel(), [&](std::int64_t i) { out[i] = std::pow(av[i], p); });
    return Var::make(std::move(out), {a}, [p](ad::Node& n) {
        ad::Node& pa = *n.parents[0];
        if (!pa.requires_grad) return;
        const Tensor& av = pa.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            d[i] = n.grad[i] * p * std::pow(av[i], p - 1.0);
        });
        ad::accumulate(pa.grad, d);
    });
}

Var huber(const Var& a, double delta) {
    require(delta > 0.0, "huber: delta must be positive");
    Tensor out(a.val().shape());
    const Tensor& av = a.val();
    parallel_for(out.numel(), [&](std::int64_t i) {
        const double x = std::fabs(av[i]);
        out[i] = x < delta ? av[i] * av[i] / (2.0 * delta) : x - delta / 2.0;
    });
    return Var::make(std::move(out), {a}, [delta](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const Tensor& av = p.value;
        Tensor d(n.grad.shape());
        parallel_for(n.grad.numel(), [&](std::int64_t i) {
            const double x = av[i];
            double g;
            if (std::fabs(x) < delta)
                g = x / delta;
            else
                g = x > 0.0 ? 1.0 : -1.0;
            d[i] = n.grad[i] * g;
        });
        ad::accumulate(p.grad, d);
    });
}

Var sum_all(const Var& a) {
    const Tensor& av = a.val();
    Tensor out = Tensor::scalar(deterministic_sum(av.numel(), [&](std::int64_t i) { return av[i]; }));
    return Var::make(std::move(out), {a}, [](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        const double g = n.grad[0];
        Tensor d = Tensor::full(p.value.shape(), g);
        ad::accumulate(p.grad, d);
    });
}

Var mean_all(const Var& a) {
    const Tensor& av = a.val();
    const double inv = 1.0 / static_cast<double>(av.numel());
    Tensor out = Tensor::scalar(
        inv * deterministic_sum(av.numel(), [&](std::int64_t i) { return av[i]; }));
    return Var::make(std::move(out), {a}, [inv](ad::Node& n) {
        ad::Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        Tensor d = Tensor::full(p.value.shape(), n.grad[0] * inv);
        ad::accumulate(p.grad, d);
    });
}

}  // namespace dstnet
