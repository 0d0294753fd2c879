#include "dstnet/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dstnet {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    v_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t({1});
    t[0] = value;
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw std::invalid_argument("tensor data size does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = std::move(values);
    return t;
}

void Tensor::fill(double value) { std::fill(v_.begin(), v_.end(), value); }

void Tensor::add_(const Tensor& o) {
    if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch in add_");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
}

void Tensor::add_scaled_(const Tensor& o, double s) {
    if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch in add_scaled_");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += s * o.v_[i];
}

void Tensor::scale_(double s) {
    for (double& x : v_) x *= s;
}

double Tensor::min() const {
    double m = v_.empty() ? 0.0 : v_[0];
    for (double x : v_) m = std::min(m, x);
    return m;
}

double Tensor::max() const {
    double m = v_.empty() ? 0.0 : v_[0];
    for (double x : v_) m = std::max(m, x);
    return m;
}

double Tensor::sum() const {
    double s = 0.0;
    for (double x : v_) s += x;
    return s;
}

double Tensor::abs_max() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::fabs(x));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("tensor shape mismatch in max_abs_diff");
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace dstnet
