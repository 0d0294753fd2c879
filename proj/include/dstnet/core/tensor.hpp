#pragma once

#include <cstdint>
#include <vector>

namespace dstnet {

/// Dense row-major tensor of doubles. Rank 1..4 is what the library uses:
/// {C}, {H,W}, {C,H,W} feature maps, {Co,Ci,Kh,Kw} conv weights.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    static Tensor from(std::vector<int> shape, std::vector<double> values);

    bool defined() const { return !shape_.empty(); }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(v_.size()); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    double& operator[](std::int64_t i) { return v_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return v_[static_cast<size_t>(i)]; }

    // Rank-specific indexing. No bounds checks in release builds.
    double& at(int a, int b) { return v_[static_cast<size_t>(a) * shape_[1] + b]; }
    double at(int a, int b) const { return v_[static_cast<size_t>(a) * shape_[1] + b]; }
    double& at(int a, int b, int c) {
        return v_[(static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double at(int a, int b, int c) const {
        return v_[(static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double& at(int a, int b, int c, int d) {
        return v_[((static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double at(int a, int b, int c, int d) const {
        return v_[((static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }

    void fill(double value);
    void add_(const Tensor& o);           // elementwise +=
    void add_scaled_(const Tensor& o, double s);
    void scale_(double s);

    double min() const;
    double max() const;
    double sum() const;                   // serial, fixed order
    double abs_max() const;
    double mean() const { return numel() > 0 ? sum() / static_cast<double>(numel()) : 0.0; }

private:
    std::vector<int> shape_;
    std::vector<double> v_;
};

/// Max absolute elementwise difference; tensors must share a shape.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dstnet
