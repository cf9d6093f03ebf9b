#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace cimtrain {

// Dense row-major tensor of doubles. Activations use {channels, height, width},
// convolution weights use {k, k, in_channels, out_channels} so that the
// (ky, kx) submatrix is a contiguous in_channels x out_channels block.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel_of(shape_), 0.0);
    }
    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor full(std::vector<int> shape, double value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = value;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Reassign shape, reallocating storage when the element count changes.
    // Contents are unspecified after a size-changing reshape.
    void reshape(const std::vector<int>& shape) {
        shape_ = shape;
        data_.resize(numel_of(shape_));
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at3(int c, int y, int x) {
        assert(shape_.size() == 3);
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at3(int c, int y, int x) const { return const_cast<Tensor*>(this)->at3(c, y, x); }

    double& at4(int a, int b, int c, int d) {
        assert(shape_.size() == 4);
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    double at4(int a, int b, int c, int d) const { return const_cast<Tensor*>(this)->at4(a, b, c, d); }

    double& at2(int r, int c) {
        assert(shape_.size() == 2);
        return data_[static_cast<std::size_t>(r) * shape_[1] + c];
    }
    double at2(int r, int c) const { return const_cast<Tensor*>(this)->at2(r, c); }

    void fill(double v) {
        for (auto& x : data_) x = v;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

inline double tensor_mean(const Tensor& t) {
    if (t.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
    return s / static_cast<double>(t.size());
}

inline double tensor_std(const Tensor& t) {
    if (t.empty()) return 0.0;
    const double m = tensor_mean(t);
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += (t[i] - m) * (t[i] - m);
    return std::sqrt(s / static_cast<double>(t.size()));
}

inline double tensor_abs_max(const Tensor& t) {
    double m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(t[i]));
    return m;
}

}  // namespace cimtrain
