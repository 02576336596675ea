#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csifp/core/error.hpp"

namespace csifp::nn {

struct Shape4 {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t count() const noexcept { return n * c * h * w; }
    std::size_t plane() const noexcept { return h * w; }
    std::size_t per_sample() const noexcept { return c * h * w; }
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) +
               ")";
    }
    friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// NCHW tensor of doubles.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape4 shape, double fill = 0.0) : shape_(shape), data_(shape.count(), fill) {
        if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
            throw ShapeError("tensor dimensions must be positive, got " + shape.str());
        }
    }
    Tensor4(Shape4 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
        if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0 || data_.size() != shape.count()) {
            throw ShapeError("tensor data does not match shape " + shape.str());
        }
    }

    const Shape4& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }

    double* plane(std::size_t n, std::size_t c) noexcept { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
    const double* plane(std::size_t n, std::size_t c) const noexcept {
        return data_.data() + (n * shape_.c + c) * shape_.plane();
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    /// Same data, new shape with equal element count.
    Tensor4 reshaped(Shape4 shape) const& {
        if (shape.count() != data_.size()) {
            throw ShapeError("reshape " + shape_.str() + " -> " + shape.str() + " changes element count");
        }
        return Tensor4(shape, data_);
    }
    Tensor4 reshaped(Shape4 shape) && {
        if (shape.count() != data_.size()) {
            throw ShapeError("reshape " + shape_.str() + " -> " + shape.str() + " changes element count");
        }
        return Tensor4(shape, std::move(data_));
    }

    friend bool operator==(const Tensor4&, const Tensor4&) = default;

private:
    Shape4 shape_{};
    std::vector<double> data_;
};

enum class Mode { train, eval };

/// A trainable tensor and its gradient, both owned by a layer.
struct ParamView {
    std::span<double> value;
    std::span<double> grad;
};

/// Row-major flatten of each sample to a (n, c*h*w, 1, 1) tensor.
inline Tensor4 flatten(const Tensor4& x) { return x.reshaped({x.shape().n, x.shape().per_sample(), 1, 1}); }

inline Tensor4 unflatten(Tensor4 grad, const Shape4& original) { return std::move(grad).reshaped(original); }

} // namespace csifp::nn
