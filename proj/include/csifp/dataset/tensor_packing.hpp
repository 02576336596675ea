#pragma once

#include <cmath>

#include "csifp/core/error.hpp"
#include "csifp/core/matrix.hpp"

namespace csifp::dataset {

/// Real network input: M rows x 2B columns, column 2b = Re(beam b),
/// column 2b+1 = Im(beam b).
using CsiTensor = RealMatrix;

inline CsiTensor to_real_tensor(const ComplexMatrix& csi) {
    CsiTensor out(csi.rows(), 2 * csi.cols());
    for (std::size_t m = 0; m < csi.rows(); ++m) {
        for (std::size_t b = 0; b < csi.cols(); ++b) {
            const Complex v = csi(m, b);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw NumericError("CSI entry is not finite");
            }
            out(m, 2 * b) = v.real();
            out(m, 2 * b + 1) = v.imag();
        }
    }
    return out;
}

template <typename T>
ComplexMatrix from_real_tensor(const Matrix<T>& tensor) {
    if (tensor.cols() % 2 != 0) {
        throw ShapeError("real CSI tensor needs an even column count");
    }
    ComplexMatrix out(tensor.rows(), tensor.cols() / 2);
    for (std::size_t m = 0; m < out.rows(); ++m) {
        for (std::size_t b = 0; b < out.cols(); ++b) {
            out(m, b) = Complex(static_cast<double>(tensor(m, 2 * b)), static_cast<double>(tensor(m, 2 * b + 1)));
        }
    }
    return out;
}

} // namespace csifp::dataset
