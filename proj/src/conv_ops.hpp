#pragma once

// Channel-major activation blocks and 3×3 convolution kernels used by the
// denoiser. An activation is a row-major matrix [channels, batch·height·width].

#include <Eigen/Core>

namespace ansfield::detail {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

struct Extent {
    int batch = 0;
    int height = 0;
    int width = 0;
    int pixels() const { return batch * height * width; }
};

/// Spatial size after a 3×3, padding-1 convolution with the given stride.
inline Extent conv_output(Extent in, int stride) {
    return {in.batch, (in.height + 2 - 3) / stride + 1, (in.width + 2 - 3) / stride + 1};
}

/// [C, B·H·W] -> [C·9, B·Ho·Wo]
Mat im2col(const Mat& x, Extent in, int stride);
/// Adjoint of im2col: scatters [C·9, B·Ho·Wo] back into [C, B·H·W].
Mat col2im(const Mat& col, int channels, Extent in, int stride);

/// y = W·im2col(x) + b, W is [Cout, Cin·9].
Mat conv_forward(const Mat& x, Extent in, const ConstMatMap& w, const double* bias, int stride);
/// Gradients of conv_forward; returns dx and accumulates into dw/db.
Mat conv_backward(const Mat& x, Extent in, const ConstMatMap& w, const Mat& dy, int stride, MatMap dw, double* db);

/// Adjoint of a stride-s convolution whose input extent is `out` (the transposed
/// conv's output). W is [Cy, Cx·9]; u is [Cy, B·Hy·Wy]; result is [Cx, B·H·W].
Mat conv_transpose_forward(const Mat& u, Extent out, const ConstMatMap& w, const double* bias, int stride);
Mat conv_transpose_backward(const Mat& u, Extent out, const ConstMatMap& w, const Mat& dz, int stride, MatMap dw,
                            double* db);

Mat silu(const Mat& a);
/// d/da of silu applied to an upstream gradient.
Mat silu_backward(const Mat& a, const Mat& dy);

}  // namespace ansfield::detail
