#include "conv_ops.hpp"

#include <cmath>

namespace ansfield::detail {

Mat im2col(const Mat& x, Extent in, int stride) {
    const Extent out = conv_output(in, stride);
    const int channels = static_cast<int>(x.rows());
    Mat col = Mat::Zero(channels * 9, out.pixels());
    const int hw_in = in.height * in.width;
    const int hw_out = out.height * out.width;
    for (int c = 0; c < channels; ++c) {
        const double* src = x.row(c).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* dst = col.row(c * 9 + ky * 3 + kx).data();
                for (int b = 0; b < in.batch; ++b) {
                    const double* plane = src + b * hw_in;
                    double* dplane = dst + b * hw_out;
                    for (int oy = 0; oy < out.height; ++oy) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int ox = 0; ox < out.width; ++ox) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= in.width) continue;
                            dplane[oy * out.width + ox] = plane[iy * in.width + ix];
                        }
                    }
                }
            }
        }
    }
    return col;
}

Mat col2im(const Mat& col, int channels, Extent in, int stride) {
    const Extent out = conv_output(in, stride);
    Mat x = Mat::Zero(channels, in.pixels());
    const int hw_in = in.height * in.width;
    const int hw_out = out.height * out.width;
    for (int c = 0; c < channels; ++c) {
        double* dst = x.row(c).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* src = col.row(c * 9 + ky * 3 + kx).data();
                for (int b = 0; b < in.batch; ++b) {
                    double* plane = dst + b * hw_in;
                    const double* splane = src + b * hw_out;
                    for (int oy = 0; oy < out.height; ++oy) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int ox = 0; ox < out.width; ++ox) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= in.width) continue;
                            plane[iy * in.width + ix] += splane[oy * out.width + ox];
                        }
                    }
                }
            }
        }
    }
    return x;
}

Mat conv_forward(const Mat& x, Extent in, const ConstMatMap& w, const double* bias, int stride) {
    Mat y = w * im2col(x, in, stride);
    for (Eigen::Index c = 0; c < y.rows(); ++c) y.row(c).array() += bias[c];
    return y;
}

Mat conv_backward(const Mat& x, Extent in, const ConstMatMap& w, const Mat& dy, int stride, MatMap dw, double* db) {
    const Mat col = im2col(x, in, stride);
    dw.noalias() += dy * col.transpose();
    for (Eigen::Index c = 0; c < dy.rows(); ++c) db[c] += dy.row(c).sum();
    const Mat dcol = w.transpose() * dy;
    return col2im(dcol, static_cast<int>(x.rows()), in, stride);
}

Mat conv_transpose_forward(const Mat& u, Extent out, const ConstMatMap& w, const double* bias, int stride) {
    const Mat dcol = w.transpose() * u;
    Mat z = col2im(dcol, static_cast<int>(w.cols() / 9), out, stride);
    for (Eigen::Index c = 0; c < z.rows(); ++c) z.row(c).array() += bias[c];
    return z;
}

Mat conv_transpose_backward(const Mat& u, Extent out, const ConstMatMap& w, const Mat& dz, int stride, MatMap dw,
                            double* db) {
    const Mat col = im2col(dz, out, stride);
    dw.noalias() += u * col.transpose();
    for (Eigen::Index c = 0; c < dz.rows(); ++c) db[c] += dz.row(c).sum();
    return w * col;
}

Mat silu(const Mat& a) {
    return a.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Mat silu_backward(const Mat& a, const Mat& dy) {
    return a.binaryExpr(dy, [](double v, double g) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return g * s * (1.0 + v * (1.0 - s));
    });
}

}  // namespace ansfield::detail
