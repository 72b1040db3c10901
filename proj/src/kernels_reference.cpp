// Serial reference kernels: direct per-element formulas, no blocking.

#include <cmath>

#include "stde/kernels.hpp"

namespace stde::kernels {

int conv_output_size(int in_size, const ConvShape& shape) {
    const int pad = shape.kernel / 2;
    return (in_size + 2 * pad - shape.kernel) / shape.stride + 1;
}

namespace reference {

namespace {

std::size_t widx(const ConvShape& s, int co, int ci, int ky, int kx) {
    return ((static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + ky) * s.kernel + kx;
}

double pixel_norm(const Tensor3& e, int y, int x) {
    double n = 0.0;
    for (int d = 0; d < e.channels(); ++d) {
        n += e(d, y, x) * e(d, y, x);
    }
    return std::sqrt(n);
}

double embedding_at(const Tensor3& e, int d, int y, int x) {
    if (y < 0 || y >= e.height() || x < 0 || x >= e.width()) {
        return 0.0;
    }
    return e(d, y, x);
}

} // namespace

Tensor3 conv2d_forward(const Tensor3& in, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& s) {
    const int pad = s.kernel / 2;
    const int oh = conv_output_size(in.height(), s);
    const int ow = conv_output_size(in.width(), s);
    Tensor3 out(s.out_channels, oh, ow);
    for (int co = 0; co < s.out_channels; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias[co];
                for (int ci = 0; ci < s.in_channels; ++ci) {
                    for (int ky = 0; ky < s.kernel; ++ky) {
                        for (int kx = 0; kx < s.kernel; ++kx) {
                            const int iy = oy * s.stride + ky - pad;
                            const int ix = ox * s.stride + kx - pad;
                            if (iy < 0 || iy >= in.height() || ix < 0 || ix >= in.width()) {
                                continue;
                            }
                            acc += weight[widx(s, co, ci, ky, kx)] * in(ci, iy, ix);
                        }
                    }
                }
                out(co, oy, ox) = acc;
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor3& in, std::span<const double> weight, const Tensor3& grad_out,
                          const ConvShape& s) {
    const int pad = s.kernel / 2;
    ConvGrads g;
    g.input = Tensor3(in.channels(), in.height(), in.width());
    g.weight.assign(weight.size(), 0.0);
    g.bias.assign(static_cast<std::size_t>(s.out_channels), 0.0);
    for (int co = 0; co < s.out_channels; ++co) {
        for (int oy = 0; oy < grad_out.height(); ++oy) {
            for (int ox = 0; ox < grad_out.width(); ++ox) {
                const double go = grad_out(co, oy, ox);
                g.bias[co] += go;
                for (int ci = 0; ci < s.in_channels; ++ci) {
                    for (int ky = 0; ky < s.kernel; ++ky) {
                        for (int kx = 0; kx < s.kernel; ++kx) {
                            const int iy = oy * s.stride + ky - pad;
                            const int ix = ox * s.stride + kx - pad;
                            if (iy < 0 || iy >= in.height() || ix < 0 || ix >= in.width()) {
                                continue;
                            }
                            g.weight[widx(s, co, ci, ky, kx)] += go * in(ci, iy, ix);
                            g.input(ci, iy, ix) += go * weight[widx(s, co, ci, ky, kx)];
                        }
                    }
                }
            }
        }
    }
    return g;
}

AffinityTensor pairwise_cosine(const Tensor3& e, const RangeSet& ranges) {
    AffinityTensor out(e.height(), e.width(), ranges);
    for (int y = 0; y < e.height(); ++y) {
        for (int x = 0; x < e.width(); ++x) {
            for (int c = 0; c < ranges.channels(); ++c) {
                const Offset o = ranges.offset(c);
                double dot = 0.0;
                double nq = 0.0;
                for (int d = 0; d < e.channels(); ++d) {
                    const double q = embedding_at(e, d, y + o.dy, x + o.dx);
                    dot += e(d, y, x) * q;
                    nq += q * q;
                }
                const double np = pixel_norm(e, y, x);
                nq = std::sqrt(nq);
                out(y, x, c) = (np < kZeroNorm || nq < kZeroNorm) ? 0.5 : 0.5 * (1.0 + dot / (np * nq));
            }
        }
    }
    return out;
}

Tensor3 pairwise_cosine_backward(const Tensor3& e, const AffinityTensor& coeff) {
    Tensor3 grad(e.channels(), e.height(), e.width());
    const int dims = e.channels();
    for (int y = 0; y < e.height(); ++y) {
        for (int x = 0; x < e.width(); ++x) {
            for (int c = 0; c < coeff.channels(); ++c) {
                if (!coeff.neighbor_in_bounds(y, x, c)) {
                    continue;
                }
                const double k = coeff(y, x, c);
                if (k == 0.0) {
                    continue;
                }
                const Offset o = coeff.ranges().offset(c);
                const int qy = y + o.dy;
                const int qx = x + o.dx;
                const double na = pixel_norm(e, y, x);
                const double nb = pixel_norm(e, qy, qx);
                if (na < kZeroNorm || nb < kZeroNorm) {
                    continue;
                }
                double dot = 0.0;
                for (int d = 0; d < dims; ++d) {
                    dot += e(d, y, x) * e(d, qy, qx);
                }
                // dS/da = (b / (|a||b|) - (a.b) a / (|a|^3 |b|)) / 2, symmetric for b.
                for (int d = 0; d < dims; ++d) {
                    const double a = e(d, y, x);
                    const double b = e(d, qy, qx);
                    grad(d, y, x) += k * 0.5 * (b / (na * nb) - dot * a / (na * na * na * nb));
                    grad(d, qy, qx) += k * 0.5 * (a / (na * nb) - dot * b / (nb * nb * nb * na));
                }
            }
        }
    }
    return grad;
}

} // namespace reference
} // namespace stde::kernels
