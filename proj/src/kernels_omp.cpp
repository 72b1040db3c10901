#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "stde/kernels.hpp"

namespace stde::kernels {

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Output columns ox with 0 <= ox*stride + kx - pad < iw.
std::pair<int, int> valid_columns(int kx, int pad, int stride, int iw, int ow) {
    const int lo = std::max(0, -floor_div(kx - pad, stride));
    const int hi = std::min(ow, floor_div(iw - 1 - kx + pad, stride) + 1);
    return {lo, std::max(lo, hi)};
}

std::vector<double> pixel_norms(const Tensor3& e) {
    const int h = e.height();
    const int w = e.width();
    std::vector<double> norms(e.plane_size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            double acc = 0.0;
            for (int d = 0; d < e.channels(); ++d) {
                const double v = e.plane(d)[i];
                acc += v * v;
            }
            norms[i] = std::sqrt(acc);
        }
    }
    return norms;
}

} // namespace

Tensor3 conv2d_forward(const Tensor3& in, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& s) {
    if (in.channels() != s.in_channels) {
        throw DataError("conv2d_forward: input has " + std::to_string(in.channels()) + " channels, expected " +
                        std::to_string(s.in_channels));
    }
    const int pad = s.kernel / 2;
    const int ih = in.height();
    const int iw = in.width();
    const int oh = conv_output_size(ih, s);
    const int ow = conv_output_size(iw, s);
    Tensor3 out(s.out_channels, oh, ow);
    const int k = s.kernel;
    const int stride = s.stride;

#pragma omp parallel for schedule(static)
    for (int co = 0; co < s.out_channels; ++co) {
        double* dst = out.plane(co);
        std::fill(dst, dst + out.plane_size(), bias[co]);
        for (int ci = 0; ci < s.in_channels; ++ci) {
            const double* src = in.plane(ci);
            const double* wk = weight.data() + (static_cast<std::size_t>(co) * s.in_channels + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wk[ky * k + kx];
                    const auto [ox_lo, ox_hi] = valid_columns(kx, pad, stride, iw, ow);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= ih) {
                            continue;
                        }
                        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(iy) * iw + (kx - pad);
                        double* orow = dst + static_cast<std::size_t>(oy) * ow;
                        for (int ox = ox_lo; ox < ox_hi; ++ox) {
                            orow[ox] += wv * src[base + ox * stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor3& in, std::span<const double> weight, const Tensor3& grad_out,
                          const ConvShape& s) {
    const int pad = s.kernel / 2;
    const int ih = in.height();
    const int iw = in.width();
    const int oh = grad_out.height();
    const int ow = grad_out.width();
    if (grad_out.channels() != s.out_channels || oh != conv_output_size(ih, s) || ow != conv_output_size(iw, s)) {
        throw DataError("conv2d_backward: output gradient shape mismatch");
    }
    const int k = s.kernel;
    const int stride = s.stride;
    ConvGrads g;
    g.input = Tensor3(in.channels(), ih, iw);
    g.weight.assign(weight.size(), 0.0);
    g.bias.assign(static_cast<std::size_t>(s.out_channels), 0.0);

#pragma omp parallel for schedule(static)
    for (int co = 0; co < s.out_channels; ++co) {
        const double* go = grad_out.plane(co);
        double b = 0.0;
        for (std::size_t i = 0; i < grad_out.plane_size(); ++i) {
            b += go[i];
        }
        g.bias[co] = b;
        for (int ci = 0; ci < s.in_channels; ++ci) {
            const double* src = in.plane(ci);
            double* gw = g.weight.data() + (static_cast<std::size_t>(co) * s.in_channels + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const auto [ox_lo, ox_hi] = valid_columns(kx, pad, stride, iw, ow);
                    double acc = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= ih) {
                            continue;
                        }
                        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(iy) * iw + (kx - pad);
                        const double* grow = go + static_cast<std::size_t>(oy) * ow;
                        for (int ox = ox_lo; ox < ox_hi; ++ox) {
                            acc += grow[ox] * src[base + ox * stride];
                        }
                    }
                    gw[ky * k + kx] = acc;
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < s.in_channels; ++ci) {
        double* gi = g.input.plane(ci);
        for (int co = 0; co < s.out_channels; ++co) {
            const double* go = grad_out.plane(co);
            const double* wk = weight.data() + (static_cast<std::size_t>(co) * s.in_channels + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wk[ky * k + kx];
                    const auto [ox_lo, ox_hi] = valid_columns(kx, pad, stride, iw, ow);
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= ih) {
                            continue;
                        }
                        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(iy) * iw + (kx - pad);
                        const double* grow = go + static_cast<std::size_t>(oy) * ow;
                        for (int ox = ox_lo; ox < ox_hi; ++ox) {
                            gi[base + ox * stride] += wv * grow[ox];
                        }
                    }
                }
            }
        }
    }
    return g;
}

AffinityTensor pairwise_cosine(const Tensor3& e, const RangeSet& ranges) {
    const int h = e.height();
    const int w = e.width();
    const int dims = e.channels();
    const auto norms = pixel_norms(e);
    AffinityTensor out(h, w, ranges, 0.5);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int c = 0; c < ranges.channels(); ++c) {
            const Offset o = ranges.offset(c);
            const int qy = y + o.dy;
            if (qy < 0 || qy >= h) {
                continue;
            }
            double* dst = out.plane(c) + static_cast<std::size_t>(y) * w;
            const int x_lo = std::max(0, -o.dx);
            const int x_hi = std::min(w, w - o.dx);
            for (int x = x_lo; x < x_hi; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const std::size_t q = static_cast<std::size_t>(qy) * w + (x + o.dx);
                if (norms[p] < kZeroNorm || norms[q] < kZeroNorm) {
                    continue;
                }
                double dot = 0.0;
                for (int d = 0; d < dims; ++d) {
                    dot += e.plane(d)[p] * e.plane(d)[q];
                }
                dst[x] = 0.5 * (1.0 + dot / (norms[p] * norms[q]));
            }
        }
    }
    return out;
}

Tensor3 pairwise_cosine_backward(const Tensor3& e, const AffinityTensor& coeff) {
    const int h = e.height();
    const int w = e.width();
    const int dims = e.channels();
    const int nch = coeff.channels();
    const auto norms = pixel_norms(e);

    // Per-entry scalars so that, for entry (p, c) with neighbour q,
    //   dS/de_p = cross * e_q - self_p * e_p,   dS/de_q = cross * e_p - self_q * e_q.
    AffinityTensor cross(h, w, coeff.ranges());
    AffinityTensor self_p(h, w, coeff.ranges());
    AffinityTensor self_q(h, w, coeff.ranges());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int c = 0; c < nch; ++c) {
            const Offset o = coeff.ranges().offset(c);
            const int qy = y + o.dy;
            if (qy < 0 || qy >= h) {
                continue;
            }
            const int x_lo = std::max(0, -o.dx);
            const int x_hi = std::min(w, w - o.dx);
            for (int x = x_lo; x < x_hi; ++x) {
                const double k = coeff(y, x, c);
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const std::size_t q = static_cast<std::size_t>(qy) * w + (x + o.dx);
                const double na = norms[p];
                const double nb = norms[q];
                if (k == 0.0 || na < kZeroNorm || nb < kZeroNorm) {
                    continue;
                }
                double dot = 0.0;
                for (int d = 0; d < dims; ++d) {
                    dot += e.plane(d)[p] * e.plane(d)[q];
                }
                cross(y, x, c) = 0.5 * k / (na * nb);
                self_p(y, x, c) = 0.5 * k * dot / (na * na * na * nb);
                self_q(y, x, c) = 0.5 * k * dot / (nb * nb * nb * na);
            }
        }
    }

    Tensor3 grad(dims, h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            for (int c = 0; c < nch; ++c) {
                const Offset o = coeff.ranges().offset(c);
                // p as the centre of entry (p, c)
                const int qy = y + o.dy;
                const int qx = x + o.dx;
                if (qy >= 0 && qy < h && qx >= 0 && qx < w) {
                    const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
                    const double a = cross(y, x, c);
                    const double b = self_p(y, x, c);
                    if (a != 0.0 || b != 0.0) {
                        for (int d = 0; d < dims; ++d) {
                            grad.plane(d)[p] += a * e.plane(d)[q] - b * e.plane(d)[p];
                        }
                    }
                }
                // p as the neighbour of entry (r, c) with r = p - o
                const int ry = y - o.dy;
                const int rx = x - o.dx;
                if (ry >= 0 && ry < h && rx >= 0 && rx < w) {
                    const std::size_t r = static_cast<std::size_t>(ry) * w + rx;
                    const double a = cross(ry, rx, c);
                    const double b = self_q(ry, rx, c);
                    if (a != 0.0 || b != 0.0) {
                        for (int d = 0; d < dims; ++d) {
                            grad.plane(d)[p] += a * e.plane(d)[r] - b * e.plane(d)[p];
                        }
                    }
                }
            }
        }
    }
    return grad;
}

} // namespace stde::kernels
