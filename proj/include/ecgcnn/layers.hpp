#pragma once

// Layer kernels shared by the 1-D and 2-D networks. Convolution treats 1-D
// input as height-1 2-D input, so one im2col + GEMM core serves both. GEMM
// calls go through BLAS; float tensors use sgemm, double tensors dgemm
// (the double instantiation backs the finite-difference checks).

#include <cblas.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ecgcnn/errors.hpp"
#include "ecgcnn/rng.hpp"
#include "ecgcnn/tensor.hpp"

namespace ecgcnn {

enum class Mode { train, eval };

struct Extent {
    std::size_t h = 1;
    std::size_t w = 1;
};

namespace detail {

inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n, std::size_t k,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc) {
    cblas_sgemm(CblasRowMajor, ta, tb, int(m), int(n), int(k), 1.0f, a, int(lda), b, int(ldb), 0.0f, c,
                int(ldc));
}

inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                 std::size_t ldc) {
    cblas_dgemm(CblasRowMajor, ta, tb, int(m), int(n), int(k), 1.0, a, int(lda), b, int(ldb), 0.0, c,
                int(ldc));
}

inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
    if (in + 2 * pad < kernel)
        throw ShapeMismatch("kernel " + std::to_string(kernel) + " does not fit input " + std::to_string(in) +
                            " with padding " + std::to_string(pad));
    return (in + 2 * pad - kernel) / stride + 1;
}

/// Valid output-column range [q_lo, q_hi) for one kernel column: the q
/// with 0 <= q*stride + kw - pad < w.
inline std::pair<std::size_t, std::size_t> col_range(long off, std::size_t stride_w, std::size_t w,
                                                     std::size_t ow) {
    std::size_t q_lo = off >= 0 ? 0 : std::size_t((-off + long(stride_w) - 1) / long(stride_w));
    std::size_t q_hi = 0;
    if (long(w) - 1 - off >= 0)
        q_hi = std::min(ow, std::size_t((long(w) - 1 - off) / long(stride_w)) + 1);
    if (q_lo > q_hi) q_lo = q_hi;
    return {q_lo, q_hi};
}

/// Unfold (N,C,H,W) into the (C*KH*KW, N*OH*OW) patch matrix.
template <typename T>
void im2col(const Tensor<T>& x, Extent kernel, Extent stride, Extent pad, std::size_t oh, std::size_t ow,
            std::vector<T>& col) {
    const std::size_t n_batch = x.shape[0], channels = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t now = n_batch * oh * ow;
    col.resize(channels * kernel.h * kernel.w * now); // every slot written below
    std::size_t row = 0;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t kh = 0; kh < kernel.h; ++kh)
            for (std::size_t kw = 0; kw < kernel.w; ++kw, ++row) {
                T* dst_row = col.data() + row * now;
                const long off = long(kw) - long(pad.w);
                const auto [q_lo, q_hi] = col_range(off, stride.w, w, ow);
                for (std::size_t n = 0; n < n_batch; ++n)
                    for (std::size_t r = 0; r < oh; ++r) {
                        const long ih = long(r * stride.h + kh) - long(pad.h);
                        T* dst = dst_row + (n * oh + r) * ow;
                        if (ih < 0 || ih >= long(h)) {
                            std::fill(dst, dst + ow, T(0));
                            continue;
                        }
                        const T* src = x.ptr() + ((n * channels + c) * h + std::size_t(ih)) * w;
                        std::fill(dst, dst + q_lo, T(0));
                        if (stride.w == 1) {
                            std::copy(src + long(q_lo) + off, src + long(q_hi) + off, dst + q_lo);
                        } else {
                            for (std::size_t q = q_lo; q < q_hi; ++q)
                                dst[q] = src[std::size_t(long(q * stride.w) + off)];
                        }
                        std::fill(dst + q_hi, dst + ow, T(0));
                    }
            }
}

/// Fold the patch matrix back, accumulating overlaps — the adjoint of im2col.
template <typename T>
void col2im(std::span<const T> col, Extent kernel, Extent stride, Extent pad, std::size_t oh, std::size_t ow,
            Tensor<T>& dx) {
    const std::size_t n_batch = dx.shape[0], channels = dx.shape[1], h = dx.shape[2], w = dx.shape[3];
    const std::size_t now = n_batch * oh * ow;
    std::size_t row = 0;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t kh = 0; kh < kernel.h; ++kh)
            for (std::size_t kw = 0; kw < kernel.w; ++kw, ++row) {
                const T* src_row = col.data() + row * now;
                const long off = long(kw) - long(pad.w);
                const auto [q_lo, q_hi] = col_range(off, stride.w, w, ow);
                for (std::size_t n = 0; n < n_batch; ++n)
                    for (std::size_t r = 0; r < oh; ++r) {
                        const long ih = long(r * stride.h + kh) - long(pad.h);
                        if (ih < 0 || ih >= long(h)) continue;
                        const T* src = src_row + (n * oh + r) * ow;
                        T* dst = dx.ptr() + ((n * channels + c) * h + std::size_t(ih)) * w;
                        if (stride.w == 1) {
                            for (std::size_t q = q_lo; q < q_hi; ++q)
                                dst[std::size_t(long(q) + off)] += src[q];
                        } else {
                            for (std::size_t q = q_lo; q < q_hi; ++q)
                                dst[std::size_t(long(q * stride.w) + off)] += src[q];
                        }
                    }
            }
}

} // namespace detail

/// Cross-correlation convolution of (N,C,H,W) by (OC,C,KH,KW) weights.
/// Output spatial size is floor((in + 2*pad - kernel)/stride) + 1 per axis.
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Extent stride,
                       Extent pad) {
    if (x.rank() != 4 || w.rank() != 4) throw ShapeMismatch("conv expects rank-4 input and weights");
    if (x.shape[1] != w.shape[1]) throw ShapeMismatch("conv channel mismatch");
    if (b.numel() != w.shape[0]) throw ShapeMismatch("conv bias length mismatch");
    const std::size_t n_batch = x.shape[0], oc = w.shape[0];
    const std::size_t oh = detail::conv_out_extent(x.shape[2], w.shape[2], stride.h, pad.h);
    const std::size_t ow = detail::conv_out_extent(x.shape[3], w.shape[3], stride.w, pad.w);
    const std::size_t ckk = w.shape[1] * w.shape[2] * w.shape[3];
    const std::size_t now = n_batch * oh * ow;

    std::vector<T> col;
    detail::im2col(x, Extent{w.shape[2], w.shape[3]}, stride, pad, oh, ow, col);

    std::vector<T> packed(oc * now);
    detail::gemm(CblasNoTrans, CblasNoTrans, oc, now, ckk, w.ptr(), ckk, col.data(), now, packed.data(),
                 now);

    // (OC, N*OH*OW) -> (N, OC, OH, OW), adding the bias per output channel
    Tensor<T> y({n_batch, oc, oh, ow});
    const std::size_t plane = oh * ow;
    for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t o = 0; o < oc; ++o) {
            const T* src = packed.data() + o * now + n * plane;
            T* dst = y.ptr() + (n * oc + o) * plane;
            const T bias = b.data[o];
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + bias;
        }
    return y;
}

template <typename T>
struct ConvGrads {
    Tensor<T> dx, dw, db; // dx is empty when need_dx was false
};

template <typename T>
ConvGrads<T> conv_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Extent stride,
                           Extent pad, bool need_dx = true) {
    const std::size_t n_batch = x.shape[0], oc = w.shape[0];
    const std::size_t oh = dy.shape[2], ow = dy.shape[3];
    const std::size_t ckk = w.shape[1] * w.shape[2] * w.shape[3];
    const std::size_t now = n_batch * oh * ow;
    if (dy.shape[0] != n_batch || dy.shape[1] != oc) throw ShapeMismatch("conv backward shape mismatch");

    // (N, OC, OH, OW) -> (OC, N*OH*OW)
    std::vector<T> dy_packed(oc * now);
    const std::size_t plane = oh * ow;
    for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t o = 0; o < oc; ++o) {
            const T* src = dy.ptr() + (n * oc + o) * plane;
            T* dst = dy_packed.data() + o * now + n * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i];
        }

    ConvGrads<T> grads;
    grads.db = Tensor<T>({oc});
    for (std::size_t o = 0; o < oc; ++o) {
        double acc = 0.0;
        const T* row = dy_packed.data() + o * now;
        for (std::size_t i = 0; i < now; ++i) acc += double(row[i]);
        grads.db.data[o] = T(acc);
    }

    std::vector<T> col;
    detail::im2col(x, Extent{w.shape[2], w.shape[3]}, stride, pad, oh, ow, col);

    grads.dw = Tensor<T>(w.shape);
    detail::gemm(CblasNoTrans, CblasTrans, oc, ckk, now, dy_packed.data(), now, col.data(), now,
                 grads.dw.ptr(), ckk);

    if (need_dx) {
        std::vector<T> dcol(ckk * now);
        detail::gemm(CblasTrans, CblasNoTrans, ckk, now, oc, w.ptr(), ckk, dy_packed.data(), now,
                     dcol.data(), now);
        grads.dx = Tensor<T>(x.shape);
        detail::col2im(std::span<const T>(dcol), Extent{w.shape[2], w.shape[3]}, stride, pad, oh, ow,
                       grads.dx);
    }
    return grads;
}

template <typename T>
struct PoolResult {
    Tensor<T> y;
    std::vector<std::uint32_t> argmax; // flat index into the input, per output element
};

/// Max pooling over (N,C,H,W); ties break toward the lowest linear index.
template <typename T>
PoolResult<T> maxpool_forward(const Tensor<T>& x, Extent window, Extent stride) {
    if (x.rank() != 4) throw ShapeMismatch("maxpool expects rank-4 input");
    const std::size_t n_batch = x.shape[0], channels = x.shape[1], h = x.shape[2], w = x.shape[3];
    if (window.h > h || window.w > w) throw ShapeMismatch("pool window exceeds input extent");
    const std::size_t oh = (h - window.h) / stride.h + 1;
    const std::size_t ow = (w - window.w) / stride.w + 1;

    PoolResult<T> out;
    out.y = Tensor<T>({n_batch, channels, oh, ow});
    out.argmax.resize(out.y.numel());
    std::size_t oi = 0;
    for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t c = 0; c < channels; ++c) {
            const T* plane = x.ptr() + (n * channels + c) * h * w;
            const std::size_t plane_off = (n * channels + c) * h * w;
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t q = 0; q < ow; ++q, ++oi) {
                    std::size_t best = (r * stride.h) * w + q * stride.w;
                    T best_v = plane[best];
                    for (std::size_t kh = 0; kh < window.h; ++kh)
                        for (std::size_t kw = 0; kw < window.w; ++kw) {
                            const std::size_t idx = (r * stride.h + kh) * w + (q * stride.w + kw);
                            if (plane[idx] > best_v) {
                                best_v = plane[idx];
                                best = idx;
                            }
                        }
                    out.y.data[oi] = best_v;
                    out.argmax[oi] = std::uint32_t(plane_off + best);
                }
        }
    return out;
}

template <typename T>
Tensor<T> maxpool_backward(const std::vector<std::size_t>& x_shape, std::span<const std::uint32_t> argmax,
                           const Tensor<T>& dy) {
    if (argmax.size() != dy.numel()) throw ShapeMismatch("maxpool backward argmax mismatch");
    Tensor<T> dx(x_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx.data[argmax[i]] += dy.data[i];
    return dx;
}

/// Affine map y = x.W^T + b for batched rows.
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.rank() != 2 || w.rank() != 2) throw ShapeMismatch("fc expects rank-2 input and weights");
    if (x.shape[1] != w.shape[1])
        throw ShapeMismatch("fc input width " + std::to_string(x.shape[1]) + " != weight width " +
                            std::to_string(w.shape[1]));
    if (b.numel() != w.shape[0]) throw ShapeMismatch("fc bias length mismatch");
    const std::size_t n = x.shape[0], out = w.shape[0], in = w.shape[1];
    Tensor<T> y({n, out});
    detail::gemm(CblasNoTrans, CblasTrans, n, out, in, x.ptr(), in, w.ptr(), in, y.ptr(), out);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o) y.data[i * out + o] += b.data[o];
    return y;
}

template <typename T>
struct FcGrads {
    Tensor<T> dx, dw, db;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
    const std::size_t n = x.shape[0], out = w.shape[0], in = w.shape[1];
    if (dy.shape[0] != n || dy.shape[1] != out) throw ShapeMismatch("fc backward shape mismatch");
    FcGrads<T> grads;
    grads.dx = Tensor<T>({n, in});
    detail::gemm(CblasNoTrans, CblasNoTrans, n, in, out, dy.ptr(), out, w.ptr(), in, grads.dx.ptr(), in);
    grads.dw = Tensor<T>({out, in});
    detail::gemm(CblasTrans, CblasNoTrans, out, in, n, dy.ptr(), out, x.ptr(), in, grads.dw.ptr(), in);
    grads.db = Tensor<T>({out});
    for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += double(dy.data[i * out + o]);
        grads.db.data[o] = T(acc);
    }
    return grads;
}

template <typename T>
struct DropoutResult {
    Tensor<T> y;
    std::vector<T> mask; // 0 or 1/(1-rate); empty in eval mode
};

/// Inverted dropout: train mode masks and rescales by 1/(1-rate) so the
/// expected output equals the input; eval mode is the identity.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
    DropoutResult<T> out;
    out.y = x;
    if (mode == Mode::eval || rate == 0.0) return out;
    const T keep_scale = T(1.0 / (1.0 - rate));
    std::mt19937_64 engine = make_engine(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    out.mask.resize(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T m = uniform(engine) < rate ? T(0) : keep_scale;
        out.mask[i] = m;
        out.y.data[i] = x.data[i] * m;
    }
    return out;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, std::span<const T> mask) {
    if (mask.empty()) return dy; // eval / rate-0 identity
    if (mask.size() != dy.numel()) throw ShapeMismatch("dropout backward mask mismatch");
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.numel(); ++i) dx.data[i] *= mask[i];
    return dx;
}

template <typename T>
struct SoftmaxResult {
    double loss = 0.0; // mean cross-entropy over the batch
    Tensor<T> dlogits; // (softmax - onehot) / batch
};

/// Numerically stabilized softmax cross-entropy for (N, K) logits.
template <typename T>
SoftmaxResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeMismatch("softmax expects rank-2 logits");
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    if (labels.size() != n) throw ShapeMismatch("label count does not match batch");

    SoftmaxResult<T> out;
    out.dlogits = Tensor<T>(logits.shape);
    double loss_acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = logits.ptr() + i * k;
        const int label = labels[i];
        if (label < 0 || std::size_t(label) >= k) throw ShapeMismatch("label out of range");
        double mx = double(row[0]);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(double(row[j]) - mx);
        loss_acc += -(double(row[std::size_t(label)]) - mx - std::log(sum));
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(double(row[j]) - mx) / sum;
            out.dlogits.data[i * k + j] =
                T((p - (std::size_t(label) == j ? 1.0 : 0.0)) / double(n));
        }
    }
    out.loss = loss_acc / double(n);
    return out;
}

} // namespace ecgcnn
