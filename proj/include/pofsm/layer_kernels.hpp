#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pofsm/nn_spec.hpp"
#include "pofsm/tensor.hpp"

// Per-layer forward/backward kernels. Activations are row-major
// [batch, rows, cols, channels]; convolution runs as im2col + GEMM with the
// kernel tensor [out_ch, k, k, in_ch] viewed as a row-major matrix.
namespace pofsm::kernels {

template <typename S>
using ColMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using EVec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Column p of `col` holds the receptive field of output pixel p, ordered
// (ky, kx, channel) to match the kernel matrix rows.
template <typename S>
void im2col(const S* in, int h, int w, int ci, int size, int stride, int pad, int ho, int wo,
            ColMat<S>& col) {
  const long k = static_cast<long>(size) * size * ci;
  col.resize(k, static_cast<long>(ho) * wo);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      S* dst = col.data() + (static_cast<long>(oy) * wo + ox) * k;
      const int iy0 = oy * stride - pad;
      const int ix0 = ox * stride - pad;
      for (int ky = 0; ky < size; ++ky) {
        const int iy = iy0 + ky;
        for (int kx = 0; kx < size; ++kx) {
          const int ix = ix0 + kx;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
            const S* src = in + (static_cast<long>(iy) * w + ix) * ci;
            std::copy(src, src + ci, dst);
          } else {
            std::fill(dst, dst + ci, S(0));
          }
          dst += ci;
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const ColMat<S>& col, int h, int w, int ci, int size, int stride, int pad, int ho,
                int wo, S* din) {
  const long k = static_cast<long>(size) * size * ci;
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const S* src = col.data() + (static_cast<long>(oy) * wo + ox) * k;
      const int iy0 = oy * stride - pad;
      const int ix0 = ox * stride - pad;
      for (int ky = 0; ky < size; ++ky) {
        const int iy = iy0 + ky;
        for (int kx = 0; kx < size; ++kx) {
          const int ix = ix0 + kx;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
            S* dst = din + (static_cast<long>(iy) * w + ix) * ci;
            for (int c = 0; c < ci; ++c) dst[c] += src[c];
          }
          src += ci;
        }
      }
    }
  }
}

template <typename S>
void conv_forward(const Tensor<S>& in, const Tensor<S>& w, const Tensor<S>& b, int stride, int pad,
                  Tensor<S>& out, ColMat<S>& scratch) {
  const int batch = in.dim(0), h = in.dim(1), wd = in.dim(2), ci = in.dim(3);
  const int co = w.dim(0), size = w.dim(1);
  const int ho = out.dim(1), wo = out.dim(2);
  const long k = static_cast<long>(size) * size * ci;
  const long pixels = static_cast<long>(ho) * wo;
  Eigen::Map<const RowMat<S>> wm(w.data(), co, k);
  Eigen::Map<const EVec<S>> bv(b.data(), co);
  for (int bi = 0; bi < batch; ++bi) {
    im2col(in.data() + static_cast<long>(bi) * h * wd * ci, h, wd, ci, size, stride, pad, ho, wo,
           scratch);
    Eigen::Map<ColMat<S>> om(out.data() + static_cast<long>(bi) * pixels * co, co, pixels);
    om.noalias() = wm * scratch;
    om.colwise() += bv;
  }
}

template <typename S>
void conv_backward(const Tensor<S>& in, const Tensor<S>& w, int stride, int pad,
                   const Tensor<S>& grad_out, Tensor<S>& dw, Tensor<S>& db, Tensor<S>& din,
                   ColMat<S>& scratch) {
  const int batch = in.dim(0), h = in.dim(1), wd = in.dim(2), ci = in.dim(3);
  const int co = w.dim(0), size = w.dim(1);
  const int ho = grad_out.dim(1), wo = grad_out.dim(2);
  const long k = static_cast<long>(size) * size * ci;
  const long pixels = static_cast<long>(ho) * wo;
  Eigen::Map<const RowMat<S>> wm(w.data(), co, k);
  Eigen::Map<RowMat<S>> dwm(dw.data(), co, k);
  Eigen::Map<EVec<S>> dbv(db.data(), co);
  ColMat<S> dcol(k, pixels);
  for (int bi = 0; bi < batch; ++bi) {
    im2col(in.data() + static_cast<long>(bi) * h * wd * ci, h, wd, ci, size, stride, pad, ho, wo,
           scratch);
    Eigen::Map<const ColMat<S>> gm(grad_out.data() + static_cast<long>(bi) * pixels * co, co,
                                   pixels);
    dwm.noalias() += gm * scratch.transpose();
    dbv.noalias() += gm.rowwise().sum();
    dcol.noalias() = wm.transpose() * gm;
    col2im_add(dcol, h, wd, ci, size, stride, pad, ho, wo,
               din.data() + static_cast<long>(bi) * h * wd * ci);
  }
}

template <typename S>
void fc_forward(const Tensor<S>& in, const Tensor<S>& w, const Tensor<S>& b, Tensor<S>& out) {
  const int batch = in.dim(0);
  const long f = in.size() / batch;
  const int n = w.dim(0);
  Eigen::Map<const RowMat<S>> x(in.data(), batch, f);
  Eigen::Map<const RowMat<S>> wm(w.data(), n, f);
  Eigen::Map<const EVec<S>> bv(b.data(), n);
  Eigen::Map<RowMat<S>> y(out.data(), batch, n);
  y.noalias() = x * wm.transpose();
  y.rowwise() += bv.transpose();
}

template <typename S>
void fc_backward(const Tensor<S>& in, const Tensor<S>& w, const Tensor<S>& grad_out, Tensor<S>& dw,
                 Tensor<S>& db, Tensor<S>& din) {
  const int batch = in.dim(0);
  const long f = in.size() / batch;
  const int n = w.dim(0);
  Eigen::Map<const RowMat<S>> x(in.data(), batch, f);
  Eigen::Map<const RowMat<S>> wm(w.data(), n, f);
  Eigen::Map<const RowMat<S>> g(grad_out.data(), batch, n);
  Eigen::Map<RowMat<S>> dwm(dw.data(), n, f);
  Eigen::Map<EVec<S>> dbv(db.data(), n);
  Eigen::Map<RowMat<S>> dx(din.data(), batch, f);
  dwm.noalias() += g.transpose() * x;
  dbv.noalias() += g.colwise().sum().transpose();
  dx.noalias() = g * wm;
}

template <typename S>
void relu_forward(const Tensor<S>& in, Tensor<S>& out) {
  const S* x = in.data();
  S* y = out.data();
  for (long i = 0; i < in.size(); ++i) y[i] = x[i] > S(0) ? x[i] : S(0);
}

template <typename S>
void relu_backward(const Tensor<S>& in, const Tensor<S>& grad_out, Tensor<S>& din) {
  const S* x = in.data();
  const S* g = grad_out.data();
  S* d = din.data();
  for (long i = 0; i < in.size(); ++i) d[i] = x[i] > S(0) ? g[i] : S(0);
}

// First maximum wins ties: windows are scanned in row-major order, so the
// routed index is deterministic.
template <typename S>
void maxpool_forward(const Tensor<S>& in, int size, int stride, Tensor<S>& out,
                     std::vector<std::int32_t>& argmax) {
  const int batch = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
  const int ho = out.dim(1), wo = out.dim(2);
  argmax.assign(static_cast<size_t>(out.size()), -1);
  for (int bi = 0; bi < batch; ++bi) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const long obase = ((static_cast<long>(bi) * ho + oy) * wo + ox) * c;
        for (int ch = 0; ch < c; ++ch) out[obase + ch] = std::numeric_limits<S>::lowest();
        for (int ky = 0; ky < size; ++ky) {
          const int iy = oy * stride + ky;
          for (int kx = 0; kx < size; ++kx) {
            const int ix = ox * stride + kx;
            const long ibase = ((static_cast<long>(bi) * h + iy) * w + ix) * c;
            for (int ch = 0; ch < c; ++ch) {
              if (in[ibase + ch] > out[obase + ch]) {
                out[obase + ch] = in[ibase + ch];
                argmax[static_cast<size_t>(obase + ch)] = static_cast<std::int32_t>(ibase + ch);
              }
            }
          }
        }
      }
    }
  }
}

template <typename S>
void maxpool_backward(const Tensor<S>& grad_out, const std::vector<std::int32_t>& argmax,
                      Tensor<S>& din) {
  for (long i = 0; i < grad_out.size(); ++i) din[argmax[static_cast<size_t>(i)]] += grad_out[i];
}

template <typename S>
void lrn_forward(const Tensor<S>& in, const LrnParams& p, Tensor<S>& out, Tensor<S>& denom) {
  const int c = in.dims().back();
  const long runs = in.size() / c;
  const int half = p.depth / 2;
  for (long r = 0; r < runs; ++r) {
    const S* x = in.data() + r * c;
    S* y = out.data() + r * c;
    S* d = denom.data() + r * c;
    for (int i = 0; i < c; ++i) {
      const int lo = std::max(0, i - half), hi = std::min(c - 1, i + half);
      double ss = 0.0;
      for (int j = lo; j <= hi; ++j) ss += static_cast<double>(x[j]) * static_cast<double>(x[j]);
      d[i] = static_cast<S>(p.bias + p.alpha * ss);
      y[i] = static_cast<S>(static_cast<double>(x[i]) *
                            std::pow(static_cast<double>(d[i]), -p.beta));
    }
  }
}

// dx_j = g_j * d_j^-beta - 2*alpha*beta * x_j * sum_{i in win(j)} g_i x_i d_i^-(beta+1);
// the window is symmetric so i in win(j) iff j in win(i).
template <typename S>
void lrn_backward(const Tensor<S>& in, const Tensor<S>& denom, const LrnParams& p,
                  const Tensor<S>& grad_out, Tensor<S>& din) {
  const int c = in.dims().back();
  const long runs = in.size() / c;
  const int half = p.depth / 2;
  std::vector<double> t(static_cast<size_t>(c));
  for (long r = 0; r < runs; ++r) {
    const S* x = in.data() + r * c;
    const S* d = denom.data() + r * c;
    const S* g = grad_out.data() + r * c;
    S* dx = din.data() + r * c;
    for (int i = 0; i < c; ++i)
      t[static_cast<size_t>(i)] = static_cast<double>(g[i]) * static_cast<double>(x[i]) *
                                  std::pow(static_cast<double>(d[i]), -p.beta - 1.0);
    for (int j = 0; j < c; ++j) {
      const int lo = std::max(0, j - half), hi = std::min(c - 1, j + half);
      double acc = 0.0;
      for (int i = lo; i <= hi; ++i) acc += t[static_cast<size_t>(i)];
      dx[j] = static_cast<S>(static_cast<double>(g[j]) *
                                 std::pow(static_cast<double>(d[j]), -p.beta) -
                             2.0 * p.alpha * p.beta * static_cast<double>(x[j]) * acc);
    }
  }
}

// Softmax over the trailing dimension. Both the classifier head (per sample)
// and the flow head (per pixel) reduce to this because channels are last.
// Sums accumulate in double so normalization holds tightly even for float.
template <typename S>
void softmax_forward(const Tensor<S>& in, Tensor<S>& out) {
  const int c = in.dims().back();
  const long runs = in.size() / c;
  for (long r = 0; r < runs; ++r) {
    const S* x = in.data() + r * c;
    S* y = out.data() + r * c;
    S m = x[0];
    for (int i = 1; i < c; ++i) m = std::max(m, x[i]);
    double sum = 0.0;
    for (int i = 0; i < c; ++i) {
      y[i] = static_cast<S>(std::exp(static_cast<double>(x[i]) - static_cast<double>(m)));
      sum += static_cast<double>(y[i]);
    }
    for (int i = 0; i < c; ++i) y[i] = static_cast<S>(static_cast<double>(y[i]) / sum);
  }
}

template <typename S>
void softmax_backward(const Tensor<S>& out, const Tensor<S>& grad_out, Tensor<S>& din) {
  const int c = out.dims().back();
  const long runs = out.size() / c;
  for (long r = 0; r < runs; ++r) {
    const S* y = out.data() + r * c;
    const S* g = grad_out.data() + r * c;
    S* d = din.data() + r * c;
    double dot = 0.0;
    for (int i = 0; i < c; ++i) dot += static_cast<double>(g[i]) * static_cast<double>(y[i]);
    for (int i = 0; i < c; ++i)
      d[i] = static_cast<S>(static_cast<double>(y[i]) * (static_cast<double>(g[i]) - dot));
  }
}

}  // namespace pofsm::kernels
