#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pcgssl/nn/tape.hpp"

namespace pcgssl::nn {

template <class T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <class T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;
template <class T>
using ConstMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

namespace detail {

inline void expect_shape(bool ok, const char* op, const Shape& got, const char* expected) {
  if (!ok) fail(Errc::ShapeMismatch, std::string(op) + ": got " + shape_string(got) + ", expected " + expected);
}

// col[(c * k + j), t] = x[c, t + j - pad], zero outside the signal.
template <class T>
void im2col(const T* x, std::size_t channels, std::size_t len, std::size_t k, std::size_t pad, T* col) {
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = x + c * len;
    for (std::size_t j = 0; j < k; ++j) {
      T* row = col + (c * k + j) * len;
      const long shift = static_cast<long>(j) - static_cast<long>(pad);
      const long n = static_cast<long>(len);
      const long lo = std::clamp(-shift, 0L, n);
      const long hi = std::clamp(n - shift, lo, n);
      std::fill(row, row + lo, T(0));
      std::copy(src + lo + shift, src + hi + shift, row + lo);
      std::fill(row + hi, row + n, T(0));
    }
  }
}

template <class T>
void col2im_add(const T* col, std::size_t channels, std::size_t len, std::size_t k, std::size_t pad, T* dx) {
  for (std::size_t c = 0; c < channels; ++c) {
    T* dst = dx + c * len;
    for (std::size_t j = 0; j < k; ++j) {
      const T* row = col + (c * k + j) * len;
      const long shift = static_cast<long>(j) - static_cast<long>(pad);
      const long n = static_cast<long>(len);
      const long lo = std::clamp(-shift, 0L, n);
      const long hi = std::clamp(n - shift, lo, n);
      for (long t = lo; t < hi; ++t) dst[t + shift] += row[t];
    }
  }
}

}  // namespace detail

/// Stride-1 cross-correlation with zero "same" padding: for kernel size k the
/// input is padded by (k - 1) / 2 on the left and k / 2 on the right.
/// x: [batch, ch_in, len], w: [ch_out, ch_in, k], b: [ch_out] -> [batch, ch_out, len].
template <std::floating_point T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  detail::expect_shape(xs.size() == 3, "conv1d input", xs, "[batch, ch_in, len]");
  detail::expect_shape(ws.size() == 3 && ws[1] == xs[1], "conv1d weight", ws, "[ch_out, ch_in, k]");
  detail::expect_shape(b.shape().size() == 1 && b.shape()[0] == ws[0], "conv1d bias", b.shape(), "[ch_out]");
  const std::size_t batch = xs[0], cin = xs[1], len = xs[2], cout = ws[0], k = ws[2];
  const std::size_t pad = (k - 1) / 2;
  const std::size_t rows = cin * k;

  Tensor<T> y({batch, cout, len});
  MatrixRM<T> col(rows, len);
  const ConstMapRM<T> weight(w.value().ptr(), cout, rows);
  const ConstMapVec<T> bias(b.value().ptr(), cout);
  for (std::size_t n = 0; n < batch; ++n) {
    detail::im2col(x.value().ptr() + n * cin * len, cin, len, k, pad, col.data());
    MapRM<T> out(y.ptr() + n * cout * len, cout, len);
    out.noalias() = weight * col;
    out.colwise() += bias;
  }

  const std::size_t xid = x.id(), wid = w.id(), bid = b.id();
  return x.tape().record(std::move(y), {xid, wid, bid}, [=](Tape<T>& tape, std::size_t self) {
    const bool need_x = tape.requires_grad(xid), need_w = tape.requires_grad(wid), need_b = tape.requires_grad(bid);
    const T* dy_all = tape.grad(self).data();
    const T* xv = tape.value(xid).ptr();
    const ConstMapRM<T> weight(tape.value(wid).ptr(), cout, rows);
    MatrixRM<T> col(rows, len);
    MatrixRM<T> dw_acc;
    if (need_w) dw_acc = MatrixRM<T>::Zero(cout, rows);
    for (std::size_t n = 0; n < batch; ++n) {
      const ConstMapRM<T> dy(dy_all + n * cout * len, cout, len);
      if (need_w) {
        detail::im2col(xv + n * cin * len, cin, len, k, pad, col.data());
        dw_acc.noalias() += dy * col.transpose();
      }
      if (need_b) {
        auto db = tape.grad(bid);
        for (std::size_t c = 0; c < cout; ++c) db[c] += dy.row(static_cast<Eigen::Index>(c)).sum();
      }
      if (need_x) {
        col.noalias() = weight.transpose() * dy;
        detail::col2im_add(col.data(), cin, len, k, pad, tape.grad(xid).data() + n * cin * len);
      }
    }
    if (need_w) {
      MapRM<T> dw(tape.grad(wid).data(), cout, rows);
      dw += dw_acc;
    }
  });
}

template <std::floating_point T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> y(x.shape());
  const auto xv = x.value().data();
  auto yv = y.data();
  if (auto* pattern = x.tape().branch_pattern()) {
    std::vector<std::uint32_t> active(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) active[i] = xv[i] > T(0);
    const auto& use = pattern->visit(std::move(active));
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = use[i] ? xv[i] : T(0);
  } else {
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = xv[i] > T(0) ? xv[i] : T(0);
  }
  const std::size_t xid = x.id();
  return x.tape().record(std::move(y), {xid}, [xid](Tape<T>& tape, std::size_t self) {
    const auto xv = tape.value(xid).data();
    const auto dy = tape.grad(self);
    auto dx = tape.grad(xid);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > T(0)) dx[i] += dy[i];
    }
  });
}

/// Non-overlapping max pooling over time with floor semantics (a trailing
/// partial pool is dropped). Ties go to the earliest sample.
template <std::floating_point T>
Var<T> max_pool1d(const Var<T>& x, std::size_t pool) {
  const auto& xs = x.shape();
  detail::expect_shape(xs.size() == 3, "max_pool1d input", xs, "[batch, channels, len]");
  require(pool > 0, Errc::InvalidArgument, "pool size must be positive");
  const std::size_t rows = xs[0] * xs[1], len = xs[2], out_len = len / pool;
  Tensor<T> y({xs[0], xs[1], out_len});
  std::vector<std::uint32_t> argmax(rows * out_len);
  const T* xv = x.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < out_len; ++i) {
      const T* seg = xv + r * len + i * pool;
      std::size_t best = 0;
      for (std::size_t j = 1; j < pool; ++j) {
        if (seg[j] > seg[best]) best = j;
      }
      argmax[r * out_len + i] = static_cast<std::uint32_t>(r * len + i * pool + best);
    }
  }
  if (auto* pattern = x.tape().branch_pattern()) argmax = pattern->visit(std::move(argmax));
  for (std::size_t i = 0; i < argmax.size(); ++i) y[i] = xv[argmax[i]];
  const std::size_t xid = x.id();
  return x.tape().record(std::move(y), {xid}, [xid, argmax = std::move(argmax)](Tape<T>& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto dx = tape.grad(xid);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
  });
}

/// Maximum over the time axis: [batch, channels, len] -> [batch, channels].
template <std::floating_point T>
Var<T> global_max_pool(const Var<T>& x) {
  const auto& xs = x.shape();
  detail::expect_shape(xs.size() == 3 && xs[2] > 0, "global_max_pool input", xs, "[batch, channels, len>0]");
  const std::size_t rows = xs[0] * xs[1], len = xs[2];
  Tensor<T> y({xs[0], xs[1]});
  std::vector<std::uint32_t> argmax(rows);
  const T* xv = x.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* seg = xv + r * len;
    const auto best = static_cast<std::size_t>(std::max_element(seg, seg + len) - seg);
    argmax[r] = static_cast<std::uint32_t>(r * len + best);
  }
  if (auto* pattern = x.tape().branch_pattern()) argmax = pattern->visit(std::move(argmax));
  for (std::size_t r = 0; r < rows; ++r) y[r] = xv[argmax[r]];
  const std::size_t xid = x.id();
  return x.tape().record(std::move(y), {xid}, [xid, argmax = std::move(argmax)](Tape<T>& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto dx = tape.grad(xid);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
  });
}

/// Fully connected layer y = x w^T + b. x: [batch, in], w: [out, in], b: [out].
template <std::floating_point T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  detail::expect_shape(xs.size() == 2, "linear input", xs, "[batch, in]");
  detail::expect_shape(ws.size() == 2 && ws[1] == xs[1], "linear weight", ws, "[out, in]");
  detail::expect_shape(b.shape().size() == 1 && b.shape()[0] == ws[0], "linear bias", b.shape(), "[out]");
  const std::size_t batch = xs[0], in = xs[1], out = ws[0];
  Tensor<T> y({batch, out});
  {
    MapRM<T> yv(y.ptr(), batch, out);
    yv.noalias() = ConstMapRM<T>(x.value().ptr(), batch, in) * ConstMapRM<T>(w.value().ptr(), out, in).transpose();
    yv.rowwise() += ConstMapVec<T>(b.value().ptr(), out).transpose();
  }
  const std::size_t xid = x.id(), wid = w.id(), bid = b.id();
  return x.tape().record(std::move(y), {xid, wid, bid}, [=](Tape<T>& tape, std::size_t self) {
    const ConstMapRM<T> dy(tape.grad(self).data(), batch, out);
    if (tape.requires_grad(xid)) {
      MapRM<T> dx(tape.grad(xid).data(), batch, in);
      dx.noalias() += dy * ConstMapRM<T>(tape.value(wid).ptr(), out, in);
    }
    if (tape.requires_grad(wid)) {
      MapRM<T> dw(tape.grad(wid).data(), out, in);
      dw.noalias() += dy.transpose() * ConstMapRM<T>(tape.value(xid).ptr(), batch, in);
    }
    if (tape.requires_grad(bid)) {
      auto db = tape.grad(bid);
      for (std::size_t o = 0; o < out; ++o) db[o] += dy.col(static_cast<Eigen::Index>(o)).sum();
    }
  });
}

/// Sum of squared entries, a scalar.
template <std::floating_point T>
Var<T> sum_squares(const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().data()) acc += static_cast<double>(v) * v;
  const std::size_t xid = x.id();
  return x.tape().record(Tensor<T>::scalar(static_cast<T>(acc)), {xid}, [xid](Tape<T>& tape, std::size_t self) {
    const T g = tape.grad(self)[0];
    const auto xv = tape.value(xid).data();
    auto dx = tape.grad(xid);
    for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += T(2) * xv[i] * g;
  });
}

/// Row-wise softmax computed in double precision.
template <std::floating_point T>
std::vector<double> softmax_rows(std::span<const T> logits, std::size_t rows, std::size_t cols) {
  std::vector<double> p(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * cols;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) m = std::max(m, static_cast<double>(z[c]));
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += p[r * cols + c] = std::exp(static_cast<double>(z[c]) - m);
    for (std::size_t c = 0; c < cols; ++c) p[r * cols + c] /= sum;
  }
  return p;
}

/// Mean categorical cross-entropy of softmax(logits) against class indices.
template <std::floating_point T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  const auto& s = logits.shape();
  detail::expect_shape(s.size() == 2 && s[0] == labels.size() && s[0] > 0, "softmax_cross_entropy logits", s,
                       "[batch = #labels, classes]");
  const std::size_t batch = s[0], classes = s[1];
  auto probs = softmax_rows(logits.value().data(), batch, classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < classes, Errc::InvalidArgument, "label out of range");
    loss -= std::log(std::max(probs[r * classes + static_cast<std::size_t>(y)], std::numeric_limits<double>::min()));
  }
  loss /= static_cast<double>(batch);
  std::vector<int> y(labels.begin(), labels.end());
  const std::size_t lid = logits.id();
  return logits.tape().record(Tensor<T>::scalar(static_cast<T>(loss)), {lid},
                              [lid, batch, classes, probs = std::move(probs), y = std::move(y)](Tape<T>& tape, std::size_t self) {
                                const double g = tape.grad(self)[0] / static_cast<double>(batch);
                                auto dz = tape.grad(lid);
                                for (std::size_t r = 0; r < batch; ++r) {
                                  for (std::size_t c = 0; c < classes; ++c) {
                                    const double onehot = static_cast<int>(c) == y[r] ? 1.0 : 0.0;
                                    dz[r * classes + c] += static_cast<T>(g * (probs[r * classes + c] - onehot));
                                  }
                                }
                              });
}

}  // namespace pcgssl::nn
