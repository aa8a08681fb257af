#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "galr/ops_elementwise.hpp"
#include "galr/ops_linalg.hpp"
#include "galr/tensor.hpp"

namespace galr {

enum class RnnKind { kGru, kLstm };

constexpr std::size_t gate_count(RnnKind kind) { return kind == RnnKind::kGru ? 3 : 4; }

constexpr std::string_view rnn_name(RnnKind kind) { return kind == RnnKind::kGru ? "gru" : "lstm"; }

// Gate blocks are stacked along the first axis of every tensor:
// GRU (reset, update, candidate), LSTM (input, forget, cell, output).
template <typename T>
struct RecurrentWeights {
  Tensor<T> w_ih;  // [gates * hidden x input]
  Tensor<T> w_hh;  // [gates * hidden x hidden]
  Tensor<T> b_ih;  // [gates * hidden]
  Tensor<T> b_hh;  // [gates * hidden]

  std::size_t hidden() const { return w_hh.dim(1); }
};

namespace detail {

struct RecurrentShape {
  std::size_t batch = 1;
  std::size_t steps = 1;
  std::size_t input = 1;
  std::size_t hidden = 1;
  bool batched = false;
};

template <typename T>
RecurrentShape check_recurrent(const Tensor<T>& seq, const RecurrentWeights<T>& w, const Tensor<T>& h0,
                               RnnKind kind, const char* op) {
  const std::string name(op);
  require(seq.rank() == 2 || seq.rank() == 3,
          name + ": sequence must be [steps x input] or [batch x steps x input], got " + shape_str(seq.shape()));
  RecurrentShape s;
  s.batched = seq.rank() == 3;
  s.batch = s.batched ? seq.dim(0) : 1;
  s.steps = seq.dim(s.batched ? 1 : 0);
  s.input = seq.dim(s.batched ? 2 : 1);
  const std::size_t gates = gate_count(kind);
  require(w.w_hh.rank() == 2 && w.w_hh.dim(0) % gates == 0, name + ": malformed hidden weight");
  s.hidden = w.w_hh.dim(0) / gates;
  require(w.w_hh.dim(1) == s.hidden, name + ": hidden weight must be [gates*hidden x hidden]");
  require(w.w_ih.rank() == 2 && w.w_ih.dim(0) == gates * s.hidden && w.w_ih.dim(1) == s.input,
          name + ": input weight must be [" + std::to_string(gates * s.hidden) + " x " + std::to_string(s.input) +
              "], got " + shape_str(w.w_ih.shape()));
  require(w.b_ih.rank() == 1 && w.b_ih.dim(0) == gates * s.hidden, name + ": input bias has wrong length");
  require(w.b_hh.rank() == 1 && w.b_hh.dim(0) == gates * s.hidden, name + ": hidden bias has wrong length");
  if (h0.defined()) require(h0.rank() == 1 && h0.dim(0) == s.hidden, name + ": h0 must be [hidden]");
  return s;
}

template <typename T>
Shape recurrent_output_shape(const RecurrentShape& s) {
  return s.batched ? Shape{s.batch, s.steps, s.hidden} : Shape{s.steps, s.hidden};
}

}  // namespace detail

// All hidden states of a unidirectional GRU:
//   r = sig(W_ir x + b_ir + W_hr h + b_hr)
//   z = sig(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
// h0 is broadcast over the batch; an undefined h0 means zeros.
template <typename T>
Tensor<T> gru(const Tensor<T>& seq, const RecurrentWeights<T>& w, const Tensor<T>& h0 = {}) {
  const auto s = detail::check_recurrent(seq, w, h0, RnnKind::kGru, "gru");
  const std::size_t H = s.hidden;
  const std::size_t G = 3 * H;
  const std::size_t rows = s.batch * s.steps;

  std::vector<T> xi(rows * G);
  detail::affine_rows(seq.data().data(), w.w_ih.data().data(), w.b_ih.data().data(), xi.data(), rows, s.input, G);

  std::vector<T> out(rows * H);
  // Per (row, unit): reset, update, candidate, W_hn h + b_hn.
  auto cache = std::make_shared<std::vector<T>>(rows * 4 * H);
  std::vector<T> init(H, T(0));
  if (h0.defined()) std::copy(h0.data().begin(), h0.data().end(), init.begin());
  const T* whh = w.w_hh.data().data();
  const T* bhh = w.b_hh.data().data();

  parallel_for(s.batch, 1, [&](std::size_t begin, std::size_t end) {
    std::vector<T> hh(G);
    for (std::size_t b = begin; b < end; ++b) {
      const T* h_prev = init.data();
      for (std::size_t t = 0; t < s.steps; ++t) {
        const std::size_t row = b * s.steps + t;
        detail::affine_rows(h_prev, whh, bhh, hh.data(), 1, H, G);
        const T* x = xi.data() + row * G;
        T* h = out.data() + row * H;
        T* c = cache->data() + row * 4 * H;
        for (std::size_t u = 0; u < H; ++u) {
          const T r = detail::sigmoid_scalar(x[u] + hh[u]);
          const T z = detail::sigmoid_scalar(x[H + u] + hh[H + u]);
          const T n = std::tanh(x[2 * H + u] + r * hh[2 * H + u]);
          h[u] = (T(1) - z) * n + z * h_prev[u];
          c[u] = r;
          c[H + u] = z;
          c[2 * H + u] = n;
          c[3 * H + u] = hh[2 * H + u];
        }
        h_prev = h;
      }
    }
  });

  return Tensor<T>::make_result(
      detail::recurrent_output_shape<T>(s), std::move(out), "gru", {seq, w.w_ih, w.w_hh, w.b_ih, w.b_hh, h0},
      [s, cache, init](const detail::Node<T>& node) {
        const std::size_t H = s.hidden;
        const std::size_t G = 3 * H;
        const std::size_t rows = s.batch * s.steps;
        const T* whh = detail::input_value(node, 2).data();
        T* g_whh = detail::data_or_null(detail::input_grad(node, 2));
        T* g_bhh = detail::data_or_null(detail::input_grad(node, 4));
        T* g_h0 = node.inputs[5] ? detail::data_or_null(detail::input_grad(node, 5)) : nullptr;
        std::vector<T> dxi(rows * G, T(0));
        std::vector<T> dh(H), dh_next(H), dhh(G);
        for (std::size_t b = 0; b < s.batch; ++b) {
          std::fill(dh_next.begin(), dh_next.end(), T(0));
          for (std::size_t t = s.steps; t-- > 0;) {
            const std::size_t row = b * s.steps + t;
            const T* h_prev = t > 0 ? node.value.data() + (row - 1) * H : init.data();
            const T* c = cache->data() + row * 4 * H;
            T* dx = dxi.data() + row * G;
            for (std::size_t u = 0; u < H; ++u) {
              dh[u] = node.grad[row * H + u] + dh_next[u];
              const T r = c[u], z = c[H + u], n = c[2 * H + u], hn = c[3 * H + u];
              const T dn_pre = dh[u] * (T(1) - z) * (T(1) - n * n);
              const T dz_pre = dh[u] * (h_prev[u] - n) * z * (T(1) - z);
              const T dr_pre = dn_pre * hn * r * (T(1) - r);
              dx[u] = dr_pre;
              dx[H + u] = dz_pre;
              dx[2 * H + u] = dn_pre;
              dhh[u] = dr_pre;
              dhh[H + u] = dz_pre;
              dhh[2 * H + u] = dn_pre * r;
              dh_next[u] = dh[u] * z;
            }
            for (std::size_t g = 0; g < G; ++g) {
              const T d = dhh[g];
              if (d == T(0)) continue;
              if (g_whh) detail::axpy(d, h_prev, g_whh + g * H, H);
              if (g_bhh) g_bhh[g] += d;
              detail::axpy(d, whh + g * H, dh_next.data(), H);
            }
          }
          if (g_h0)
            for (std::size_t u = 0; u < H; ++u) g_h0[u] += dh_next[u];
        }
        detail::affine_rows_backward(detail::input_value(node, 0).data(), detail::input_value(node, 1).data(),
                                     dxi.data(), detail::data_or_null(detail::input_grad(node, 0)),
                                     detail::data_or_null(detail::input_grad(node, 1)),
                                     detail::data_or_null(detail::input_grad(node, 3)), rows, s.input, G);
      });
}

// All hidden states of a unidirectional LSTM with zero initial cell state:
//   i, f, o = sig(.), g = tanh(.), c' = f * c + i * g, h' = o * tanh(c')
template <typename T>
Tensor<T> lstm(const Tensor<T>& seq, const RecurrentWeights<T>& w, const Tensor<T>& h0 = {}) {
  const auto s = detail::check_recurrent(seq, w, h0, RnnKind::kLstm, "lstm");
  const std::size_t H = s.hidden;
  const std::size_t G = 4 * H;
  const std::size_t rows = s.batch * s.steps;

  std::vector<T> xi(rows * G);
  detail::affine_rows(seq.data().data(), w.w_ih.data().data(), w.b_ih.data().data(), xi.data(), rows, s.input, G);

  std::vector<T> out(rows * H);
  // Per (row, unit): i, f, g, o, c.
  auto cache = std::make_shared<std::vector<T>>(rows * 5 * H);
  std::vector<T> init(H, T(0));
  if (h0.defined()) std::copy(h0.data().begin(), h0.data().end(), init.begin());
  const T* whh = w.w_hh.data().data();
  const T* bhh = w.b_hh.data().data();

  parallel_for(s.batch, 1, [&](std::size_t begin, std::size_t end) {
    std::vector<T> pre(G);
    std::vector<T> zero_cell(H, T(0));
    for (std::size_t b = begin; b < end; ++b) {
      const T* h_prev = init.data();
      const T* c_prev = zero_cell.data();
      for (std::size_t t = 0; t < s.steps; ++t) {
        const std::size_t row = b * s.steps + t;
        detail::affine_rows(h_prev, whh, bhh, pre.data(), 1, H, G);
        const T* x = xi.data() + row * G;
        T* h = out.data() + row * H;
        T* c = cache->data() + row * 5 * H;
        for (std::size_t u = 0; u < H; ++u) {
          const T ig = detail::sigmoid_scalar(x[u] + pre[u]);
          const T fg = detail::sigmoid_scalar(x[H + u] + pre[H + u]);
          const T gg = std::tanh(x[2 * H + u] + pre[2 * H + u]);
          const T og = detail::sigmoid_scalar(x[3 * H + u] + pre[3 * H + u]);
          const T cell = fg * c_prev[u] + ig * gg;
          h[u] = og * std::tanh(cell);
          c[u] = ig;
          c[H + u] = fg;
          c[2 * H + u] = gg;
          c[3 * H + u] = og;
          c[4 * H + u] = cell;
        }
        h_prev = h;
        c_prev = c + 4 * H;
      }
    }
  });

  return Tensor<T>::make_result(
      detail::recurrent_output_shape<T>(s), std::move(out), "lstm", {seq, w.w_ih, w.w_hh, w.b_ih, w.b_hh, h0},
      [s, cache, init](const detail::Node<T>& node) {
        const std::size_t H = s.hidden;
        const std::size_t G = 4 * H;
        const std::size_t rows = s.batch * s.steps;
        const T* whh = detail::input_value(node, 2).data();
        T* g_whh = detail::data_or_null(detail::input_grad(node, 2));
        T* g_bhh = detail::data_or_null(detail::input_grad(node, 4));
        T* g_h0 = node.inputs[5] ? detail::data_or_null(detail::input_grad(node, 5)) : nullptr;
        std::vector<T> dgates(rows * G, T(0));
        std::vector<T> dh_next(H), dc_next(H);
        for (std::size_t b = 0; b < s.batch; ++b) {
          std::fill(dh_next.begin(), dh_next.end(), T(0));
          std::fill(dc_next.begin(), dc_next.end(), T(0));
          for (std::size_t t = s.steps; t-- > 0;) {
            const std::size_t row = b * s.steps + t;
            const T* h_prev = t > 0 ? node.value.data() + (row - 1) * H : init.data();
            const T* c = cache->data() + row * 5 * H;
            const T* c_prev = t > 0 ? cache->data() + (row - 1) * 5 * H + 4 * H : nullptr;
            T* dg = dgates.data() + row * G;
            for (std::size_t u = 0; u < H; ++u) {
              const T ig = c[u], fg = c[H + u], gg = c[2 * H + u], og = c[3 * H + u];
              const T tc = std::tanh(c[4 * H + u]);
              const T dh = node.grad[row * H + u] + dh_next[u];
              const T dcell = dc_next[u] + dh * og * (T(1) - tc * tc);
              const T cp = c_prev ? c_prev[u] : T(0);
              dg[u] = dcell * gg * ig * (T(1) - ig);
              dg[H + u] = dcell * cp * fg * (T(1) - fg);
              dg[2 * H + u] = dcell * ig * (T(1) - gg * gg);
              dg[3 * H + u] = dh * tc * og * (T(1) - og);
              dc_next[u] = dcell * fg;
              dh_next[u] = T(0);
            }
            for (std::size_t g = 0; g < G; ++g) {
              const T d = dg[g];
              if (d == T(0)) continue;
              if (g_whh) detail::axpy(d, h_prev, g_whh + g * H, H);
              if (g_bhh) g_bhh[g] += d;
              detail::axpy(d, whh + g * H, dh_next.data(), H);
            }
          }
          if (g_h0)
            for (std::size_t u = 0; u < H; ++u) g_h0[u] += dh_next[u];
        }
        detail::affine_rows_backward(detail::input_value(node, 0).data(), detail::input_value(node, 1).data(),
                                     dgates.data(), detail::data_or_null(detail::input_grad(node, 0)),
                                     detail::data_or_null(detail::input_grad(node, 1)),
                                     detail::data_or_null(detail::input_grad(node, 3)), rows, s.input, G);
      });
}

template <typename T>
Tensor<T> run_rnn(RnnKind kind, const Tensor<T>& seq, const RecurrentWeights<T>& w, const Tensor<T>& h0 = {}) {
  return kind == RnnKind::kGru ? gru(seq, w, h0) : lstm(seq, w, h0);
}

}  // namespace galr
