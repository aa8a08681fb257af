#pragma once

#include <vector>

#include "galr/tensor.hpp"

namespace galr {

namespace detail {

inline std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// outer x axis x inner decomposition around `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto data = x.to_vector();
  return Tensor<T>::make_result(std::move(shape), std::move(data), "reshape", {x},
                                [](const detail::Node<T>& n) {
                                  auto g = detail::input_grad(n, 0);
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
                                });
}

// out.shape[i] = x.shape[axes[i]]
template <typename T>
Tensor<T> permute(const Tensor<T>& x, std::vector<std::size_t> axes) {
  const auto& in_shape = x.shape();
  const std::size_t r = in_shape.size();
  require(axes.size() == r, "permute: axis count does not match rank");
  std::vector<bool> seen(r, false);
  for (auto a : axes) {
    require(a < r && !seen[a], "permute: axes must be a permutation");
    seen[a] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = in_shape[axes[i]];
  const auto in_strides = detail::strides_of(in_shape);
  // Stride in the input for a unit step along each output axis.
  std::vector<std::size_t> src_strides(r);
  for (std::size_t i = 0; i < r; ++i) src_strides[i] = in_strides[axes[i]];

  // Flat source offset for every output element, reused by the adjoint.
  const std::size_t n = x.numel();
  auto index = std::make_shared<std::vector<std::size_t>>(n);
  {
    std::vector<std::size_t> counter(r, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (*index)[i] = src;
      for (std::size_t d = r; d-- > 0;) {
        src += src_strides[d];
        if (++counter[d] < out_shape[d]) break;
        src -= src_strides[d] * out_shape[d];
        counter[d] = 0;
      }
    }
  }
  const auto xv = x.data();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[(*index)[i]];
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), "permute", {x},
                                [index](const detail::Node<T>& node) {
                                  auto g = detail::input_grad(node, 0);
                                  if (g.empty()) return;
                                  for (std::size_t i = 0; i < index->size(); ++i)
                                    g[(*index)[i]] += node.grad[i];
                                });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require(x.rank() == 2, "transpose: expects a matrix, got " + shape_str(x.shape()));
  return permute(x, {1, 0});
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no operands");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    require(p.rank() == first.size(), "concat: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i)
      if (i != axis) require(p.dim(i) == first[i], "concat: non-axis dimension mismatch");
    out_shape[axis] += p.dim(axis);
  }
  const auto split = detail::split_at(out_shape, axis);
  std::vector<T> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto pv = p.data();
    const std::size_t block = p.dim(axis) * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o)
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                  out.begin() + static_cast<std::ptrdiff_t>(o * split.extent * split.inner + offset * split.inner));
    offset += p.dim(axis);
  }
  std::vector<std::size_t> extents;
  for (const auto& p : parts) extents.push_back(p.dim(axis));
  return Tensor<T>::make_result(
      std::move(out_shape), std::move(out), "concat", parts,
      [split, offsets, extents](const detail::Node<T>& n) {
        for (std::size_t k = 0; k < extents.size(); ++k) {
          auto g = detail::input_grad(n, k);
          if (g.empty()) continue;
          const std::size_t block = extents[k] * split.inner;
          for (std::size_t o = 0; o < split.outer; ++o) {
            const T* src = n.grad.data() + o * split.extent * split.inner + offsets[k] * split.inner;
            T* dst = g.data() + o * block;
            for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
          }
        }
      });
}

// Elements [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require(axis < x.rank(), "slice: axis out of range");
  require(begin < end && end <= x.dim(axis),
          "slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") invalid for extent " + std::to_string(x.dim(axis)));
  const auto split = detail::split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t block = (end - begin) * split.inner;
  std::vector<T> out(split.outer * block);
  const auto xv = x.data();
  for (std::size_t o = 0; o < split.outer; ++o)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>((o * split.extent + begin) * split.inner), block,
                out.begin() + static_cast<std::ptrdiff_t>(o * block));
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), "slice", {x},
                                [split, begin, block](const detail::Node<T>& n) {
                                  auto g = detail::input_grad(n, 0);
                                  if (g.empty()) return;
                                  for (std::size_t o = 0; o < split.outer; ++o) {
                                    T* dst = g.data() + (o * split.extent + begin) * split.inner;
                                    const T* src = n.grad.data() + o * block;
                                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                                  }
                                });
}

// Zero-extends `axis` to `length` at the tail.
template <typename T>
Tensor<T> pad_tail(const Tensor<T>& x, std::size_t axis, std::size_t length) {
  require(axis < x.rank(), "pad_tail: axis out of range");
  require(length >= x.dim(axis), "pad_tail: target shorter than input");
  if (length == x.dim(axis)) return x;
  const auto split = detail::split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<T> out(split.outer * length * split.inner, T(0));
  const auto xv = x.data();
  const std::size_t block = split.extent * split.inner;
  for (std::size_t o = 0; o < split.outer; ++o)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                out.begin() + static_cast<std::ptrdiff_t>(o * length * split.inner));
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), "pad_tail", {x},
                                [split, length, block](const detail::Node<T>& n) {
                                  auto g = detail::input_grad(n, 0);
                                  if (g.empty()) return;
                                  for (std::size_t o = 0; o < split.outer; ++o) {
                                    const T* src = n.grad.data() + o * length * split.inner;
                                    T* dst = g.data() + o * block;
                                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                                  }
                                });
}

// Nearest-neighbour upsampling: every index along `axis` repeated `factor` times.
template <typename T>
Tensor<T> repeat_interleave(const Tensor<T>& x, std::size_t axis, std::size_t factor) {
  require(axis < x.rank(), "repeat_interleave: axis out of range");
  require(factor >= 1, "repeat_interleave: factor must be >= 1");
  if (factor == 1) return x;
  const auto split = detail::split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] *= factor;
  std::vector<T> out(x.numel() * factor);
  const auto xv = x.data();
  for (std::size_t o = 0; o < split.outer; ++o)
    for (std::size_t e = 0; e < split.extent; ++e)
      for (std::size_t r = 0; r < factor; ++r)
        std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>((o * split.extent + e) * split.inner), split.inner,
                    out.begin() + static_cast<std::ptrdiff_t>(((o * split.extent + e) * factor + r) * split.inner));
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), "repeat_interleave", {x},
                                [split, factor](const detail::Node<T>& n) {
                                  auto g = detail::input_grad(n, 0);
                                  if (g.empty()) return;
                                  for (std::size_t o = 0; o < split.outer; ++o)
                                    for (std::size_t e = 0; e < split.extent; ++e)
                                      for (std::size_t r = 0; r < factor; ++r) {
                                        const T* src = n.grad.data() +
                                                       ((o * split.extent + e) * factor + r) * split.inner;
                                        T* dst = g.data() + (o * split.extent + e) * split.inner;
                                        for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
                                      }
                                });
}

// Geometry shared by unfold/fold. Frame s covers source positions
// [s*hop - lead, s*hop - lead + size); positions outside [0, length) read as
// zero.
struct FrameGeometry {
  std::size_t size = 0;
  std::size_t hop = 0;
  std::size_t lead = 0;
  std::size_t count = 0;
  std::size_t length = 0;
};

namespace detail {

template <typename T>
void unfold_kernel(std::span<const T> src, std::span<T> dst, std::size_t channels, const FrameGeometry& g) {
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t s = 0; s < g.count; ++s)
      for (std::size_t k = 0; k < g.size; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(s * g.hop + k) - static_cast<std::ptrdiff_t>(g.lead);
        if (pos >= 0 && static_cast<std::size_t>(pos) < g.length)
          dst[(c * g.count + s) * g.size + k] += src[c * g.length + static_cast<std::size_t>(pos)];
      }
}

template <typename T>
void fold_kernel(std::span<const T> src, std::span<T> dst, std::size_t channels, const FrameGeometry& g) {
  // Ascending (s, k) order fixes the summation order per output position.
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t s = 0; s < g.count; ++s)
      for (std::size_t k = 0; k < g.size; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(s * g.hop + k) - static_cast<std::ptrdiff_t>(g.lead);
        if (pos >= 0 && static_cast<std::size_t>(pos) < g.length)
          dst[c * g.length + static_cast<std::size_t>(pos)] += src[(c * g.count + s) * g.size + k];
      }
}

}  // namespace detail

// [C x length] -> [C x count x size]
template <typename T>
Tensor<T> unfold(const Tensor<T>& x, const FrameGeometry& g) {
  require(x.rank() == 2, "unfold: expects [channels x length], got " + shape_str(x.shape()));
  require(x.dim(1) == g.length, "unfold: input length does not match geometry");
  require(g.size >= 1 && g.hop >= 1 && g.count >= 1, "unfold: degenerate geometry");
  const std::size_t channels = x.dim(0);
  std::vector<T> out(channels * g.count * g.size, T(0));
  detail::unfold_kernel<T>(x.data(), out, channels, g);
  return Tensor<T>::make_result({channels, g.count, g.size}, std::move(out), "unfold", {x},
                                [g, channels](const detail::Node<T>& n) {
                                  auto gx = detail::input_grad(n, 0);
                                  if (!gx.empty()) detail::fold_kernel<T>(n.grad, gx, channels, g);
                                });
}

// [C x count x size] -> [C x length]; the adjoint of unfold.
template <typename T>
Tensor<T> fold(const Tensor<T>& x, const FrameGeometry& g) {
  require(x.rank() == 3, "fold: expects [channels x count x size], got " + shape_str(x.shape()));
  require(x.dim(1) == g.count && x.dim(2) == g.size, "fold: input does not match geometry");
  require(g.length >= 1, "fold: output length must be positive");
  const std::size_t channels = x.dim(0);
  std::vector<T> out(channels * g.length, T(0));
  detail::fold_kernel<T>(x.data(), out, channels, g);
  return Tensor<T>::make_result({channels, g.length}, std::move(out), "fold", {x},
                                [g, channels](const detail::Node<T>& n) {
                                  auto gx = detail::input_grad(n, 0);
                                  if (!gx.empty()) detail::unfold_kernel<T>(n.grad, gx, channels, g);
                                });
}

}  // namespace galr
