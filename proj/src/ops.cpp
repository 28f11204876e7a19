#include "videograph/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "videograph/errors.hpp"

namespace videograph {
namespace {

// Gradient buffer of input i, or nullptr if that input does not need one.
double* input_grad(detail::Node& self, std::size_t i) {
  detail::Node& in = *self.inputs[i];
  return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

const std::vector<double>& input_data(const detail::Node& self, std::size_t i) {
  return self.inputs[i]->data;
}

struct AxisSplit {
  std::size_t outer;
  std::size_t length;
  std::size_t inner;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void check_axis(const Tensor& x, std::size_t axis, const char* op) {
  if (axis >= x.dim()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(x.shape()));
  }
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

double sigmoid_value(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.size(1) != b.size(0)) {
    throw ShapeError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.size(0), k = a.size(1), p = b.size(1);
  std::vector<double> out(m * p, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = ad[i * k + kk];
      const double* brow = &bd[kk * p];
      double* crow = &out[i * p];
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
  return Tensor::make_result("matmul", {m, p}, std::move(out), {a, b}, [m, k, p](detail::Node& self) {
    const auto& g = self.grad;
    const auto& av = input_data(self, 0);
    const auto& bv = input_data(self, 1);
    if (double* ga = input_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j) acc += g[i * p + j] * bv[kk * p + j];
          ga[i * k + kk] += acc;
        }
    }
    if (double* gb = input_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double aik = av[i * k + kk];
          for (std::size_t j = 0; j < p; ++j) gb[kk * p + j] += aik * g[i * p + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.dim() != 2) throw ShapeError("transpose expects a matrix, got " + shape_to_string(a.shape()));
  const std::size_t r = a.size(0), c = a.size(1);
  std::vector<double> out(r * c);
  const auto d = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = d[i * c + j];
  return Tensor::make_result("transpose", {c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    double* ga = input_grad(self, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("cannot reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result("reshape", std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    double* gx = input_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add shape mismatch: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor::make_result("add", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t in = 0; in < 2; ++in)
      if (double* g = input_grad(self, in))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul shape mismatch: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor::make_result("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& av = input_data(self, 0);
    const auto& bv = input_data(self, 1);
    if (double* ga = input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * bv[i];
    if (double* gb = input_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * av[i];
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return Tensor::make_result("scale", x.shape(), std::move(out), {x}, [factor](detail::Node& self) {
    double* gx = input_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * factor;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t c = x.shape().back();
  if (bias.numel() != c) {
    throw ShapeError("bias of shape " + shape_to_string(bias.shape()) + " does not match trailing axis of " +
                     shape_to_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bd = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i % c];
  return Tensor::make_result("add_bias", x.shape(), std::move(out), {x, bias}, [c](detail::Node& self) {
    if (double* gx = input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    if (double* gb = input_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i % c] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::make_result("sum", {1}, {total}, {x}, [](detail::Node& self) {
    double* gx = input_grad(self, 0);
    const std::size_t n = self.inputs[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x, std::span<const std::size_t> axes, Summation summation) {
  const Shape& shape = x.shape();
  std::vector<bool> reduced(shape.size(), false);
  for (std::size_t a : axes) {
    check_axis(x, a, "mean");
    if (reduced[a]) throw ShapeError("mean: axis " + std::to_string(a) + " listed twice");
    reduced[a] = true;
  }
  Shape out_shape;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (!reduced[i]) out_shape.push_back(shape[i]);
  if (out_shape.empty()) out_shape.push_back(1);

  const std::size_t n = x.numel();
  const std::size_t groups = shape_numel(out_shape);
  const std::size_t count = n / groups;

  // Map every input element to its output group.
  std::vector<std::size_t> group_of(n);
  {
    std::vector<std::size_t> index(shape.size(), 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
      std::size_t g = 0;
      for (std::size_t i = 0; i < shape.size(); ++i)
        if (!reduced[i]) g = g * shape[i] + index[i];
      group_of[flat] = g;
      for (std::size_t i = shape.size(); i-- > 0;) {
        if (++index[i] < shape[i]) break;
        index[i] = 0;
      }
    }
  }

  std::vector<double> out(groups, 0.0);
  const auto xd = x.data();
  if (summation == Summation::kSequential) {
    for (std::size_t i = 0; i < n; ++i) out[group_of[i]] += xd[i];
  } else {
    std::vector<std::vector<double>> members(groups);
    for (auto& m : members) m.reserve(count);
    for (std::size_t i = 0; i < n; ++i) members[group_of[i]].push_back(xd[i]);
    for (std::size_t g = 0; g < groups; ++g) {
      std::sort(members[g].begin(), members[g].end());
      for (double v : members[g]) out[g] += v;
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (double& v : out) v *= inv;

  return Tensor::make_result("mean", std::move(out_shape), std::move(out), {x},
                             [group_of = std::move(group_of), inv](detail::Node& self) {
                               double* gx = input_grad(self, 0);
                               for (std::size_t i = 0; i < group_of.size(); ++i)
                                 gx[i] += self.grad[group_of[i]] * inv;
                             });
}

Tensor activation(const Tensor& x, Activation kind) {
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > 0.0 ? xd[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(xd[i]);
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xd[i]);
      break;
  }
  return Tensor::make_result("activation", x.shape(), std::move(out), {x}, [kind](detail::Node& self) {
    double* gx = input_grad(self, 0);
    const auto& xv = input_data(self, 0);
    const auto& y = self.data;
    const auto& g = self.grad;
    switch (kind) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : 0.0;
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  check_axis(x, axis, "softmax");
  const AxisSplit s = split_at(x.shape(), axis);
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t r = 0; r < s.inner; ++r) {
      const std::size_t base = o * s.length * s.inner + r;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < s.length; ++i) mx = std::max(mx, xd[base + i * s.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) {
        const double e = std::exp(xd[base + i * s.inner] - mx);
        out[base + i * s.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < s.length; ++i) out[base + i * s.inner] /= total;
    }
  return Tensor::make_result("softmax", x.shape(), std::move(out), {x}, [s](detail::Node& self) {
    double* gx = input_grad(self, 0);
    const auto& y = self.data;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t r = 0; r < s.inner; ++r) {
        const std::size_t base = o * s.length * s.inner + r;
        double dot = 0.0;
        for (std::size_t i = 0; i < s.length; ++i) dot += g[base + i * s.inner] * y[base + i * s.inner];
        for (std::size_t i = 0; i < s.length; ++i) {
          const std::size_t at = base + i * s.inner;
          gx[at] += y[at] * (g[at] - dot);
        }
      }
  });
}

Tensor depthwise_conv1d(const Tensor& x, std::size_t axis, const Tensor& kernels) {
  check_axis(x, axis, "depthwise_conv1d");
  if (axis + 1 == x.dim()) throw ShapeError("depthwise_conv1d: cannot convolve along the channel axis");
  const std::size_t channels = x.shape().back();
  if (kernels.dim() != 2 || kernels.size(0) != channels) {
    throw ShapeError("depthwise_conv1d: kernels " + shape_to_string(kernels.shape()) + " do not match " +
                     std::to_string(channels) + " channels of " + shape_to_string(x.shape()));
  }
  const std::size_t k = kernels.size(1);
  if (k % 2 == 0) throw ShapeError("depthwise_conv1d: kernel length " + std::to_string(k) + " is even");

  const AxisSplit s = split_at(x.shape(), axis);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto len = static_cast<std::ptrdiff_t>(s.length);
  std::vector<double> out(x.numel(), 0.0);
  const auto xd = x.data();
  const auto kd = kernels.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::ptrdiff_t i = 0; i < len; ++i)
      for (std::size_t m = 0; m < k; ++m) {
        const std::ptrdiff_t src = i + static_cast<std::ptrdiff_t>(m) - half;
        if (src < 0 || src >= len) continue;
        const double* xrow = &xd[(o * s.length + static_cast<std::size_t>(src)) * s.inner];
        double* orow = &out[(o * s.length + static_cast<std::size_t>(i)) * s.inner];
        for (std::size_t r = 0; r < s.inner; ++r) orow[r] += kd[(r % channels) * k + m] * xrow[r];
      }

  return Tensor::make_result(
      "depthwise_conv1d", x.shape(), std::move(out), {x, kernels},
      [s, k, half, len, channels](detail::Node& self) {
        const auto& g = self.grad;
        const auto& xv = input_data(self, 0);
        const auto& kv = input_data(self, 1);
        double* gx = input_grad(self, 0);
        double* gk = input_grad(self, 1);
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::ptrdiff_t i = 0; i < len; ++i)
            for (std::size_t m = 0; m < k; ++m) {
              const std::ptrdiff_t src = i + static_cast<std::ptrdiff_t>(m) - half;
              if (src < 0 || src >= len) continue;
              const std::size_t xbase = (o * s.length + static_cast<std::size_t>(src)) * s.inner;
              const std::size_t obase = (o * s.length + static_cast<std::size_t>(i)) * s.inner;
              for (std::size_t r = 0; r < s.inner; ++r) {
                const std::size_t kidx = (r % channels) * k + m;
                if (gx) gx[xbase + r] += kv[kidx] * g[obase + r];
                if (gk) gk[kidx] += xv[xbase + r] * g[obase + r];
              }
            }
      });
}

BatchNormState::BatchNormState(std::size_t channels)
    : gamma(Tensor::full({channels}, 1.0, true)),
      beta(Tensor::zeros({channels}, true)),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {}

Tensor batch_norm(const Tensor& x, std::size_t channel_axis, BatchNormState& state, Mode mode) {
  check_axis(x, channel_axis, "batch_norm");
  const AxisSplit s = split_at(x.shape(), channel_axis);
  const std::size_t c = s.length;
  if (state.channels() != c || state.gamma.numel() != c || state.beta.numel() != c) {
    throw ShapeError("batch_norm: state has " + std::to_string(state.channels()) + " channels, input " +
                     shape_to_string(x.shape()) + " has " + std::to_string(c));
  }
  if (mode == Mode::kEval && !state.initialized) {
    throw std::logic_error("batch_norm: eval mode requested before any train-mode statistics update");
  }
  const std::size_t count = s.outer * s.inner;
  const auto xd = x.data();
  auto at = [&](std::size_t o, std::size_t ch, std::size_t r) { return (o * c + ch) * s.inner + r; };

  std::vector<double> mu(c, 0.0), inv_std(c, 0.0);
  if (mode == Mode::kTrain) {
    std::vector<double> var(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double total = 0.0;
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t r = 0; r < s.inner; ++r) total += xd[at(o, ch, r)];
      mu[ch] = total / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t r = 0; r < s.inner; ++r) {
          const double d = xd[at(o, ch, r)] - mu[ch];
          sq += d * d;
        }
      var[ch] = sq / static_cast<double>(count);
      inv_std[ch] = 1.0 / std::sqrt(var[ch] + state.epsilon);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      if (state.initialized) {
        state.running_mean[ch] = state.momentum * state.running_mean[ch] + (1.0 - state.momentum) * mu[ch];
        state.running_var[ch] = state.momentum * state.running_var[ch] + (1.0 - state.momentum) * var[ch];
      } else {
        state.running_mean[ch] = mu[ch];
        state.running_var[ch] = var[ch];
      }
    }
    state.initialized = true;
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.epsilon);
    }
  }

  const auto gd = state.gamma.data();
  const auto bd = state.beta.data();
  std::vector<double> xhat(x.numel());
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t r = 0; r < s.inner; ++r) {
        const std::size_t i = at(o, ch, r);
        xhat[i] = (xd[i] - mu[ch]) * inv_std[ch];
        out[i] = gd[ch] * xhat[i] + bd[ch];
      }

  return Tensor::make_result(
      "batch_norm", x.shape(), std::move(out), {x, state.gamma, state.beta},
      [s, c, count, mode, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        const auto& g = self.grad;
        const auto& gamma = input_data(self, 1);
        auto at = [&](std::size_t o, std::size_t ch, std::size_t r) { return (o * c + ch) * s.inner + r; };
        double* gx = input_grad(self, 0);
        double* ggamma = input_grad(self, 1);
        double* gbeta = input_grad(self, 2);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t r = 0; r < s.inner; ++r) {
              const std::size_t i = at(o, ch, r);
              sum_g += g[i];
              sum_gx += g[i] * xhat[i];
            }
          if (ggamma) ggamma[ch] += sum_gx;
          if (gbeta) gbeta[ch] += sum_g;
          if (!gx) continue;
          const double scale_c = gamma[ch] * inv_std[ch];
          if (mode == Mode::kEval) {
            for (std::size_t o = 0; o < s.outer; ++o)
              for (std::size_t r = 0; r < s.inner; ++r) gx[at(o, ch, r)] += g[at(o, ch, r)] * scale_c;
          } else {
            const double n = static_cast<double>(count);
            for (std::size_t o = 0; o < s.outer; ++o)
              for (std::size_t r = 0; r < s.inner; ++r) {
                const std::size_t i = at(o, ch, r);
                gx[i] += scale_c * (g[i] - sum_g / n - xhat[i] * sum_gx / n);
              }
          }
        }
      });
}

Tensor max_pool(const Tensor& x, std::span<const std::size_t> axes, std::size_t kernel, std::size_t stride) {
  if (kernel == 0 || stride == 0) throw ShapeError("max_pool: kernel and stride must be positive");
  const Shape& in_shape = x.shape();
  std::vector<bool> pooled(in_shape.size(), false);
  Shape out_shape = in_shape;
  for (std::size_t a : axes) {
    check_axis(x, a, "max_pool");
    if (pooled[a]) throw ShapeError("max_pool: axis " + std::to_string(a) + " listed twice");
    pooled[a] = true;
    if (in_shape[a] < kernel) {
      throw ShapeError("max_pool: axis " + std::to_string(a) + " of " + shape_to_string(in_shape) +
                       " is shorter than kernel " + std::to_string(kernel));
    }
    out_shape[a] = (in_shape[a] - kernel) / stride + 1;
  }
  const auto in_strides = row_major_strides(in_shape);

  // Window offsets in increasing flat order (pooled axes iterated lexicographically).
  std::vector<std::size_t> window{0};
  for (std::size_t a = 0; a < in_shape.size(); ++a) {
    if (!pooled[a]) continue;
    std::vector<std::size_t> next;
    for (std::size_t base : window)
      for (std::size_t w = 0; w < kernel; ++w) next.push_back(base + w * in_strides[a]);
    window = std::move(next);
  }

  const std::size_t n_out = shape_numel(out_shape);
  std::vector<double> out(n_out);
  std::vector<std::size_t> argmax(n_out);
  const auto xd = x.data();
  std::vector<std::size_t> index(out_shape.size(), 0);
  for (std::size_t flat = 0; flat < n_out; ++flat) {
    std::size_t base = 0;
    for (std::size_t a = 0; a < index.size(); ++a)
      base += (pooled[a] ? index[a] * stride : index[a]) * in_strides[a];
    std::size_t best = base + window[0];
    for (std::size_t w = 1; w < window.size(); ++w) {
      const std::size_t cand = base + window[w];
      if (xd[cand] > xd[best]) best = cand;
    }
    out[flat] = xd[best];
    argmax[flat] = best;
    for (std::size_t a = index.size(); a-- > 0;) {
      if (++index[a] < out_shape[a]) break;
      index[a] = 0;
    }
  }
  return Tensor::make_result("max_pool", std::move(out_shape), std::move(out), {x},
                             [argmax = std::move(argmax)](detail::Node& self) {
                               double* gx = input_grad(self, 0);
                               for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
                             });
}

Tensor node_attend(const Tensor& alpha, const Tensor& nodes) {
  if (alpha.dim() < 3 || nodes.dim() != 2 || alpha.shape().back() != nodes.size(0)) {
    throw ShapeError("node_attend: alpha " + shape_to_string(alpha.shape()) + " incompatible with nodes " +
                     shape_to_string(nodes.shape()));
  }
  const Shape& as = alpha.shape();
  const std::size_t d = as.size();
  const std::size_t h = as[d - 3], w = as[d - 2], n = as[d - 1];
  const std::size_t c = nodes.size(1);
  const std::size_t spatial = h * w;
  std::size_t lead = 1;
  Shape out_shape;
  for (std::size_t i = 0; i + 3 < d; ++i) {
    lead *= as[i];
    out_shape.push_back(as[i]);
  }
  out_shape.insert(out_shape.end(), {n, h, w, c});

  std::vector<double> out(lead * n * spatial * c);
  const auto ad = alpha.data();
  const auto yd = nodes.data();
  for (std::size_t l = 0; l < lead; ++l)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t sp = 0; sp < spatial; ++sp) {
        const double a = ad[(l * spatial + sp) * n + j];
        double* orow = &out[((l * n + j) * spatial + sp) * c];
        const double* yrow = &yd[j * c];
        for (std::size_t ch = 0; ch < c; ++ch) orow[ch] = a * yrow[ch];
      }
  return Tensor::make_result(
      "node_attend", std::move(out_shape), std::move(out), {alpha, nodes},
      [lead, n, spatial, c](detail::Node& self) {
        const auto& g = self.grad;
        const auto& av = input_data(self, 0);
        const auto& yv = input_data(self, 1);
        double* ga = input_grad(self, 0);
        double* gy = input_grad(self, 1);
        for (std::size_t l = 0; l < lead; ++l)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t sp = 0; sp < spatial; ++sp) {
              const std::size_t aidx = (l * spatial + sp) * n + j;
              const double* grow = &g[((l * n + j) * spatial + sp) * c];
              if (ga) {
                double acc = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch) acc += grow[ch] * yv[j * c + ch];
                ga[aidx] += acc;
              }
              if (gy) {
                const double a = av[aidx];
                for (std::size_t ch = 0; ch < c; ++ch) gy[j * c + ch] += grow[ch] * a;
              }
            }
      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  if (logits.dim() != 2 || logits.size(0) != targets.size()) {
    throw ShapeError("cross_entropy: logits " + shape_to_string(logits.shape()) + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const std::size_t b = logits.size(0), k = logits.size(1);
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside [0," + std::to_string(k) + ")");
    }
  }
  const auto ld = logits.data();
  std::vector<double> probs(b * k);
  std::vector<bool> clamped(b, false);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, ld[i * k + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::exp(ld[i * k + j] - mx);
      z += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    double p = probs[i * k + static_cast<std::size_t>(targets[i])];
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) {
      clamped[i] = true;
      p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    }
    total -= std::log(p);
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  return Tensor::make_result(
      "cross_entropy", {1}, {total / static_cast<double>(b)}, {logits},
      [b, k, probs = std::move(probs), clamped = std::move(clamped), tgt = std::move(tgt)](detail::Node& self) {
        double* gl = input_grad(self, 0);
        const double scale_b = self.grad[0] / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i) {
          if (clamped[i]) continue;
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = static_cast<std::size_t>(tgt[i]) == j ? 1.0 : 0.0;
            gl[i * k + j] += scale_b * (probs[i * k + j] - onehot);
          }
        }
      });
}

Tensor binary_cross_entropy(const Tensor& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape()) {
    throw ShapeError("binary_cross_entropy: logits " + shape_to_string(logits.shape()) + " vs targets " +
                     shape_to_string(targets.shape()));
  }
  const auto ld = logits.data();
  const auto td = targets.data();
  const std::size_t n = logits.numel();
  std::vector<double> probs(n);
  std::vector<bool> clamped(n, false);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (td[i] != 0.0 && td[i] != 1.0) {
      throw std::out_of_range("binary_cross_entropy: target " + std::to_string(td[i]) + " is not 0 or 1");
    }
    double p = sigmoid_value(ld[i]);
    probs[i] = p;
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) {
      clamped[i] = true;
      p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    }
    total -= td[i] * std::log(p) + (1.0 - td[i]) * std::log(1.0 - p);
  }
  std::vector<double> tv(td.begin(), td.end());
  return Tensor::make_result(
      "binary_cross_entropy", {1}, {total / static_cast<double>(n)}, {logits},
      [n, probs = std::move(probs), clamped = std::move(clamped), tv = std::move(tv)](detail::Node& self) {
        double* gl = input_grad(self, 0);
        const double scale_n = self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          if (!clamped[i]) gl[i] += scale_n * (probs[i] - tv[i]);
      });
}

}  // namespace videograph
