#include "hnnkws/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "hnnkws/rng.hpp"

namespace hnnkws {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
Eigen::Map<const RowMat<T>> view(const T* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

template <typename T>
Eigen::Map<RowMat<T>> view(T* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

std::size_t at3(const Shape& s, int c, int l, int h) {
  return (static_cast<std::size_t>(c) * s.length + l) * s.height + h;
}

// Per-thread scratch matrices; reassigning a same-sized matrix reuses its storage.
struct Scratch {
  RowMat<double> x, w, y, d, g;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

// Y = X W^T + b over a row batch, computed in double.
template <typename T>
void affine_forward(const LayerSpec& layer, const LayerParams<T>& p, const T* x, T* y,
                    std::size_t rows) {
  const auto in = static_cast<std::size_t>(layer.in_dim);
  const auto out = static_cast<std::size_t>(layer.out_dim);
  Scratch& s = scratch();
  s.x = view(x, rows, in).template cast<double>();
  s.w = view(p.weights.data(), out, in).template cast<double>();
  s.y.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
  s.y.noalias() = s.x * s.w.transpose();
  s.y.rowwise() += Eigen::Map<const RowVec<T>>(p.biases.data(), static_cast<Eigen::Index>(out))
                       .template cast<double>();
  view(y, rows, out) = s.y.template cast<T>();
}

// Plain sliding-window loop, one sequential double accumulator per output.
template <typename T>
void conv_forward(const KernelSpec& k, const Shape& in, const Shape& out, const LayerParams<T>& p,
                  const T* x, T* y) {
  for (int kc = 0; kc < k.count; ++kc) {
    for (int ol = 0; ol < out.length; ++ol) {
      for (int oh = 0; oh < out.height; ++oh) {
        double acc = 0.0;
        std::size_t w = static_cast<std::size_t>(kc) * in.channels * k.length * k.height;
        for (int c = 0; c < in.channels; ++c) {
          for (int i = 0; i < k.length; ++i) {
            for (int j = 0; j < k.height; ++j, ++w) {
              acc += static_cast<double>(p.weights[w]) *
                     static_cast<double>(x[at3(in, c, ol * k.stride_length + i,
                                               oh * k.stride_height + j)]);
            }
          }
        }
        y[at3(out, kc, ol, oh)] = static_cast<T>(acc + static_cast<double>(p.biases[kc]));
      }
    }
  }
}

// Index of the first maximum inside pooling window (c, pl, ph).
template <typename T>
std::size_t pool_argmax(const PoolSpec& pool, const Shape& in, const T* x, int c, int pl, int ph) {
  std::size_t best = at3(in, c, pl * pool.length, ph * pool.height);
  for (int i = 0; i < pool.length; ++i) {
    for (int j = 0; j < pool.height; ++j) {
      const std::size_t idx = at3(in, c, pl * pool.length + i, ph * pool.height + j);
      if (x[idx] > x[best]) best = idx;
    }
  }
  return best;
}

template <typename T>
void softmax_forward(const T* x, T* y, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, static_cast<double>(x[i]));
  double sum = 0.0;
  thread_local std::vector<double> e;
  e.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = std::exp(static_cast<double>(x[i]) - m);
    sum += e[i];
  }
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<T>(e[i] / sum);
}

// Backpropagates `delta` (gradient w.r.t. the output of layer `start`, one row
// per sample) down to layer 0, accumulating parameter gradients.
template <typename T>
void propagate(const BasicNetwork<T>& net, std::span<const T> input, std::size_t rows,
               const Activations<T>& acts, std::size_t start, std::vector<T> delta,
               Gradients<T>& accum, std::vector<T>* input_grad) {
  std::vector<T> next;
  std::vector<double> wide;
  std::vector<double> wide_w;
  for (std::size_t li = start + 1; li-- > 0;) {
    const LayerSpec& layer = net.layers()[li];
    const Shape& in_shape = net.layer_input_shape(li);
    const Shape& out_shape = net.shapes()[li];
    const T* x = li == 0 ? input.data() : acts[li - 1].data();
    const T* y = acts[li].data();
    const bool need_input_grad = li > 0 || input_grad != nullptr;
    const std::size_t in_size = in_shape.size();
    const std::size_t out_size = out_shape.size();

    switch (layer.kind) {
      case LayerKind::Affine: {
        const LayerParams<T>& p = net.params(li);
        LayerParams<T>& g = accum[li];
        const auto in = static_cast<std::size_t>(layer.in_dim);
        const auto out = static_cast<std::size_t>(layer.out_dim);
        Scratch& s = scratch();
        s.d = view(delta.data(), rows, out).template cast<double>();
        s.x = view(x, rows, in).template cast<double>();
        s.g.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
        s.g.noalias() = s.d.transpose() * s.x;
        view(g.weights.data(), out, in) += s.g.template cast<T>();
        view(g.biases.data(), 1, out) += s.d.colwise().sum().template cast<T>();
        if (need_input_grad) {
          s.w = view(p.weights.data(), out, in).template cast<double>();
          s.y.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
          s.y.noalias() = s.d * s.w;
          next.resize(rows * in);
          view(next.data(), rows, in) = s.y.template cast<T>();
        }
        break;
      }
      case LayerKind::Conv2d: {
        const KernelSpec& k = layer.kernel;
        const LayerParams<T>& p = net.params(li);
        LayerParams<T>& g = accum[li];
        wide_w.assign(g.weights.size(), 0.0);
        std::vector<double> wide_b(g.biases.size(), 0.0);
        if (need_input_grad) next.resize(rows * in_size);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* xr = x + r * in_size;
          const T* dr = delta.data() + r * out_size;
          if (need_input_grad) wide.assign(in_size, 0.0);
          for (int kc = 0; kc < k.count; ++kc) {
            for (int ol = 0; ol < out_shape.length; ++ol) {
              for (int oh = 0; oh < out_shape.height; ++oh) {
                const double d = static_cast<double>(dr[at3(out_shape, kc, ol, oh)]);
                if (d == 0.0) continue;
                wide_b[static_cast<std::size_t>(kc)] += d;
                std::size_t w = static_cast<std::size_t>(kc) * in_shape.channels * k.length * k.height;
                for (int c = 0; c < in_shape.channels; ++c) {
                  for (int i = 0; i < k.length; ++i) {
                    for (int j = 0; j < k.height; ++j, ++w) {
                      const std::size_t xi =
                          at3(in_shape, c, ol * k.stride_length + i, oh * k.stride_height + j);
                      wide_w[w] += d * static_cast<double>(xr[xi]);
                      if (need_input_grad) wide[xi] += d * static_cast<double>(p.weights[w]);
                    }
                  }
                }
              }
            }
          }
          if (need_input_grad) {
            T* nr = next.data() + r * in_size;
            for (std::size_t i = 0; i < in_size; ++i) nr[i] = static_cast<T>(wide[i]);
          }
        }
        for (std::size_t i = 0; i < wide_w.size(); ++i) g.weights[i] += static_cast<T>(wide_w[i]);
        for (std::size_t i = 0; i < wide_b.size(); ++i) g.biases[i] += static_cast<T>(wide_b[i]);
        break;
      }
      case LayerKind::MaxPool: {
        if (!need_input_grad) break;
        next.assign(rows * in_size, T(0));
        for (std::size_t r = 0; r < rows; ++r) {
          const T* xr = x + r * in_size;
          for (int c = 0; c < out_shape.channels; ++c) {
            for (int pl = 0; pl < out_shape.length; ++pl) {
              for (int ph = 0; ph < out_shape.height; ++ph) {
                next[r * in_size + pool_argmax(layer.pool, in_shape, xr, c, pl, ph)] +=
                    delta[r * out_size + at3(out_shape, c, pl, ph)];
              }
            }
          }
        }
        break;
      }
      case LayerKind::Relu: {
        if (!need_input_grad) break;
        next.resize(rows * in_size);
        for (std::size_t i = 0; i < rows * in_size; ++i) next[i] = y[i] > T(0) ? delta[i] : T(0);
        break;
      }
      case LayerKind::Softmax: {
        if (!need_input_grad) break;
        next.resize(rows * in_size);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* yr = y + r * in_size;
          const T* dr = delta.data() + r * in_size;
          double inner = 0.0;
          for (std::size_t i = 0; i < in_size; ++i) {
            inner += static_cast<double>(yr[i]) * static_cast<double>(dr[i]);
          }
          for (std::size_t i = 0; i < in_size; ++i) {
            next[r * in_size + i] = static_cast<T>(static_cast<double>(yr[i]) *
                                                   (static_cast<double>(dr[i]) - inner));
          }
        }
        break;
      }
    }
    if (li == 0) {
      if (input_grad != nullptr) *input_grad = std::move(next);
      break;
    }
    delta.swap(next);
  }
}

template <typename T>
void check_input(const BasicNetwork<T>& net, std::size_t input_size, std::size_t rows = 1) {
  if (rows == 0 || input_size != rows * net.input_shape().size()) {
    throw ShapeError(0, "input has " + std::to_string(input_size) + " values, expected " +
                            std::to_string(rows) + " x " +
                            std::to_string(net.input_shape().size()));
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Affine: return "affine";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::Affine, LayerKind::Conv2d, LayerKind::MaxPool, LayerKind::Relu,
                    LayerKind::Softmax}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

Shape output_shape(const LayerSpec& layer, const Shape& in, std::size_t index) {
  switch (layer.kind) {
    case LayerKind::Affine:
      if (layer.in_dim < 1 || layer.out_dim < 1) {
        throw ShapeError(index, "affine dimensions must be >= 1");
      }
      if (in.size() != static_cast<std::size_t>(layer.in_dim)) {
        throw ShapeError(index, "affine expects " + std::to_string(layer.in_dim) +
                                    " inputs, got " + std::to_string(in.size()));
      }
      return Shape::flat(layer.out_dim);
    case LayerKind::Conv2d: {
      const KernelSpec& k = layer.kernel;
      if (k.count < 1 || k.length < 1 || k.height < 1 || k.stride_length < 1 ||
          k.stride_height < 1) {
        throw ShapeError(index, "conv2d kernel fields must be >= 1");
      }
      if (k.length > in.length || k.height > in.height) {
        throw ShapeError(index, "conv2d kernel " + std::to_string(k.length) + "x" +
                                    std::to_string(k.height) + " exceeds input " +
                                    std::to_string(in.length) + "x" + std::to_string(in.height));
      }
      return Shape{k.count, (in.length - k.length) / k.stride_length + 1,
                   (in.height - k.height) / k.stride_height + 1};
    }
    case LayerKind::MaxPool:
      if (layer.pool.length < 1 || layer.pool.height < 1 || layer.pool.length > in.length ||
          layer.pool.height > in.height) {
        throw ShapeError(index, "invalid max-pool window");
      }
      return Shape{in.channels, in.length / layer.pool.length, in.height / layer.pool.height};
    case LayerKind::Relu:
    case LayerKind::Softmax:
      return in;
  }
  throw ShapeError(index, "unknown layer kind");
}

std::vector<Shape> infer_shapes(const Shape& input, std::span<const LayerSpec> layers) {
  if (input.channels < 1 || input.length < 1 || input.height < 1) {
    throw ShapeError(0, "input shape must be positive");
  }
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape current = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    current = output_shape(layers[i], current, i);
    shapes.push_back(current);
  }
  return shapes;
}

std::size_t weight_count(const LayerSpec& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::Affine:
      return static_cast<std::size_t>(layer.in_dim) * static_cast<std::size_t>(layer.out_dim);
    case LayerKind::Conv2d:
      return static_cast<std::size_t>(layer.kernel.count) * in.channels * layer.kernel.length *
             layer.kernel.height;
    default:
      return 0;
  }
}

std::size_t bias_count(const LayerSpec& layer, const Shape&) {
  switch (layer.kind) {
    case LayerKind::Affine: return static_cast<std::size_t>(layer.out_dim);
    case LayerKind::Conv2d: return static_cast<std::size_t>(layer.kernel.count);
    default: return 0;
  }
}

template <typename T>
BasicNetwork<T>::BasicNetwork(Shape input, std::vector<LayerSpec> layers)
    : input_(input), layers_(std::move(layers)), shapes_(infer_shapes(input_, layers_)) {
  params_.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    params_[i].weights.assign(weight_count(layers_[i], layer_input_shape(i)), T(0));
    params_[i].biases.assign(bias_count(layers_[i], layer_input_shape(i)), T(0));
  }
}

template <typename T>
void forward_rows(const BasicNetwork<T>& net, std::span<const T> input, std::size_t rows,
                  Activations<T>& acts, std::size_t layer_count) {
  check_input(net, input.size(), rows);
  layer_count = std::min(layer_count, net.num_layers());
  acts.resize(layer_count);
  for (std::size_t li = 0; li < layer_count; ++li) {
    const LayerSpec& layer = net.layers()[li];
    const Shape& in = net.layer_input_shape(li);
    const Shape& out = net.shapes()[li];
    const T* x = li == 0 ? input.data() : acts[li - 1].data();
    acts[li].resize(rows * out.size());
    T* y = acts[li].data();
    switch (layer.kind) {
      case LayerKind::Affine:
        affine_forward(layer, net.params(li), x, y, rows);
        break;
      case LayerKind::Conv2d:
        for (std::size_t r = 0; r < rows; ++r) {
          conv_forward(layer.kernel, in, out, net.params(li), x + r * in.size(), y + r * out.size());
        }
        break;
      case LayerKind::MaxPool:
        for (std::size_t r = 0; r < rows; ++r) {
          const T* xr = x + r * in.size();
          T* yr = y + r * out.size();
          for (int c = 0; c < out.channels; ++c) {
            for (int pl = 0; pl < out.length; ++pl) {
              for (int ph = 0; ph < out.height; ++ph) {
                yr[at3(out, c, pl, ph)] = xr[pool_argmax(layer.pool, in, xr, c, pl, ph)];
              }
            }
          }
        }
        break;
      case LayerKind::Relu:
        for (std::size_t i = 0; i < rows * out.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
        break;
      case LayerKind::Softmax:
        for (std::size_t r = 0; r < rows; ++r) softmax_forward(x + r * in.size(), y + r * out.size(), out.size());
        break;
    }
  }
}

template <typename T>
void forward_into(const BasicNetwork<T>& net, std::span<const T> input, Activations<T>& acts,
                  std::size_t layer_count) {
  forward_rows(net, input, 1, acts, layer_count);
}

template <typename T>
Activations<T> forward(const BasicNetwork<T>& net, std::span<const T> input) {
  Activations<T> acts;
  forward_into(net, input, acts, net.num_layers());
  return acts;
}

template <typename T>
double cross_entropy(std::span<const T> probs, int target_class) {
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= probs.size()) {
    throw ConfigError("target class " + std::to_string(target_class) + " out of range");
  }
  const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(target_class)]),
                            std::numeric_limits<double>::min());
  return -std::log(p);
}

template <typename T>
double accumulate_backward_rows(const BasicNetwork<T>& net, std::span<const T> input,
                                std::size_t rows, const Activations<T>& acts,
                                std::span<const int> targets, Gradients<T>& accum,
                                std::vector<T>* input_grad) {
  check_input(net, input.size(), rows);
  if (net.num_layers() == 0 || net.layers().back().kind != LayerKind::Softmax) {
    throw ConfigError("cross-entropy backward needs a softmax-terminated network");
  }
  if (acts.size() != net.num_layers()) {
    throw ConfigError("activations do not cover the whole network");
  }
  if (targets.size() != rows) throw ConfigError("one target per row is required");
  const std::vector<T>& probs = acts.back();
  const std::size_t classes = net.output_shape().size();
  double loss = 0.0;
  std::vector<T> delta(probs);
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw ConfigError("target class " + std::to_string(t) + " out of range [0, " +
                        std::to_string(classes) + ")");
    }
    loss += cross_entropy(std::span<const T>(probs).subspan(r * classes, classes), t);
    delta[r * classes + static_cast<std::size_t>(t)] -= T(1);
  }
  if (net.num_layers() == 1) {
    if (input_grad != nullptr) *input_grad = std::move(delta);
    return loss;
  }
  propagate(net, input, rows, acts, net.num_layers() - 2, std::move(delta), accum, input_grad);
  return loss;
}

template <typename T>
double accumulate_backward(const BasicNetwork<T>& net, std::span<const T> input,
                           const Activations<T>& acts, int target_class, Gradients<T>& accum,
                           std::vector<T>* input_grad) {
  const int targets[1] = {target_class};
  return accumulate_backward_rows(net, input, 1, acts, std::span<const int>(targets), accum,
                                  input_grad);
}

template <typename T>
void accumulate_backprop_rows(const BasicNetwork<T>& net, std::span<const T> input,
                              std::size_t rows, const Activations<T>& acts,
                              std::span<const T> output_grad, Gradients<T>& accum,
                              std::vector<T>* input_grad) {
  check_input(net, input.size(), rows);
  if (acts.size() != net.num_layers()) {
    throw ConfigError("activations do not cover the whole network");
  }
  if (net.num_layers() == 0) {
    if (input_grad != nullptr) input_grad->assign(output_grad.begin(), output_grad.end());
    return;
  }
  if (output_grad.size() != rows * net.output_shape().size()) {
    throw ShapeError(net.num_layers() - 1, "output gradient size mismatch");
  }
  propagate(net, input, rows, acts, net.num_layers() - 1,
            std::vector<T>(output_grad.begin(), output_grad.end()), accum, input_grad);
}

template <typename T>
void accumulate_backprop(const BasicNetwork<T>& net, std::span<const T> input,
                         const Activations<T>& acts, std::span<const T> output_grad,
                         Gradients<T>& accum, std::vector<T>* input_grad) {
  accumulate_backprop_rows(net, input, 1, acts, output_grad, accum, input_grad);
}

template <typename T>
Gradients<T> backward(const BasicNetwork<T>& net, std::span<const T> input,
                      const Activations<T>& acts, int target_class) {
  Gradients<T> grads = zero_gradients(net);
  accumulate_backward(net, input, acts, target_class, grads);
  return grads;
}

template <typename T>
Gradients<T> zero_gradients(const BasicNetwork<T>& net) {
  Gradients<T> grads(net.num_layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    grads[i].weights.assign(net.params(i).weights.size(), T(0));
    grads[i].biases.assign(net.params(i).biases.size(), T(0));
  }
  return grads;
}

template <typename T>
void scale_gradients(Gradients<T>& grads, T factor) {
  for (auto& g : grads) {
    for (auto& v : g.weights) v *= factor;
    for (auto& v : g.biases) v *= factor;
  }
}

template <typename T>
void sgd_step(BasicNetwork<T>& net, const Gradients<T>& grads, T lr) {
  if (!(lr >= T(0)) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (grads.size() != net.num_layers()) throw ConfigError("gradient layer count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].weights.size() != net.params(i).weights.size() ||
        grads[i].biases.size() != net.params(i).biases.size()) {
      throw ShapeError(i, "gradient shape mismatch");
    }
    const auto finite = [](T v) { return std::isfinite(v); };
    if (!std::all_of(grads[i].weights.begin(), grads[i].weights.end(), finite) ||
        !std::all_of(grads[i].biases.begin(), grads[i].biases.end(), finite)) {
      throw NumericalError("non-finite gradient in layer " + std::to_string(i));
    }
  }
  if (lr == T(0)) return;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& p = net.params(i);
    for (std::size_t k = 0; k < p.weights.size(); ++k) p.weights[k] -= lr * grads[i].weights[k];
    for (std::size_t k = 0; k < p.biases.size(); ++k) p.biases[k] -= lr * grads[i].biases[k];
  }
}

template <typename T>
bool all_finite(const BasicNetwork<T>& net) {
  const auto finite = [](T v) { return std::isfinite(v); };
  return std::all_of(net.params().begin(), net.params().end(), [&](const LayerParams<T>& p) {
    return std::all_of(p.weights.begin(), p.weights.end(), finite) &&
           std::all_of(p.biases.begin(), p.biases.end(), finite);
  });
}

template <typename T>
void init_glorot(BasicNetwork<T>& net, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const LayerSpec& layer = net.layers()[i];
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (layer.kind == LayerKind::Affine) {
      fan_in = layer.in_dim;
      fan_out = layer.out_dim;
    } else if (layer.kind == LayerKind::Conv2d) {
      const double area = static_cast<double>(layer.kernel.length) * layer.kernel.height;
      fan_in = net.layer_input_shape(i).channels * area;
      fan_out = layer.kernel.count * area;
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : net.params(i).weights) w = static_cast<T>(rng.uniform(-limit, limit));
    std::fill(net.params(i).biases.begin(), net.params(i).biases.end(), T(0));
  }
}

template <typename To, typename From>
BasicNetwork<To> network_cast(const BasicNetwork<From>& net) {
  BasicNetwork<To> out(net.input_shape(), net.layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const auto& src = net.params(i);
    auto& dst = out.params(i);
    std::transform(src.weights.begin(), src.weights.end(), dst.weights.begin(),
                   [](From v) { return static_cast<To>(v); });
    std::transform(src.biases.begin(), src.biases.end(), dst.biases.begin(),
                   [](From v) { return static_cast<To>(v); });
  }
  return out;
}

std::uint64_t count_macs(const LayerSpec& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::Affine:
      return static_cast<std::uint64_t>(layer.in_dim) * static_cast<std::uint64_t>(layer.out_dim);
    case LayerKind::Conv2d: {
      const Shape out = output_shape(layer, in);
      return static_cast<std::uint64_t>(out.length) * out.height * layer.kernel.count *
             layer.kernel.length * layer.kernel.height * in.channels;
    }
    default:
      return 0;
  }
}

std::uint64_t count_macs(std::span<const LayerSpec> layers, const Shape& input) {
  const auto shapes = infer_shapes(input, layers);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    total += count_macs(layers[i], i == 0 ? input : shapes[i - 1]);
  }
  return total;
}

std::uint64_t count_params(std::span<const LayerSpec> layers, const Shape& input) {
  const auto shapes = infer_shapes(input, layers);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Shape& in = i == 0 ? input : shapes[i - 1];
    total += weight_count(layers[i], in) + bias_count(layers[i], in);
  }
  return total;
}

template <typename T>
std::uint64_t count_params(const BasicNetwork<T>& net) {
  return count_params(net, 0, net.num_layers());
}

template <typename T>
std::uint64_t count_params(const BasicNetwork<T>& net, std::size_t first, std::size_t last) {
  last = std::min(last, net.num_layers());
  std::uint64_t total = 0;
  for (std::size_t i = first; i < last; ++i) {
    total += net.params(i).weights.size() + net.params(i).biases.size();
  }
  return total;
}

template <typename T>
std::uint64_t count_macs(const BasicNetwork<T>& net, std::size_t first, std::size_t last) {
  last = std::min(last, net.num_layers());
  std::uint64_t total = 0;
  for (std::size_t i = first; i < last; ++i) {
    total += count_macs(net.layers()[i], net.layer_input_shape(i));
  }
  return total;
}

#define HNNKWS_INSTANTIATE(T)                                                                  \
  template class BasicNetwork<T>;                                                              \
  template void forward_into(const BasicNetwork<T>&, std::span<const T>, Activations<T>&,      \
                             std::size_t);                                                     \
  template void forward_rows(const BasicNetwork<T>&, std::span<const T>, std::size_t,         \
                             Activations<T>&, std::size_t);                                    \
  template double accumulate_backward_rows(const BasicNetwork<T>&, std::span<const T>,         \
                                           std::size_t, const Activations<T>&,                 \
                                           std::span<const int>, Gradients<T>&,                \
                                           std::vector<T>*);                                   \
  template void accumulate_backprop_rows(const BasicNetwork<T>&, std::span<const T>,           \
                                         std::size_t, const Activations<T>&,                   \
                                         std::span<const T>, Gradients<T>&, std::vector<T>*);  \
  template Activations<T> forward(const BasicNetwork<T>&, std::span<const T>);                 \
  template double cross_entropy(std::span<const T>, int);                                      \
  template double accumulate_backward(const BasicNetwork<T>&, std::span<const T>,              \
                                      const Activations<T>&, int, Gradients<T>&,               \
                                      std::vector<T>*);                                        \
  template void accumulate_backprop(const BasicNetwork<T>&, std::span<const T>,                \
                                    const Activations<T>&, std::span<const T>, Gradients<T>&,  \
                                    std::vector<T>*);                                          \
  template Gradients<T> backward(const BasicNetwork<T>&, std::span<const T>,                   \
                                 const Activations<T>&, int);                                  \
  template Gradients<T> zero_gradients(const BasicNetwork<T>&);                                \
  template void scale_gradients(Gradients<T>&, T);                                             \
  template void sgd_step(BasicNetwork<T>&, const Gradients<T>&, T);                            \
  template bool all_finite(const BasicNetwork<T>&);                                            \
  template void init_glorot(BasicNetwork<T>&, std::uint64_t);                                  \
  template std::uint64_t count_params(const BasicNetwork<T>&);                                 \
  template std::uint64_t count_params(const BasicNetwork<T>&, std::size_t, std::size_t);       \
  template std::uint64_t count_macs(const BasicNetwork<T>&, std::size_t, std::size_t);

HNNKWS_INSTANTIATE(float)
HNNKWS_INSTANTIATE(double)

#undef HNNKWS_INSTANTIATE

template BasicNetwork<double> network_cast(const BasicNetwork<float>&);
template BasicNetwork<float> network_cast(const BasicNetwork<double>&);

}  // namespace hnnkws
