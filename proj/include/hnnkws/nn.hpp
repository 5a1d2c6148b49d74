#pragma once

// Minimal feed-forward engine: affine, valid 2-D convolution, max pooling,
// ReLU and softmax layers with exact backpropagation and MAC accounting.
//
// Tensors are flat row-major buffers with a (channels, length, height) shape.
// For the keyword-spotting input, length is time (11 frames) and height is the
// filterbank axis (40 bins), so element (c, l, h) lives at c*L*H + l*H + h.
//
// BasicNetwork is templated on the scalar type: float is the deployment type,
// double is used by the finite-difference gradient checks. Reductions always
// accumulate in double.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hnnkws/error.hpp"

namespace hnnkws {

struct Shape {
  int channels = 1;
  int length = 1;
  int height = 1;

  constexpr std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(length) *
           static_cast<std::size_t>(height);
  }
  static constexpr Shape flat(int n) { return Shape{1, 1, n}; }
  bool operator==(const Shape&) const = default;
};

enum class LayerKind { Affine, Conv2d, MaxPool, Relu, Softmax };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

// Kernel geometry in "count x [length, height], S[length stride, height stride]" form.
struct KernelSpec {
  int count = 1;
  int length = 1;
  int height = 1;
  int stride_length = 1;
  int stride_height = 1;
  bool operator==(const KernelSpec&) const = default;
};

// Non-overlapping pooling window (stride equals window).
struct PoolSpec {
  int length = 1;
  int height = 1;
  bool operator==(const PoolSpec&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int in_dim = 0;   // Affine only
  int out_dim = 0;  // Affine only
  KernelSpec kernel{};
  PoolSpec pool{};

  static LayerSpec affine(int in_dim, int out_dim) {
    return {LayerKind::Affine, in_dim, out_dim, {}, {}};
  }
  static LayerSpec conv2d(KernelSpec kernel) { return {LayerKind::Conv2d, 0, 0, kernel, {}}; }
  static LayerSpec max_pool(PoolSpec pool) { return {LayerKind::MaxPool, 0, 0, {}, pool}; }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0, {}, {}}; }
  static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, {}, {}}; }

  bool operator==(const LayerSpec&) const = default;
};

// Output shape of `layer` applied to `in`. Throws ShapeError naming `index`.
Shape output_shape(const LayerSpec& layer, const Shape& in, std::size_t index = 0);

// Output shape of every layer in the stack (validates shape consistency).
std::vector<Shape> infer_shapes(const Shape& input, std::span<const LayerSpec> layers);

std::size_t weight_count(const LayerSpec& layer, const Shape& in);
std::size_t bias_count(const LayerSpec& layer, const Shape& in);

// Parameters of one layer. Affine weights are [out][in]; conv weights are
// [kernel][in_channel][length][height].
template <typename T>
struct LayerParams {
  std::vector<T> weights;
  std::vector<T> biases;
  bool operator==(const LayerParams&) const = default;
};

template <typename T>
using Gradients = std::vector<LayerParams<T>>;

template <typename T>
class BasicNetwork {
 public:
  using value_type = T;

  BasicNetwork() = default;
  // Validates the stack and allocates zero-valued parameters.
  BasicNetwork(Shape input, std::vector<LayerSpec> layers);

  const Shape& input_shape() const noexcept { return input_; }
  const Shape& output_shape() const { return shapes_.empty() ? input_ : shapes_.back(); }
  // Shape of the tensor entering layer i.
  const Shape& layer_input_shape(std::size_t i) const { return i == 0 ? input_ : shapes_[i - 1]; }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  const std::vector<LayerParams<T>>& params() const noexcept { return params_; }
  std::vector<LayerParams<T>>& params() noexcept { return params_; }
  const LayerParams<T>& params(std::size_t i) const { return params_[i]; }
  LayerParams<T>& params(std::size_t i) { return params_[i]; }

  bool operator==(const BasicNetwork&) const = default;

 private:
  Shape input_{};
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<LayerParams<T>> params_;
};

using Network = BasicNetwork<float>;

// Output of every layer, in order. Element i is the output of layer i; for a
// batch it holds one row of that layer's output per sample.
template <typename T>
using Activations = std::vector<std::vector<T>>;

// Batched forward pass over `rows` samples stored row-major in `input`.
// Affine layers run as one double-precision matrix product per batch.
template <typename T>
void forward_rows(const BasicNetwork<T>& net, std::span<const T> input, std::size_t rows,
                  Activations<T>& acts, std::size_t layer_count);

// Batched counterparts of accumulate_backward / accumulate_backprop: gradients
// are summed over the rows, the returned loss is the sum of row losses.
template <typename T>
double accumulate_backward_rows(const BasicNetwork<T>& net, std::span<const T> input,
                                std::size_t rows, const Activations<T>& acts,
                                std::span<const int> targets, Gradients<T>& accum,
                                std::vector<T>* input_grad = nullptr);

template <typename T>
void accumulate_backprop_rows(const BasicNetwork<T>& net, std::span<const T> input,
                              std::size_t rows, const Activations<T>& acts,
                              std::span<const T> output_grad, Gradients<T>& accum,
                              std::vector<T>* input_grad = nullptr);

// Runs layers [0, layer_count) into `acts`, reusing its buffers.
template <typename T>
void forward_into(const BasicNetwork<T>& net, std::span<const T> input, Activations<T>& acts,
                  std::size_t layer_count);

template <typename T>
Activations<T> forward(const BasicNetwork<T>& net, std::span<const T> input);

// Cross-entropy of a probability vector against a class index.
template <typename T>
double cross_entropy(std::span<const T> probs, int target_class);

// Accumulates cross-entropy gradients for one sample into `accum`. The network
// must end in Softmax. When `input_grad` is non-null it receives dL/d(input).
// Returns the sample loss.
template <typename T>
double accumulate_backward(const BasicNetwork<T>& net, std::span<const T> input,
                           const Activations<T>& acts, int target_class, Gradients<T>& accum,
                           std::vector<T>* input_grad = nullptr);

// Accumulates gradients given dL/d(final output).
template <typename T>
void accumulate_backprop(const BasicNetwork<T>& net, std::span<const T> input,
                         const Activations<T>& acts, std::span<const T> output_grad,
                         Gradients<T>& accum, std::vector<T>* input_grad = nullptr);

template <typename T>
Gradients<T> backward(const BasicNetwork<T>& net, std::span<const T> input,
                      const Activations<T>& acts, int target_class);

template <typename T>
Gradients<T> zero_gradients(const BasicNetwork<T>& net);

template <typename T>
void scale_gradients(Gradients<T>& grads, T factor);

// w <- w - lr * g. Throws NumericalError (leaving `net` untouched) when any
// gradient is non-finite, ConfigError when lr is negative or shapes differ.
template <typename T>
void sgd_step(BasicNetwork<T>& net, const Gradients<T>& grads, T lr);

template <typename T>
bool all_finite(const BasicNetwork<T>& net);

// Glorot-uniform weights from `seed`, zero biases.
template <typename T>
void init_glorot(BasicNetwork<T>& net, std::uint64_t seed);

template <typename To, typename From>
BasicNetwork<To> network_cast(const BasicNetwork<From>& net);

// Counting convention: Affine n->m costs n*m; Conv2d costs
// out_len*out_h*kernels*k_len*k_h*in_channels; pooling and activations cost 0.
std::uint64_t count_macs(const LayerSpec& layer, const Shape& in);
std::uint64_t count_macs(std::span<const LayerSpec> layers, const Shape& input);
std::uint64_t count_params(std::span<const LayerSpec> layers, const Shape& input);

template <typename T>
std::uint64_t count_params(const BasicNetwork<T>& net);

// MACs of layers [first, last) of `net`.
template <typename T>
std::uint64_t count_macs(const BasicNetwork<T>& net, std::size_t first = 0,
                         std::size_t last = static_cast<std::size_t>(-1));

template <typename T>
std::uint64_t count_params(const BasicNetwork<T>& net, std::size_t first, std::size_t last);

}  // namespace hnnkws
