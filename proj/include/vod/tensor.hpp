#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace vod {

// Thrown for malformed configs and CLI/file input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a self-check fails at runtime.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major float tensor. Immutable shape, mutable data.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<float> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float value);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(i); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D indexed access.
  float& at(int i, int j);
  float at(int i, int j) const;
  float& at(int c, int y, int x);
  float at(int c, int y, int x) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

// Output spatial size of a k x k convolution.
int conv_out_dim(int in, int k, int stride, int padding);

// Cross-correlation of a [C_in,H,W] input with [C_out,C_in,k,k] weights.
// k must be odd and the padded input must cover the kernel.
Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding);

// [M,K] x [K,N] product.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax of a [M,N] matrix, stabilized by row-max subtraction.
Tensor softmax_rows(const Tensor& a);

void relu_inplace(Tensor& t);
void add_inplace(Tensor& dst, const Tensor& src);

// Nearest-neighbour 2x upsample of a [C,H,W] map, cropped to (out_h, out_w).
Tensor upsample2x_nearest(const Tensor& t, int out_h, int out_w);

float sigmoid(float x);

}  // namespace vod
