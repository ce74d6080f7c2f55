#include "vod/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace vod {

static std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ConfigError("tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(shape_product(shape_), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    throw ConfigError("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

float& Tensor::at(int i, int j) {
  return data_[static_cast<std::size_t>(i) * shape_[1] + j];
}
float Tensor::at(int i, int j) const {
  return data_[static_cast<std::size_t>(i) * shape_[1] + j];
}
float& Tensor::at(int c, int y, int x) {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
}
float Tensor::at(int c, int y, int x) const {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

int conv_out_dim(int in, int k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weights, int stride, int padding) {
  if (input.rank() != 3 || weights.rank() != 4)
    throw ConfigError("conv2d expects input [C,H,W] and weights [C_out,C_in,k,k], got " +
                      input.shape_str() + " and " + weights.shape_str());
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = weights.dim(0), k = weights.dim(2);
  if (weights.dim(1) != c_in)
    throw ConfigError("conv2d channel mismatch: input " + input.shape_str() +
                      " vs weights " + weights.shape_str());
  if (weights.dim(3) != k || k % 2 == 0) throw ConfigError("conv2d kernel must be square and odd");
  if (stride < 1 || padding < 0) throw ConfigError("conv2d: bad stride/padding");
  if (h < k - 2 * padding || w < k - 2 * padding)
    throw ConfigError("conv2d input smaller than kernel window");

  const int oh = conv_out_dim(h, k, stride, padding);
  const int ow = conv_out_dim(w, k, stride, padding);

  // im2col then a single matrix product.
  const int kk = c_in * k * k;
  Tensor col({kk, oh * ow});
  float* cd = col.data();
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int row = (ci * k + ky) * k + kx;
        float* out_row = cd + static_cast<std::size_t>(row) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - padding;
          if (iy < 0 || iy >= h) continue;
          const float* in_row = input.data() + (static_cast<std::size_t>(ci) * h + iy) * w;
          float* dst = out_row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - padding;
            if (ix >= 0 && ix < w) dst[ox] = in_row[ix];
          }
        }
      }
    }
  }

  Tensor wmat({c_out, kk}, std::vector<float>(weights.values()));
  Tensor prod = matmul(wmat, col);
  return Tensor({c_out, oh, ow}, std::vector<float>(prod.values()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ConfigError("matmul expects 2-D tensors, got " + a.shape_str() + " and " + b.shape_str());
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ConfigError("matmul inner dimension mismatch: " + a.shape_str() + " x " + b.shape_str());
  Tensor c({m, n});
  const float* ad = a.data();
  const float* bd = b.data();
  float* cd = c.data();
  for (int i = 0; i < m; ++i) {
    float* crow = cd + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ad[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0f) continue;
      const float* brow = bd + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw ConfigError("softmax_rows expects a 2-D tensor");
  const int m = a.dim(0), n = a.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    const float* row = a.data() + static_cast<std::size_t>(i) * n;
    float* orow = out.data() + static_cast<std::size_t>(i) * n;
    float mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    float sum = 0.0f;
    for (int j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (int j = 0; j < n; ++j) orow[j] /= sum;
  }
  return out;
}

void relu_inplace(Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] < 0.0f) t[i] = 0.0f;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  if (!dst.same_shape(src))
    throw ConfigError("add_inplace shape mismatch: " + dst.shape_str() + " vs " + src.shape_str());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor upsample2x_nearest(const Tensor& t, int out_h, int out_w) {
  if (t.rank() != 3) throw ConfigError("upsample2x_nearest expects [C,H,W]");
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (out_h > 2 * h || out_w > 2 * w) throw ConfigError("upsample2x_nearest: target too large");
  Tensor out({c, out_h, out_w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) out.at(ci, y, x) = t.at(ci, y / 2, x / 2);
  return out;
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace vod
