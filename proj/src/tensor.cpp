#include "changecap/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ccap {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
  data.assign(static_cast<size_t>(shape_numel(shape)), fill);
}

Tensor Tensor::from(Shape s, std::vector<double> values) {
  Tensor t;
  t.shape = std::move(s);
  if (shape_numel(t.shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(t.shape));
  }
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.data.assign(1, v);
  return t;
}

Tensor Tensor::identity(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.data[static_cast<size_t>(i * n + i)] = 1.0;
  return t;
}

int64_t Tensor::dim(int i) const {
  if (i < 0 || i >= rank()) throw ShapeError("axis " + std::to_string(i) + " out of range for " + shape_str(shape));
  return shape[static_cast<size_t>(i)];
}

int64_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows() needs a 2-D tensor, got " + shape_str(shape));
  return shape[0];
}

int64_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols() needs a 2-D tensor, got " + shape_str(shape));
  return shape[1];
}

double& Tensor::at(int64_t i, int64_t j) {
  return data[static_cast<size_t>(i * cols() + j)];
}

double Tensor::at(int64_t i, int64_t j) const {
  return data[static_cast<size_t>(i * cols() + j)];
}

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() needs a scalar, got shape " + shape_str(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace ccap
