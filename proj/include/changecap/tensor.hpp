#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccap {

// Error taxonomy. The CLI maps these onto exit codes: format/contract/
// generation -> 3, numeric -> 4 (usage errors are handled by the parser).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major double tensor. Rank 0 (empty shape) is a scalar.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double v) { return Tensor(std::move(s), v); }
  static Tensor from(Shape s, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor identity(int64_t n);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t rank() const { return static_cast<int64_t>(shape.size()); }
  int64_t dim(int i) const;

  // 2-D accessors
  int64_t rows() const;
  int64_t cols() const;
  double& at(int64_t i, int64_t j);
  double at(int64_t i, int64_t j) const;

  double item() const;  // scalar value; throws unless numel()==1
  bool all_finite() const;
};

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace ccap
