#ifndef CLCNN_TENSOR_HPP
#define CLCNN_TENSOR_HPP

#include <functional>
#include <span>
#include <vector>

namespace clcnn {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Shapes are validated at call
// boundaries; NaN/Inf appearing in results is treated as an error state by
// the callers that can produce it (loss computation, softmax).
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(size_t r) const {
    return {data.data() + r * cols, cols};
  }

  static Matrix identity(size_t n);
};

enum class Activation { Tanh, Sigmoid, Relu };

Matrix matmul(const Matrix& a, const Matrix& b);

// y = m * v, for m (rows x cols) and v of length cols.
Vector matvec(const Matrix& m, const Vector& v);

// Numerically stable softmax (max subtraction). Errors on empty input.
Vector softmax(const Vector& v);

double sigmoid(double x);
double apply_activation(Activation act, double x);
Matrix elementwise(Activation act, const Matrix& m);

// Central-difference gradient (f(x+eps e_i) - f(x-eps e_i)) / (2 eps).
// Errors if f returns a non-finite value.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double eps);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> v);

}  // namespace clcnn

#endif
