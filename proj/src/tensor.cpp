#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace clcnn {

Matrix Matrix::identity(size_t n) {
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    fail(concat("matmul: dimension mismatch, lhs is ", a.rows, "x", a.cols,
                ", rhs is ", b.rows, "x", b.cols));
  }
  Matrix out(a.rows, b.cols);
  // ikj order keeps the inner loop streaming over contiguous rows.
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * out.cols;
    for (size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols != v.size()) {
    fail(concat("matvec: dimension mismatch, matrix is ", m.rows, "x", m.cols,
                ", vector has length ", v.size()));
  }
  Vector out(m.rows);
  for (size_t i = 0; i < m.rows; ++i) out[i] = dot(m.row(i), v);
  return out;
}

Vector softmax(const Vector& v) {
  check(!v.empty(), "softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  check(std::isfinite(mx), "softmax: non-finite input");
  Vector out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Sigmoid:
      return sigmoid(x);
    case Activation::Relu:
      return x > 0.0 ? x : 0.0;
  }
  fail("unknown activation");
}

Matrix elementwise(Activation act, const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (size_t i = 0; i < m.data.size(); ++i) {
    out.data[i] = apply_activation(act, m.data[i]);
  }
  return out;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double eps) {
  check(eps > 0.0, "finite_diff_grad: eps must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double fp = f(probe);
    probe[i] = x[i] - eps;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(concat("finite_diff_grad: non-finite function value at coordinate ",
                  i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace clcnn
