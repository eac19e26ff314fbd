#ifndef CLCNN_LAYERS_HPP
#define CLCNN_LAYERS_HPP

#include "common.hpp"
#include "tensor.hpp"

namespace clcnn {

// One LSTM direction: input weights W_*, recurrent weights U_*, biases b_*
// for the input/forget/output gates and the cell candidate.
struct LstmDirParams {
  Matrix Wi, Wf, Wo, Wg;  // hidden x input
  Matrix Ui, Uf, Uo, Ug;  // hidden x hidden
  Vector bi, bf, bo, bg;  // hidden
};

struct LstmParams {
  size_t input = 0;
  size_t hidden = 0;
  LstmDirParams fwd, bwd;
};

// Convolution bank entry for one kernel size; kernel rows are flattened
// windows (ksize * input_dim), one row per feature.
struct ConvParams {
  size_t ksize = 0;
  size_t features = 0;
  size_t input_dim = 0;
  Matrix kernel;  // features x (ksize * input_dim)
  Vector bias;    // features
};

struct DenseParams {
  Matrix W;  // out x in
  Vector b;  // out
};

// Cached activations of one LSTM direction, indexed by PROCESSING step
// (the backward direction visits the input in reverse).
struct LstmDirTape {
  Matrix i, f, o, g;  // gate activations, T x hidden
  Matrix c, tc, h;    // cell state, tanh(cell state), hidden state
};

struct BiLstmTape {
  LstmDirTape fwd, bwd;
};

struct ConvTape {
  Matrix pre;  // pre-activation, (T - ksize + 1) x features
};

struct PoolResult {
  Vector values;
  std::vector<size_t> argmax;  // first occurrence per feature
};

// Forward passes. Tapes cache what the matching backward pass needs; the
// layer input itself is provided again by the caller on the way back.

// x is T x input; result is T x 2*hidden with row t = [h_fwd(t), h_bwd(t)],
// the backward block aligned to input positions.
Matrix bilstm_forward(const Matrix& x, const LstmParams& p, BiLstmTape& tape);

// Valid convolution with ReLU. Requires T >= ksize.
Matrix conv1d_forward(const Matrix& input, const ConvParams& p, ConvTape& tape);

// Per-feature max over time, ties to the earliest position.
PoolResult max_over_time(const Matrix& c);

// Inverted dropout: components die with probability `rate`, survivors are
// scaled by 1/(1-rate). Identity when not training. mask_out receives the
// applied per-component scale.
Vector dropout(const Vector& v, double rate, Rng& rng, bool training,
               Vector& mask_out);

Vector dense_forward(const Vector& v, const DenseParams& p);

// Backward passes: exact gradients of the forward maps. Parameter
// gradients ACCUMULATE into `grads` (same shapes as the params); the
// return value is the gradient with respect to the layer input.

Matrix bilstm_backward(const Matrix& x, const LstmParams& p,
                       const BiLstmTape& tape, const Matrix& dH,
                       LstmParams& grads);

Matrix conv1d_backward(const Matrix& input, const ConvParams& p,
                       const ConvTape& tape, const Matrix& dC,
                       ConvParams& grads);

// `positions` is the number of time positions of the pooled matrix.
Matrix max_over_time_backward(size_t positions,
                              const std::vector<size_t>& argmax,
                              const Vector& dv);

Vector dropout_backward(const Vector& mask, const Vector& dv);

Vector dense_backward(const Vector& input, const DenseParams& p,
                      const Vector& dy, DenseParams& grads);

// Seeded initialization: weights uniform in [-k, k] with k = sqrt(1/fan_in),
// biases zero except the LSTM forget-gate bias which starts at 1.
LstmParams init_lstm(size_t input, size_t hidden, Rng& rng);
ConvParams init_conv(size_t ksize, size_t features, size_t input_dim,
                     Rng& rng);
DenseParams init_dense(size_t out, size_t in, Rng& rng);

LstmParams zeros_like(const LstmParams& p);
ConvParams zeros_like(const ConvParams& p);
DenseParams zeros_like(const DenseParams& p);

}  // namespace clcnn

#endif
