#include "layers.hpp"

#include <algorithm>
#include <cmath>

namespace clcnn {

namespace {

void lstm_dir_forward(const Matrix& x, const LstmDirParams& p, size_t hidden,
                      bool reverse, LstmDirTape& tape) {
  const size_t T = x.rows;
  tape.i = Matrix(T, hidden);
  tape.f = Matrix(T, hidden);
  tape.o = Matrix(T, hidden);
  tape.g = Matrix(T, hidden);
  tape.c = Matrix(T, hidden);
  tape.tc = Matrix(T, hidden);
  tape.h = Matrix(T, hidden);

  const Vector zero(hidden, 0.0);
  for (size_t s = 0; s < T; ++s) {
    const size_t idx = reverse ? T - 1 - s : s;
    const auto xrow = x.row(idx);
    auto h_prev = s > 0 ? tape.h.row(s - 1) : std::span<const double>(zero);
    auto c_prev = s > 0 ? tape.c.row(s - 1) : std::span<const double>(zero);
    for (size_t j = 0; j < hidden; ++j) {
      const double ai = dot(p.Wi.row(j), xrow) + dot(p.Ui.row(j), h_prev) + p.bi[j];
      const double af = dot(p.Wf.row(j), xrow) + dot(p.Uf.row(j), h_prev) + p.bf[j];
      const double ao = dot(p.Wo.row(j), xrow) + dot(p.Uo.row(j), h_prev) + p.bo[j];
      const double ag = dot(p.Wg.row(j), xrow) + dot(p.Ug.row(j), h_prev) + p.bg[j];
      const double iv = sigmoid(ai);
      const double fv = sigmoid(af);
      const double ov = sigmoid(ao);
      const double gv = std::tanh(ag);
      const double cv = fv * c_prev[j] + iv * gv;
      const double tcv = std::tanh(cv);
      tape.i(s, j) = iv;
      tape.f(s, j) = fv;
      tape.o(s, j) = ov;
      tape.g(s, j) = gv;
      tape.c(s, j) = cv;
      tape.tc(s, j) = tcv;
      tape.h(s, j) = ov * tcv;
    }
  }
}

// dH_dir is indexed by processing step, like the tape.
Matrix lstm_dir_backward(const Matrix& x, const LstmDirParams& p,
                         size_t hidden, bool reverse, const LstmDirTape& t,
                         const Matrix& dH_dir, LstmDirParams& g) {
  const size_t T = x.rows;
  Matrix dx(T, x.cols);
  const Vector zero(hidden, 0.0);
  Vector dh(hidden), dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  Vector da_i(hidden), da_f(hidden), da_o(hidden), da_g(hidden);

  for (size_t s = T; s-- > 0;) {
    const size_t idx = reverse ? T - 1 - s : s;
    const auto xrow = x.row(idx);
    auto h_prev = s > 0 ? t.h.row(s - 1) : std::span<const double>(zero);
    auto c_prev = s > 0 ? t.c.row(s - 1) : std::span<const double>(zero);

    for (size_t j = 0; j < hidden; ++j) {
      dh[j] = dH_dir(s, j) + dh_next[j];
      const double ov = t.o(s, j);
      const double tcv = t.tc(s, j);
      const double dc = dh[j] * ov * (1.0 - tcv * tcv) + dc_next[j];
      const double iv = t.i(s, j);
      const double fv = t.f(s, j);
      const double gv = t.g(s, j);
      da_o[j] = dh[j] * tcv * ov * (1.0 - ov);
      da_f[j] = dc * c_prev[j] * fv * (1.0 - fv);
      da_i[j] = dc * gv * iv * (1.0 - iv);
      da_g[j] = dc * iv * (1.0 - gv * gv);
      dc_next[j] = dc * fv;
    }

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    auto dxrow = dx.row(idx);
    const Matrix* Ws[4] = {&p.Wi, &p.Wf, &p.Wo, &p.Wg};
    const Matrix* Us[4] = {&p.Ui, &p.Uf, &p.Uo, &p.Ug};
    Matrix* gWs[4] = {&g.Wi, &g.Wf, &g.Wo, &g.Wg};
    Matrix* gUs[4] = {&g.Ui, &g.Uf, &g.Uo, &g.Ug};
    Vector* gbs[4] = {&g.bi, &g.bf, &g.bo, &g.bg};
    const Vector* das[4] = {&da_i, &da_f, &da_o, &da_g};
    for (int k = 0; k < 4; ++k) {
      for (size_t j = 0; j < hidden; ++j) {
        const double a = (*das[k])[j];
        if (a == 0.0) continue;
        axpy(a, xrow, gWs[k]->row(j));
        axpy(a, h_prev, gUs[k]->row(j));
        (*gbs[k])[j] += a;
        axpy(a, Ws[k]->row(j), dxrow);
        axpy(a, Us[k]->row(j), dh_next);
      }
    }
  }
  return dx;
}

double init_bound(size_t fan_in) {
  return std::sqrt(1.0 / static_cast<double>(fan_in));
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& x : m.data) x = rng.uniform(-bound, bound);
}

}  // namespace

Matrix bilstm_forward(const Matrix& x, const LstmParams& p, BiLstmTape& tape) {
  check(x.rows >= 1, "bilstm: empty sequence");
  if (x.cols != p.input) {
    fail(concat("bilstm: input width ", x.cols, " does not match parameter input ",
                p.input));
  }
  lstm_dir_forward(x, p.fwd, p.hidden, false, tape.fwd);
  lstm_dir_forward(x, p.bwd, p.hidden, true, tape.bwd);

  const size_t T = x.rows;
  Matrix out(T, 2 * p.hidden);
  for (size_t t = 0; t < T; ++t) {
    auto row = out.row(t);
    const auto hf = tape.fwd.h.row(t);
    const auto hb = tape.bwd.h.row(T - 1 - t);
    std::copy(hf.begin(), hf.end(), row.begin());
    std::copy(hb.begin(), hb.end(), row.begin() + p.hidden);
  }
  return out;
}

Matrix bilstm_backward(const Matrix& x, const LstmParams& p,
                       const BiLstmTape& tape, const Matrix& dH,
                       LstmParams& grads) {
  const size_t T = x.rows;
  if (dH.rows != T || dH.cols != 2 * p.hidden) {
    fail(concat("bilstm backward: upstream gradient is ", dH.rows, "x", dH.cols,
                ", expected ", T, "x", 2 * p.hidden));
  }
  Matrix d_fwd(T, p.hidden), d_bwd(T, p.hidden);
  for (size_t t = 0; t < T; ++t) {
    for (size_t j = 0; j < p.hidden; ++j) {
      d_fwd(t, j) = dH(t, j);
      d_bwd(T - 1 - t, j) = dH(t, p.hidden + j);
    }
  }
  Matrix dx = lstm_dir_backward(x, p.fwd, p.hidden, false, tape.fwd, d_fwd,
                                grads.fwd);
  Matrix dx2 = lstm_dir_backward(x, p.bwd, p.hidden, true, tape.bwd, d_bwd,
                                 grads.bwd);
  for (size_t k = 0; k < dx.data.size(); ++k) dx.data[k] += dx2.data[k];
  return dx;
}

Matrix conv1d_forward(const Matrix& input, const ConvParams& p,
                      ConvTape& tape) {
  if (input.cols != p.input_dim) {
    fail(concat("conv1d: input width ", input.cols,
                " does not match kernel input dim ", p.input_dim));
  }
  if (input.rows < p.ksize) {
    fail(concat("conv1d: sequence length ", input.rows,
                " shorter than kernel size ", p.ksize,
                " (pad the focus sentence upstream)"));
  }
  const size_t positions = input.rows - p.ksize + 1;
  const size_t wlen = p.ksize * p.input_dim;
  tape.pre = Matrix(positions, p.features);
  Matrix out(positions, p.features);
  for (size_t pos = 0; pos < positions; ++pos) {
    // Row-major rows are contiguous, so a window is one flat span.
    std::span<const double> window(input.data.data() + pos * input.cols, wlen);
    for (size_t f = 0; f < p.features; ++f) {
      const double a = dot(p.kernel.row(f), window) + p.bias[f];
      tape.pre(pos, f) = a;
      out(pos, f) = a > 0.0 ? a : 0.0;
    }
  }
  return out;
}

Matrix conv1d_backward(const Matrix& input, const ConvParams& p,
                       const ConvTape& tape, const Matrix& dC,
                       ConvParams& grads) {
  const size_t positions = input.rows - p.ksize + 1;
  if (dC.rows != positions || dC.cols != p.features) {
    fail(concat("conv1d backward: upstream gradient is ", dC.rows, "x", dC.cols,
                ", expected ", positions, "x", p.features));
  }
  const size_t wlen = p.ksize * p.input_dim;
  Matrix dInput(input.rows, input.cols);
  for (size_t pos = 0; pos < positions; ++pos) {
    std::span<const double> window(input.data.data() + pos * input.cols, wlen);
    std::span<double> dwindow(dInput.data.data() + pos * input.cols, wlen);
    for (size_t f = 0; f < p.features; ++f) {
      if (tape.pre(pos, f) <= 0.0) continue;  // ReLU gate
      const double d = dC(pos, f);
      if (d == 0.0) continue;
      axpy(d, window, grads.kernel.row(f));
      grads.bias[f] += d;
      axpy(d, p.kernel.row(f), dwindow);
    }
  }
  return dInput;
}

PoolResult max_over_time(const Matrix& c) {
  check(c.rows >= 1, "max_over_time: empty input");
  PoolResult r;
  r.values.assign(c.cols, 0.0);
  r.argmax.assign(c.cols, 0);
  for (size_t f = 0; f < c.cols; ++f) {
    double best = c(0, f);
    size_t at = 0;
    for (size_t t = 1; t < c.rows; ++t) {
      if (c(t, f) > best) {
        best = c(t, f);
        at = t;
      }
    }
    r.values[f] = best;
    r.argmax[f] = at;
  }
  return r;
}

Matrix max_over_time_backward(size_t positions,
                              const std::vector<size_t>& argmax,
                              const Vector& dv) {
  check(argmax.size() == dv.size(),
        "max_over_time backward: argmax/gradient size mismatch");
  Matrix dC(positions, dv.size());
  for (size_t f = 0; f < dv.size(); ++f) dC(argmax[f], f) = dv[f];
  return dC;
}

Vector dropout(const Vector& v, double rate, Rng& rng, bool training,
               Vector& mask_out) {
  check(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
  mask_out.assign(v.size(), 1.0);
  if (!training || rate == 0.0) return v;
  const double scale = 1.0 / (1.0 - rate);
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double m = rng.next_double() < rate ? 0.0 : scale;
    mask_out[i] = m;
    out[i] = v[i] * m;
  }
  return out;
}

Vector dropout_backward(const Vector& mask, const Vector& dv) {
  check(mask.size() == dv.size(), "dropout backward: mask size mismatch");
  Vector out(dv.size());
  for (size_t i = 0; i < dv.size(); ++i) out[i] = dv[i] * mask[i];
  return out;
}

Vector dense_forward(const Vector& v, const DenseParams& p) {
  if (p.W.cols != v.size()) {
    fail(concat("dense: input length ", v.size(), " does not match weight ",
                p.W.rows, "x", p.W.cols));
  }
  Vector out = matvec(p.W, v);
  for (size_t i = 0; i < out.size(); ++i) out[i] += p.b[i];
  return out;
}

Vector dense_backward(const Vector& input, const DenseParams& p,
                      const Vector& dy, DenseParams& grads) {
  check(dy.size() == p.W.rows, "dense backward: gradient size mismatch");
  Vector dv(input.size(), 0.0);
  for (size_t r = 0; r < p.W.rows; ++r) {
    const double d = dy[r];
    if (d == 0.0) continue;
    axpy(d, input, grads.W.row(r));
    grads.b[r] += d;
    axpy(d, p.W.row(r), dv);
  }
  return dv;
}

LstmParams init_lstm(size_t input, size_t hidden, Rng& rng) {
  check(input >= 1 && hidden >= 1, "lstm: input and hidden must be >= 1");
  LstmParams p;
  p.input = input;
  p.hidden = hidden;
  const double kw = init_bound(input);
  const double ku = init_bound(hidden);
  for (LstmDirParams* dir : {&p.fwd, &p.bwd}) {
    for (Matrix* w : {&dir->Wi, &dir->Wf, &dir->Wo, &dir->Wg}) {
      *w = Matrix(hidden, input);
      init_uniform(*w, kw, rng);
    }
    for (Matrix* u : {&dir->Ui, &dir->Uf, &dir->Uo, &dir->Ug}) {
      *u = Matrix(hidden, hidden);
      init_uniform(*u, ku, rng);
    }
    dir->bi.assign(hidden, 0.0);
    dir->bf.assign(hidden, 1.0);  // forget gate open at the start
    dir->bo.assign(hidden, 0.0);
    dir->bg.assign(hidden, 0.0);
  }
  return p;
}

ConvParams init_conv(size_t ksize, size_t features, size_t input_dim,
                     Rng& rng) {
  check(ksize >= 1 && features >= 1 && input_dim >= 1,
        "conv: ksize, features and input_dim must be >= 1");
  ConvParams p;
  p.ksize = ksize;
  p.features = features;
  p.input_dim = input_dim;
  p.kernel = Matrix(features, ksize * input_dim);
  init_uniform(p.kernel, init_bound(ksize * input_dim), rng);
  p.bias.assign(features, 0.0);
  return p;
}

DenseParams init_dense(size_t out, size_t in, Rng& rng) {
  check(out >= 1 && in >= 1, "dense: dimensions must be >= 1");
  DenseParams p;
  p.W = Matrix(out, in);
  init_uniform(p.W, init_bound(in), rng);
  p.b.assign(out, 0.0);
  return p;
}

LstmParams zeros_like(const LstmParams& p) {
  LstmParams z;
  z.input = p.input;
  z.hidden = p.hidden;
  for (LstmDirParams* dir : {&z.fwd, &z.bwd}) {
    for (Matrix* w : {&dir->Wi, &dir->Wf, &dir->Wo, &dir->Wg}) {
      *w = Matrix(p.hidden, p.input);
    }
    for (Matrix* u : {&dir->Ui, &dir->Uf, &dir->Uo, &dir->Ug}) {
      *u = Matrix(p.hidden, p.hidden);
    }
    dir->bi.assign(p.hidden, 0.0);
    dir->bf.assign(p.hidden, 0.0);
    dir->bo.assign(p.hidden, 0.0);
    dir->bg.assign(p.hidden, 0.0);
  }
  return z;
}

ConvParams zeros_like(const ConvParams& p) {
  ConvParams z;
  z.ksize = p.ksize;
  z.features = p.features;
  z.input_dim = p.input_dim;
  z.kernel = Matrix(p.features, p.ksize * p.input_dim);
  z.bias.assign(p.features, 0.0);
  return z;
}

DenseParams zeros_like(const DenseParams& p) {
  DenseParams z;
  z.W = Matrix(p.W.rows, p.W.cols);
  z.b.assign(p.b.size(), 0.0);
  return z;
}

}  // namespace clcnn
