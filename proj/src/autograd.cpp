#include "uniflg/autograd.hpp"

#include <cmath>
#include <stdexcept>

#include "uniflg/simd/kernels.hpp"

namespace uniflg {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: uninitialized handle");
  return tape_->value(id_);
}

Var Tape::constant(Matrix m) {
  Node n;
  n.own = std::move(m);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  if (record_grad_) {
    n.needs_grad = true;
    n.param = &p;
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackFn back) {
  Node n;
  n.own = std::move(value);
  if (record_grad_) {
    for (const Var& in : inputs) {
      if (in.tape() != this) throw std::logic_error("Tape::push: input from a different tape");
      if (nodes_[in.id()].needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.own;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Matrix& v = value(id);
    n.grad = Matrix(v.rows, v.cols);
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!record_grad_) throw std::logic_error("Tape::backward on a non-recording tape");
  if (loss.tape() != this) throw std::logic_error("Tape::backward: foreign variable");
  const Matrix& lv = value(loss.id());
  if (lv.rows != 1 || lv.cols != 1) throw std::invalid_argument("Tape::backward: loss must be 1x1");
  if (!nodes_[loss.id()].needs_grad) return;
  grad(loss.id())(0, 0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.back) n.back(*this, id);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.empty() || !p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
      p.grad += n.grad;
    }
  }
}

namespace ag {
namespace {

void require_same(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape " + shape_string(a) + " vs " +
                                shape_string(b));
}

template <class F, class D>
Var unary(Var a, F f, D df) {
  const Matrix& av = a.value();
  Matrix out(av.rows, av.cols);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = f(av.data[i]);
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai, df](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ai);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * df(x.data[i], y.data[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const int ai = a.id(), bi = b.id();
  Matrix out = uniflg::matmul(a.value(), b.value());
  return a.tape()->push(std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(ai);
    const Matrix& bv = t.value(bi);
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad(ai);
      simd::gemm_nt(av.rows, av.cols, g.cols, g.data.data(), g.cols, bv.data.data(), bv.cols,
                    ga.data.data(), ga.cols);
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad(bi);
      simd::gemm_tn(bv.rows, bv.cols, av.rows, av.data.data(), av.cols, g.data.data(), g.cols,
                    gb.data.data(), gb.cols);
    }
  });
}

Var linear(Var x, Var w, Var b) { return conv1d(x, w, b, 1, 1); }

Var conv1d(Var x, Var w, Var b, int kernel, int dilation) {
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  const int len = xv.rows, cin = xv.cols, cout = wv.cols;
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("conv1d: kernel must be odd");
  if (wv.rows != kernel * cin)
    throw std::invalid_argument("conv1d: weight " + shape_string(wv) + " does not match input " +
                                shape_string(xv) + " with kernel " + std::to_string(kernel));
  if (bv.rows != 1 || bv.cols != cout) throw std::invalid_argument("conv1d: bias shape");
  Matrix out(len, cout);
  for (int t = 0; t < len; ++t) std::copy(bv.data.begin(), bv.data.end(), out.row_ptr(t));
  const int half = kernel / 2;
  for (int k = 0; k < kernel; ++k) {
    const int off = (k - half) * dilation;
    const int t0 = std::max(0, -off), t1 = std::min(len, len - off);
    if (t1 <= t0) continue;
    simd::gemm_nn(t1 - t0, cout, cin, xv.row_ptr(t0 + off), cin, wv.row_ptr(k * cin), cout,
                  out.row_ptr(t0), cout);
  }
  const int xi = x.id(), wi = w.id(), bi = b.id();
  return x.tape()->push(std::move(out), {x, w, b},
                        [xi, wi, bi, kernel, dilation](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value(xi);
    const Matrix& wv = t.value(wi);
    const int len = xv.rows, cin = xv.cols, cout = wv.cols;
    const int half = kernel / 2;
    const bool gx = t.needs_grad(xi), gw = t.needs_grad(wi);
    for (int k = 0; k < kernel; ++k) {
      const int off = (k - half) * dilation;
      const int t0 = std::max(0, -off), t1 = std::min(len, len - off);
      if (t1 <= t0) continue;
      if (gx) {
        Matrix& gxv = t.grad(xi);
        simd::gemm_nt(t1 - t0, cin, cout, g.row_ptr(t0), cout, wv.row_ptr(k * cin), cout,
                      gxv.row_ptr(t0 + off), cin);
      }
      if (gw) {
        Matrix& gwv = t.grad(wi);
        simd::gemm_tn(cin, cout, t1 - t0, xv.row_ptr(t0 + off), cin, g.row_ptr(t0), cout,
                      gwv.row_ptr(k * cin), cout);
      }
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad(bi);
      simd::column_sums(g.rows, g.cols, g.data.data(), g.cols, gb.data.data());
    }
  });
}

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  const int ai = a.id(), bi = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ai)) t.grad(ai) += g;
    if (t.needs_grad(bi)) t.grad(bi) += g;
  });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  Matrix out = a.value();
  simd::axpy(-1.0, b.value().data.data(), out.data.data(), out.size());
  const int ai = a.id(), bi = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ai)) t.grad(ai) += g;
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad(bi);
      simd::axpy(-1.0, g.data.data(), gb.data.data(), g.size());
    }
  });
}

Var mul(Var a, Var b) {
  require_same(a.value(), b.value(), "mul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
  const int ai = a.id(), bi = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ai)) {
      const Matrix& bv = t.value(bi);
      Matrix& ga = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * bv.data[i];
    }
    if (t.needs_grad(bi)) {
      const Matrix& av = t.value(ai);
      Matrix& gb = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * av.data[i];
    }
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  out *= s;
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai, s](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    simd::axpy(s, g.data.data(), ga.data.data(), g.size());
  });
}

Var add_scalar(Var a, double s) {
  Matrix out = a.value();
  for (double& v : out.data) v += s;
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai](Tape& t, int self) { t.grad(ai) += t.grad(self); });
}

Var add_row(Var a, Var r) {
  const Matrix& av = a.value();
  const Matrix& rv = r.value();
  if (rv.rows != 1 || rv.cols != av.cols)
    throw std::invalid_argument("add_row: " + shape_string(rv) + " vs " + shape_string(av));
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) simd::axpy(1.0, rv.data.data(), out.row_ptr(i), out.cols);
  const int ai = a.id(), ri = r.id();
  return a.tape()->push(std::move(out), {a, r}, [ai, ri](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ai)) t.grad(ai) += g;
    if (t.needs_grad(ri)) {
      Matrix& gr = t.grad(ri);
      simd::column_sums(g.rows, g.cols, g.data.data(), g.cols, gr.data.data());
    }
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sum(Var a) {
  const Matrix& av = a.value();
  double s = 0.0;
  for (double v : av.data) s += v;
  const int ai = a.id();
  return a.tape()->push(Matrix(1, 1, s), {a}, [ai](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad(ai).data) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(Var a) {
  const Matrix& av = a.value();
  if (av.rows == 0) throw std::invalid_argument("mean_rows: empty input");
  Matrix out(1, av.cols);
  simd::column_sums(av.rows, av.cols, av.data.data(), av.cols, out.data.data());
  out *= 1.0 / av.rows;
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    const double inv = 1.0 / ga.rows;
    for (int r = 0; r < ga.rows; ++r) simd::axpy(inv, g.data.data(), ga.row_ptr(r), ga.cols);
  });
}

Var slice_cols(Var a, int begin, int end) {
  const Matrix& av = a.value();
  if (begin < 0 || end > av.cols || begin >= end) throw std::invalid_argument("slice_cols: range");
  Matrix out(av.rows, end - begin);
  for (int r = 0; r < av.rows; ++r)
    std::copy(av.row_ptr(r) + begin, av.row_ptr(r) + end, out.row_ptr(r));
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai, begin](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    for (int r = 0; r < g.rows; ++r) simd::axpy(1.0, g.row_ptr(r), ga.row_ptr(r) + begin, g.cols);
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows != bv.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix out(av.rows, av.cols + bv.cols);
  for (int r = 0; r < av.rows; ++r) {
    std::copy(av.row_ptr(r), av.row_ptr(r) + av.cols, out.row_ptr(r));
    std::copy(bv.row_ptr(r), bv.row_ptr(r) + bv.cols, out.row_ptr(r) + av.cols);
  }
  const int ai = a.id(), bi = b.id(), split = av.cols;
  return a.tape()->push(std::move(out), {a, b}, [ai, bi, split](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ai)) {
      Matrix& ga = t.grad(ai);
      for (int r = 0; r < g.rows; ++r) simd::axpy(1.0, g.row_ptr(r), ga.row_ptr(r), ga.cols);
    }
    if (t.needs_grad(bi)) {
      Matrix& gb = t.grad(bi);
      for (int r = 0; r < g.rows; ++r)
        simd::axpy(1.0, g.row_ptr(r) + split, gb.row_ptr(r), gb.cols);
    }
  });
}

Var reverse_cols(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows, av.cols);
  for (int r = 0; r < av.rows; ++r)
    for (int c = 0; c < av.cols; ++c) out(r, c) = av(r, av.cols - 1 - c);
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) ga(r, c) += g(r, g.cols - 1 - c);
  });
}

Var repeat_rows(Var a, const std::vector<int>& counts) {
  const Matrix& av = a.value();
  if (static_cast<int>(counts.size()) != av.rows)
    throw std::invalid_argument("repeat_rows: counts size does not match rows");
  int total = 0;
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument("repeat_rows: negative count");
    total += c;
  }
  Matrix out(total, av.cols);
  int row = 0;
  for (int i = 0; i < av.rows; ++i)
    for (int k = 0; k < counts[i]; ++k, ++row)
      std::copy(av.row_ptr(i), av.row_ptr(i) + av.cols, out.row_ptr(row));
  const int ai = a.id();
  return a.tape()->push(std::move(out), {a}, [ai, counts](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    int row = 0;
    for (int i = 0; i < ga.rows; ++i)
      for (int k = 0; k < counts[i]; ++k, ++row) simd::axpy(1.0, g.row_ptr(row), ga.row_ptr(i), ga.cols);
  });
}

Var detach(Var a) { return a.tape()->constant(a.value()); }

}  // namespace ag
}  // namespace uniflg
