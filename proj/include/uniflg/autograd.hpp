#pragma once

// Minimal reverse-mode automatic differentiation over Matrix values.
//
// A Tape records every operation of one forward pass. Var is a lightweight
// handle (tape pointer + node index). Calling Tape::backward on a 1x1 loss
// propagates gradients to every node and accumulates them into the bound
// Parameter::grad buffers. A tape built with record_grad = false skips all
// bookkeeping and is used for inference.

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "uniflg/tensor.hpp"

namespace uniflg {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_grad_; }

  Var constant(Matrix m);
  /// Leaf bound to a parameter. The value is referenced, not copied.
  Var param(Parameter& p);
  /// Registers an op output. `back` is dropped when no input needs a gradient.
  Var push(Matrix value, std::initializer_list<Var> inputs, BackFn back);

  /// Seeds d(loss)/d(loss) = 1 and runs the recorded backward closures.
  void backward(Var loss);

  const Matrix& value(int id) const;
  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Matrix& grad(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    BackFn back;
  };
  bool record_grad_;
  std::deque<Node> nodes_;
};

namespace ag {

Var matmul(Var a, Var b);
/// x * w + b with b a 1 x out row broadcast over rows.
Var linear(Var x, Var w, Var b);
/// Non-causal ("same") 1-D convolution over rows. x: T x in, w: (kernel*in) x out
/// with the k-th in x out block applied at time offset (k - kernel/2) * dilation.
Var conv1d(Var x, Var w, Var b, int kernel, int dilation);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a (T x C) + r (1 x C) broadcast over rows.
Var add_row(Var a, Var r);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var square(Var a);
Var abs(Var a);

/// 1 x 1 sum of all entries.
Var sum(Var a);
Var mean(Var a);
/// 1 x C mean over rows.
Var mean_rows(Var a);

Var slice_cols(Var a, int begin, int end);
Var concat_cols(Var a, Var b);
Var reverse_cols(Var a);
/// Row i of a is repeated counts[i] times, order preserved.
Var repeat_rows(Var a, const std::vector<int>& counts);
/// Gradient stop: same value, no backward edge.
Var detach(Var a);

}  // namespace ag

}  // namespace uniflg
