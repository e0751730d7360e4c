#pragma once

#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "uniflg/autograd.hpp"
#include "uniflg/rng.hpp"

namespace uniflg::nn {

/// Owns a model's parameters. Addresses are stable (deque), so layers keep
/// raw pointers into the store; models holding a store are therefore
/// non-copyable.
class ParamStore {
 public:
  Parameter& add(std::string name, int rows, int cols);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  void zero_grad();
  std::size_t scalar_count() const;
  double grad_norm() const;
  /// Multiplies every gradient by `factor`.
  void scale_grad(double factor);

 private:
  std::deque<Parameter> params_;
};

/// Fills with U(-bound, bound).
void init_uniform(Parameter& p, Rng& rng, double bound);

/// Row-wise affine map x * w + b.
struct Dense {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  int in = 0;
  int out = 0;

  static Dense make(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                    bool zero_init = false);
  Var operator()(Tape& t, Var x) const;
};

struct Conv {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  int in = 0;
  int out = 0;
  int kernel = 1;
  int dilation = 1;

  static Conv make(ParamStore& store, const std::string& name, int in, int out, int kernel,
                   int dilation, Rng& rng);
  Var operator()(Tape& t, Var x) const;
};

/// Non-causal gated WaveNet stack with optional global conditioning.
/// Each layer: a = conv(h) + proj_l(cond); z = tanh(a[:C]) * sigmoid(a[C:]);
/// residual/skip 1x1 split; the last layer emits skip only. Returns the sum of
/// skip outputs (T x channels).
struct WaveNet {
  int channels = 0;
  int layers = 0;
  int kernel = 1;
  int dilation = 1;
  int cond_dim = 0;
  std::vector<Conv> in_convs;
  std::vector<Dense> res_skip;
  Dense cond_proj;

  static WaveNet make(ParamStore& store, const std::string& name, int channels, int layers,
                      int kernel, int dilation, int cond_dim, Rng& rng);
  /// `cond` is a 1 x cond_dim row, ignored (may be default-constructed) when cond_dim == 0.
  Var operator()(Tape& t, Var x, Var cond) const;
  /// Frames on each side that can influence one output frame.
  int receptive_half_width() const { return layers * dilation * (kernel - 1) / 2; }
};

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-9;
  double weight_decay = 0.01;
  /// lr is multiplied by lr_decay once per epoch.
  double lr_decay = 0.999875;
  /// Global gradient-norm clip; <= 0 disables.
  double clip_norm = 0.0;
};

class AdamW {
 public:
  AdamW(ParamStore& store, AdamWConfig cfg);
  /// Applies one update from the accumulated gradients, then zeroes them.
  /// Returns the pre-clip gradient norm.
  double step();
  void set_epoch(int epoch);
  double current_lr() const { return lr_; }
  const AdamWConfig& config() const { return cfg_; }
  long steps() const { return steps_; }

 private:
  ParamStore& store_;
  AdamWConfig cfg_;
  double lr_;
  long steps_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace uniflg::nn
