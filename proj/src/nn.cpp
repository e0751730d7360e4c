#include "uniflg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace uniflg::nn {

Parameter& ParamStore::add(std::string name, int rows, int cols) {
  if (find(name) != nullptr) throw std::logic_error("ParamStore: duplicate parameter " + name);
  Parameter& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = Matrix(rows, cols);
  p.grad = Matrix(rows, cols);
  return p;
}

Parameter* ParamStore::find(std::string_view name) {
  for (Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParamStore::find(std::string_view name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::zero_grad() {
  for (Parameter& p : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const Parameter& p : params_)
    for (double g : p.grad.data) s += g * g;
  return std::sqrt(s);
}

void ParamStore::scale_grad(double factor) {
  for (Parameter& p : params_) p.grad *= factor;
}

void init_uniform(Parameter& p, Rng& rng, double bound) {
  for (double& v : p.value.data) v = rng.uniform(-bound, bound);
}

Dense Dense::make(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                  bool zero_init) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w = &store.add(name + ".w", in, out);
  d.b = &store.add(name + ".b", 1, out);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    init_uniform(*d.w, rng, bound);
    init_uniform(*d.b, rng, bound);
  }
  return d;
}

Var Dense::operator()(Tape& t, Var x) const {
  return ag::linear(x, t.param(*w), t.param(*b));
}

Conv Conv::make(ParamStore& store, const std::string& name, int in, int out, int kernel,
                int dilation, Rng& rng) {
  Conv c;
  c.in = in;
  c.out = out;
  c.kernel = kernel;
  c.dilation = dilation;
  c.w = &store.add(name + ".w", kernel * in, out);
  c.b = &store.add(name + ".b", 1, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(kernel * in));
  init_uniform(*c.w, rng, bound);
  init_uniform(*c.b, rng, bound);
  return c;
}

Var Conv::operator()(Tape& t, Var x) const {
  return ag::conv1d(x, t.param(*w), t.param(*b), kernel, dilation);
}

WaveNet WaveNet::make(ParamStore& store, const std::string& name, int channels, int layers,
                      int kernel, int dilation, int cond_dim, Rng& rng) {
  if (channels < 1 || layers < 1) throw std::invalid_argument("WaveNet: empty configuration");
  WaveNet wn;
  wn.channels = channels;
  wn.layers = layers;
  wn.kernel = kernel;
  wn.dilation = dilation;
  wn.cond_dim = cond_dim;
  for (int l = 0; l < layers; ++l) {
    const std::string ln = name + "." + std::to_string(l);
    wn.in_convs.push_back(Conv::make(store, ln + ".in", channels, 2 * channels, kernel, dilation, rng));
    const int rs_out = l + 1 < layers ? 2 * channels : channels;
    wn.res_skip.push_back(Dense::make(store, ln + ".res_skip", channels, rs_out, rng));
  }
  if (cond_dim > 0) wn.cond_proj = Dense::make(store, name + ".cond", cond_dim, 2 * channels * layers, rng);
  return wn;
}

Var WaveNet::operator()(Tape& t, Var x, Var cond) const {
  if (x.cols() != channels)
    throw std::invalid_argument("WaveNet: input has " + std::to_string(x.cols()) +
                                " channels, expected " + std::to_string(channels));
  Var g;
  if (cond_dim > 0) {
    if (!cond.valid() || cond.rows() != 1 || cond.cols() != cond_dim)
      throw std::invalid_argument("WaveNet: conditioning must be 1 x " + std::to_string(cond_dim));
    g = cond_proj(t, cond);
  }
  Var h = x;
  Var skip;
  for (int l = 0; l < layers; ++l) {
    Var a = in_convs[l](t, h);
    if (g.valid()) a = ag::add_row(a, ag::slice_cols(g, 2 * channels * l, 2 * channels * (l + 1)));
    Var z = ag::mul(ag::tanh(ag::slice_cols(a, 0, channels)),
                    ag::sigmoid(ag::slice_cols(a, channels, 2 * channels)));
    Var rs = res_skip[l](t, z);
    Var s;
    if (l + 1 < layers) {
      h = ag::add(h, ag::slice_cols(rs, 0, channels));
      s = ag::slice_cols(rs, channels, 2 * channels);
    } else {
      s = rs;
    }
    skip = skip.valid() ? ag::add(skip, s) : s;
  }
  return skip;
}

AdamW::AdamW(ParamStore& store, AdamWConfig cfg) : store_(store), cfg_(cfg), lr_(cfg.lr) {
  for (const Parameter& p : store_.all()) {
    m_.emplace_back(p.value.rows, p.value.cols);
    v_.emplace_back(p.value.rows, p.value.cols);
  }
}

void AdamW::set_epoch(int epoch) { lr_ = cfg_.lr * std::pow(cfg_.lr_decay, epoch); }

double AdamW::step() {
  const double norm = store_.grad_norm();
  if (!std::isfinite(norm)) throw std::runtime_error("AdamW: non-finite gradient norm");
  if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) store_.scale_grad(cfg_.clip_norm / norm);
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  std::size_t i = 0;
  for (Parameter& p : store_.all()) {
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    ++i;
    const double decay = 1.0 - lr_ * cfg_.weight_decay;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      m.data[k] = cfg_.beta1 * m.data[k] + (1.0 - cfg_.beta1) * g;
      v.data[k] = cfg_.beta2 * v.data[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.value.data[k] = p.value.data[k] * decay - lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.grad.fill(0.0);
  }
  return norm;
}

}  // namespace uniflg::nn
