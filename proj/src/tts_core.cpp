#include "uniflg/tts_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uniflg/io.hpp"
#include "uniflg/length_ops.hpp"
#include "uniflg/mas.hpp"

namespace uniflg::tts {

using nlohmann::json;

#define UNIFLG_TTS_FIELDS(X)                                                                        \
  X(num_phonemes) X(feature_dim) X(g_dim) X(latent_dim) X(hidden) X(kernel) X(text_layers)          \
  X(posterior_layers) X(decoder_layers) X(flow_steps) X(flow_layers) X(utterance_layers)            \
  X(duration_layers) X(prior_uses_g) X(w_recon) X(w_kl) X(w_kl_utt) X(w_dur)

void TtsConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid TTS config: ") + what);
  };
  need(num_phonemes >= 1, "num_phonemes must be >= 1");
  need(feature_dim >= 1, "feature_dim must be >= 1");
  need(g_dim >= 1, "g_dim must be >= 1");
  need(latent_dim >= 2, "latent_dim must be >= 2");
  need(hidden >= 1, "hidden must be >= 1");
  need(kernel >= 1 && kernel % 2 == 1, "kernel must be odd");
  need(text_layers >= 0 && posterior_layers >= 1 && decoder_layers >= 1, "layer counts");
  need(flow_steps >= 0 && flow_layers >= 1, "flow layout");
  need(utterance_layers >= 1 && duration_layers >= 0, "encoder layer counts");
}

void to_json(json& j, const TtsConfig& c) {
  j = json::object();
#define X(f) j[#f] = c.f;
  UNIFLG_TTS_FIELDS(X)
#undef X
  j["mode"] = to_string(c.mode);
}

void from_json(const json& j, TtsConfig& c) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
#define X(f)           \
  if (key == #f) {     \
    value.get_to(c.f); \
    known = true;      \
  }
    UNIFLG_TTS_FIELDS(X)
#undef X
    if (key == "mode") {
      c.mode = cond_mode_from_string(value.get<std::string>());
      known = true;
    }
    if (!known) throw std::invalid_argument("unknown TTS config key '" + key + "'");
  }
}

TtsModel::TtsModel(TtsConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed, {0x7755});
  build(rng);
}

void TtsModel::build(Rng& rng) {
  const int H = cfg_.hidden, D = cfg_.latent_dim, F = cfg_.feature_dim, K = cfg_.kernel;
  const int cond = cfg_.cond_dim();
  embedding_ = &store_.add("text.embedding", cfg_.num_phonemes, H);
  nn::init_uniform(*embedding_, rng, 1.0);
  for (int l = 0; l < cfg_.text_layers; ++l)
    text_convs_.push_back(nn::Conv::make(store_, "text.conv" + std::to_string(l), H, H, K, 1, rng));
  prior_proj_ = nn::Dense::make(store_, "text.proj", H + (cfg_.prior_uses_g ? cfg_.g_dim : 0), 2 * D, rng);

  post_pre_ = nn::Dense::make(store_, "post.pre", F, H, rng);
  post_net_ = nn::WaveNet::make(store_, "post.net", H, cfg_.posterior_layers, K, 1, cond, rng);
  post_proj_ = nn::Dense::make(store_, "post.proj", H, 2 * D, rng);

  const int half = D / 2;
  for (int s = 0; s < cfg_.flow_steps; ++s) {
    const std::string n = "flow." + std::to_string(s);
    Coupling c;
    c.pre = nn::Dense::make(store_, n + ".pre", half, H, rng);
    c.net = nn::WaveNet::make(store_, n + ".net", H, cfg_.flow_layers, K, 1, cond, rng);
    c.post = nn::Dense::make(store_, n + ".post", H, 2 * (D - half), rng, /*zero_init=*/true);
    flow_.push_back(std::move(c));
  }

  for (int l = 0; l < cfg_.utterance_layers; ++l)
    utt_convs_.push_back(nn::Conv::make(store_, "utt.conv" + std::to_string(l), l == 0 ? F : H, H, K, 1, rng));
  utt_proj_ = nn::Dense::make(store_, "utt.proj", H, 2 * kUtteranceLatentDim, rng);

  dur_cond_ = nn::Dense::make(store_, "dur.cond", cond, H, rng);
  for (int l = 0; l < cfg_.duration_layers; ++l)
    dur_convs_.push_back(nn::Conv::make(store_, "dur.conv" + std::to_string(l), H, H, K, 1, rng));
  dur_proj_ = nn::Dense::make(store_, "dur.proj", H, 1, rng);

  dec_pre_ = nn::Dense::make(store_, "dec.pre", D, H, rng);
  dec_net_ = nn::WaveNet::make(store_, "dec.net", H, cfg_.decoder_layers, K, 1, cond, rng);
  dec_proj_ = nn::Dense::make(store_, "dec.proj", H, F, rng);
}

TtsModel::TextVars TtsModel::text_vars(Tape& t, const std::vector<int>& phonemes, Var g) const {
  if (phonemes.empty()) throw std::invalid_argument("text_encode: empty phoneme sequence");
  const int S = static_cast<int>(phonemes.size()), D = cfg_.latent_dim;
  Matrix one_hot_rows(S, cfg_.num_phonemes);
  for (int i = 0; i < S; ++i) {
    if (phonemes[i] < 0 || phonemes[i] >= cfg_.num_phonemes)
      throw std::invalid_argument("text_encode: unknown phoneme id " + std::to_string(phonemes[i]));
    one_hot_rows(i, phonemes[i]) = 1.0;
  }
  Var h = ag::matmul(t.constant(std::move(one_hot_rows)), t.param(*embedding_));
  for (const nn::Conv& c : text_convs_) h = ag::add(h, ag::relu(c(t, h)));
  Var in = cfg_.prior_uses_g ? ag::concat_cols(h, ag::repeat_rows(g, {S})) : h;
  Var stats = prior_proj_(t, in);
  return {h, ag::slice_cols(stats, 0, D), ag::slice_cols(stats, D, 2 * D)};
}

TtsModel::PosteriorVars TtsModel::posterior_vars(Tape& t, Var x, Var cond) const {
  if (x.rows() < 1) throw std::invalid_argument("posterior_encode: empty input");
  if (x.cols() != cfg_.feature_dim)
    throw std::invalid_argument("posterior_encode: expected " + std::to_string(cfg_.feature_dim) + " features");
  const int D = cfg_.latent_dim;
  Var h = post_net_(t, post_pre_(t, x), cond);
  Var stats = post_proj_(t, h);
  return {ag::slice_cols(stats, 0, D), ag::slice_cols(stats, D, 2 * D)};
}

TtsModel::FlowVars TtsModel::flow_vars(Tape& t, Var z, Var cond) const {
  const int D = cfg_.latent_dim, half = D / 2, rest = D - half;
  Var out = z;
  Var logdet = t.constant(Matrix(1, 1));
  for (const Coupling& c : flow_) {
    Var x0 = ag::slice_cols(out, 0, half);
    Var x1 = ag::slice_cols(out, half, D);
    Var st = c.post(t, c.net(t, c.pre(t, x0), cond));
    Var shift = ag::slice_cols(st, 0, rest);
    Var logs = ag::slice_cols(st, rest, 2 * rest);
    Var y1 = ag::add(shift, ag::mul(x1, ag::exp(logs)));
    out = ag::reverse_cols(ag::concat_cols(x0, y1));
    logdet = ag::add(logdet, ag::sum(logs));
  }
  return {out, logdet};
}

Var TtsModel::flow_inverse_var(Tape& t, Var fz, Var cond) const {
  const int D = cfg_.latent_dim, half = D / 2, rest = D - half;
  Var out = fz;
  for (auto it = flow_.rbegin(); it != flow_.rend(); ++it) {
    const Coupling& c = *it;
    out = ag::reverse_cols(out);
    Var x0 = ag::slice_cols(out, 0, half);
    Var y1 = ag::slice_cols(out, half, D);
    Var st = c.post(t, c.net(t, c.pre(t, x0), cond));
    Var shift = ag::slice_cols(st, 0, rest);
    Var logs = ag::slice_cols(st, rest, 2 * rest);
    Var x1 = ag::mul(ag::sub(y1, shift), ag::exp(ag::scale(logs, -1.0)));
    out = ag::concat_cols(x0, x1);
  }
  return out;
}

TtsModel::UttVars TtsModel::utterance_vars(Tape& t, Var x) const {
  if (x.rows() < 1) throw std::invalid_argument("utterance_encode: empty input");
  Var h = x;
  for (const nn::Conv& c : utt_convs_) h = ag::relu(c(t, h));
  Var st = utt_proj_(t, ag::mean_rows(h));
  return {ag::slice_cols(st, 0, kUtteranceLatentDim),
          ag::slice_cols(st, kUtteranceLatentDim, 2 * kUtteranceLatentDim)};
}

Var TtsModel::duration_vars(Tape& t, Var h, Var cond) const {
  Var x = ag::add_row(ag::detach(h), dur_cond_(t, ag::detach(cond)));
  for (const nn::Conv& c : dur_convs_) x = ag::relu(c(t, x));
  return dur_proj_(t, x);
}

Var TtsModel::decoder_vars(Tape& t, Var z, Var cond) const {
  return dec_proj_(t, dec_net_(t, dec_pre_(t, z), cond));
}

Var TtsModel::cond_var(Tape& t, const ConditioningBundle& b) const {
  b.validate(cfg_.g_dim);
  if (b.z_u.rows != 1) throw std::invalid_argument("conditioning bundle lacks z_u");
  return t.constant(b.cond_row());
}

Var TtsModel::loss(Tape& t, const TrainExample& ex, const LossOptions& opt, LossBreakdown* parts,
                   std::vector<int>* durations_out) const {
  const int S = static_cast<int>(ex.phonemes.size()), T = ex.x.rows, D = cfg_.latent_dim;
  if (T < S)
    throw std::invalid_argument("utterance has " + std::to_string(T) + " frames for " + std::to_string(S) +
                                " phonemes; alignment impossible");
  auto noise = [&](const Matrix* given, int r, int c) {
    if (given) {
      if (given->rows != r || given->cols != c) throw std::invalid_argument("loss: noise override shape");
      return *given;
    }
    Matrix m(r, c);
    if (opt.rng)
      for (double& v : m.data) v = opt.rng->normal();
    return m;
  };

  Var g = t.constant(Matrix::from_rows({one_hot(ex.g_index, cfg_.g_dim)}));
  Var x = t.constant(ex.x);

  const UttVars utt = utterance_vars(t, x);
  Var z_u = ag::add(utt.mean, ag::mul(ag::exp(utt.log_scale), t.constant(noise(opt.eps_utt, 1, kUtteranceLatentDim))));
  Var cond = ag::concat_cols(g, z_u);

  const PosteriorVars post = posterior_vars(t, x, cond);
  Var z = ag::add(post.mu, ag::mul(ag::exp(post.log_sigma), t.constant(noise(opt.eps_frame, T, D))));
  const FlowVars flow = flow_vars(t, z, cond);
  const TextVars text = text_vars(t, ex.phonemes, g);

  std::vector<int> d;
  if (opt.forced_durations) {
    d = *opt.forced_durations;
    if (static_cast<int>(d.size()) != S || std::accumulate(d.begin(), d.end(), 0) != T)
      throw std::invalid_argument("loss: forced durations do not cover the utterance");
  } else {
    const PriorStats prior{text.mu.value(), text.log_sigma.value()};
    d = mas::align(mas::loglik_lattice(flow.out.value(), prior)).durations;
  }
  Var mu_e = ag::repeat_rows(text.mu, d);
  Var ls_e = ag::repeat_rows(text.log_sigma, d);

  Var diff = ag::sub(flow.out, mu_e);
  Var kl_terms = ag::add_scalar(ag::sub(ls_e, post.log_sigma), -0.5);
  kl_terms = ag::add(kl_terms, ag::scale(ag::mul(ag::square(diff), ag::exp(ag::scale(ls_e, -2.0))), 0.5));
  Var kl_frame = ag::scale(ag::sub(ag::sum(kl_terms), flow.logdet), 1.0 / T);

  Var kl_u_terms = ag::scale(ag::add_scalar(ag::add(ag::square(utt.mean), ag::exp(ag::scale(utt.log_scale, 2.0))), -1.0), 0.5);
  Var kl_utt = ag::scale(ag::sum(ag::sub(kl_u_terms, utt.log_scale)), 1.0 / T);

  Var recon = ag::mean(ag::abs(ag::sub(decoder_vars(t, z, cond), x)));

  Matrix log_target(S, 1);
  for (int i = 0; i < S; ++i) log_target(i, 0) = std::log(static_cast<double>(d[i]));
  Var dur = ag::mean(ag::square(ag::sub(duration_vars(t, text.h, cond), t.constant(std::move(log_target)))));

  Var total = ag::scale(recon, cfg_.w_recon);
  total = ag::add(total, ag::scale(kl_frame, cfg_.w_kl));
  total = ag::add(total, ag::scale(kl_utt, cfg_.w_kl_utt));
  total = ag::add(total, ag::scale(dur, cfg_.w_dur));

  if (parts) {
    parts->recon = recon.value()(0, 0);
    parts->kl_frame = kl_frame.value()(0, 0);
    parts->kl_utt = kl_utt.value()(0, 0);
    parts->dur = dur.value()(0, 0);
    parts->total = total.value()(0, 0);
  }
  if (durations_out) *durations_out = std::move(d);
  return total;
}

// Value-level API ----------------------------------------------------------

TextEncoding TtsModel::text_encode(const std::vector<int>& phonemes, const ConditioningBundle& bundle) const {
  bundle.validate(cfg_.g_dim);
  Tape t(false);
  const TextVars v = text_vars(t, phonemes, t.constant(Matrix::from_rows({bundle.g})));
  return {v.h.value(), PriorStats{v.mu.value(), v.log_sigma.value()}};
}

PosteriorResult TtsModel::posterior_encode(const Matrix& x, const ConditioningBundle& bundle, Rng* rng,
                                           const Matrix* eps) const {
  Tape t(false);
  const PosteriorVars v = posterior_vars(t, t.constant(x), cond_var(t, bundle));
  PosteriorResult r;
  r.mu = v.mu.value();
  r.log_sigma = v.log_sigma.value();
  r.z.values = r.mu;
  r.z.rate = RateTag::kSpec;
  r.z.space = SpaceTag::kZ;
  if (eps && !eps->same_shape(r.mu)) throw std::invalid_argument("posterior_encode: eps shape mismatch");
  if (eps || rng)
    for (std::size_t i = 0; i < r.mu.data.size(); ++i)
      r.z.values.data[i] += std::exp(r.log_sigma.data[i]) * (eps ? eps->data[i] : rng->normal());
  return r;
}

FlowResult TtsModel::flow_forward(const LatentSequence& z, const ConditioningBundle& bundle) const {
  if (z.space != SpaceTag::kZ) throw std::invalid_argument("flow_forward expects z-space latents");
  if (z.dim() != cfg_.latent_dim) throw std::invalid_argument("flow_forward: latent dim mismatch");
  Tape t(false);
  const FlowVars v = flow_vars(t, t.constant(z.values), cond_var(t, bundle));
  return {LatentSequence{v.out.value(), z.rate, SpaceTag::kFlow}, v.logdet.value()(0, 0)};
}

LatentSequence TtsModel::flow_inverse(const LatentSequence& fz, const ConditioningBundle& bundle) const {
  if (fz.space != SpaceTag::kFlow) throw std::invalid_argument("flow_inverse expects flow-space latents");
  if (fz.dim() != cfg_.latent_dim) throw std::invalid_argument("flow_inverse: latent dim mismatch");
  Tape t(false);
  Var out = flow_inverse_var(t, t.constant(fz.values), cond_var(t, bundle));
  return LatentSequence{out.value(), fz.rate, SpaceTag::kZ};
}

UtteranceLatent TtsModel::utterance_encode(const Matrix& x, Rng* rng) const {
  if (x.cols != cfg_.feature_dim) throw std::invalid_argument("utterance_encode: feature dim mismatch");
  Tape t(false);
  const UttVars v = utterance_vars(t, t.constant(x));
  UtteranceLatent u;
  u.mean = v.mean.value();
  u.log_scale = v.log_scale.value();
  u.sample = u.mean;
  if (rng)
    for (int k = 0; k < kUtteranceLatentDim; ++k) u.sample(0, k) += std::exp(u.log_scale(0, k)) * rng->normal();
  u.kl = kl_standard_normal(u.mean, u.log_scale);
  return u;
}

std::vector<int> TtsModel::duration_predict(const Matrix& h, const ConditioningBundle& bundle,
                                            std::vector<double>* log_durations) const {
  if (h.rows < 1 || h.cols != cfg_.hidden) throw std::invalid_argument("duration_predict: bad text encoding shape");
  Tape t(false);
  const Matrix& logd = duration_vars(t, t.constant(h), cond_var(t, bundle)).value();
  std::vector<int> d(h.rows);
  if (log_durations) log_durations->assign(logd.data.begin(), logd.data.end());
  for (int i = 0; i < h.rows; ++i) {
    const double v = std::exp(std::min(logd(i, 0), 20.0));
    d[i] = std::max(1, static_cast<int>(std::lround(v)));
  }
  return d;
}

SpectralFrames TtsModel::feature_decode(const LatentSequence& z, const ConditioningBundle& bundle) const {
  if (z.rate != RateTag::kSpec) throw std::invalid_argument("feature_decode expects spec-rate latents");
  if (z.space != SpaceTag::kZ) throw std::invalid_argument("feature_decode expects z-space latents");
  Tape t(false);
  return SpectralFrames{decoder_vars(t, t.constant(z.values), cond_var(t, bundle)).value()};
}

std::vector<int> TtsModel::align(const std::vector<int>& phonemes, const Matrix& x,
                                 const ConditioningBundle& bundle) const {
  const PosteriorResult post = posterior_encode(x, bundle, nullptr);
  const FlowResult fz = flow_forward(post.z, bundle);
  const TextEncoding enc = text_encode(phonemes, bundle);
  return mas::align(mas::loglik_lattice(fz.out.values, enc.prior)).durations;
}

ConditioningBundle TtsModel::bundle_for(int g_index, const Matrix* x, Rng* rng) const {
  ConditioningBundle b;
  b.mode = cfg_.mode;
  b.g = one_hot(g_index, cfg_.g_dim);
  if (x) {
    const UtteranceLatent u = utterance_encode(*x, rng);
    b.z_u = u.sample;
    b.z_u_mean = u.mean;
    b.z_u_scale = u.log_scale;
    for (double& v : b.z_u_scale.data) v = std::exp(v);
  } else {
    b.z_u = Matrix(1, kUtteranceLatentDim);
    if (rng)
      for (double& v : b.z_u.data) v = rng->normal();
  }
  return b;
}

void TtsModel::save(const std::filesystem::path& path, const json& extra) const {
  json j;
  j["kind"] = "tts";
  j["config"] = cfg_;
  if (!extra.is_null()) j["extra"] = extra;
  io::save_checkpoint(path, store_, j.dump());
}

std::unique_ptr<TtsModel> TtsModel::load(const std::filesystem::path& path) {
  const io::Checkpoint ck = io::read_checkpoint(path);
  const json j = json::parse(ck.config_json);
  if (j.value("kind", "") != "tts") throw std::runtime_error(path.string() + " is not a TTS checkpoint");
  auto model = std::make_unique<TtsModel>(j.at("config").get<TtsConfig>(), 0);
  io::load_into(ck, model->params());
  return model;
}

PriorStats expand(const PriorStats& prior, const std::vector<int>& durations) {
  return PriorStats{expand_rows(prior.mu, durations), expand_rows(prior.log_sigma, durations)};
}

double kl_standard_normal(const Matrix& mu, const Matrix& log_sigma) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.data.size(); ++i)
    kl += 0.5 * (mu.data[i] * mu.data[i] + std::exp(2.0 * log_sigma.data[i]) - 1.0) - log_sigma.data[i];
  return kl;
}

std::vector<TtsStepLog> train_tts(TtsModel& model, const std::vector<TrainExample>& examples,
                                  const TtsTrainConfig& cfg, const std::function<void(const TtsStepLog&)>& on_step) {
  if (examples.empty()) throw std::invalid_argument("train_tts: no training utterances");
  if (cfg.batch < 1) throw std::invalid_argument("train_tts: batch must be >= 1");
  nn::AdamW opt(model.params(), cfg.optim);
  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  int epoch = -1;
  std::vector<TtsStepLog> logs;
  for (int step = 0; step < cfg.steps; ++step) {
    TtsStepLog log;
    log.step = step;
    Rng noise(cfg.seed, {1, static_cast<std::uint64_t>(step)});
    for (int b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        ++epoch;
        opt.set_epoch(epoch);
        Rng shuffle(cfg.seed, {2, static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[shuffle.uniform_int(0, static_cast<int>(i) - 1)]);
        cursor = 0;
      }
      const TrainExample& ex = examples[order[cursor++]];
      Tape t;
      LossBreakdown parts;
      LossOptions lo;
      lo.rng = &noise;
      Var l = model.loss(t, ex, lo, &parts);
      if (!std::isfinite(parts.total))
        throw std::runtime_error("non-finite TTS loss at step " + std::to_string(step) + " (recon " +
                                 std::to_string(parts.recon) + ", kl_frame " + std::to_string(parts.kl_frame) +
                                 ", kl_utt " + std::to_string(parts.kl_utt) + ", dur " + std::to_string(parts.dur) + ")");
      t.backward(ag::scale(l, 1.0 / cfg.batch));
      log.loss.recon += parts.recon / cfg.batch;
      log.loss.kl_frame += parts.kl_frame / cfg.batch;
      log.loss.kl_utt += parts.kl_utt / cfg.batch;
      log.loss.dur += parts.dur / cfg.batch;
      log.loss.total += parts.total / cfg.batch;
    }
    log.lr = opt.current_lr();
    log.grad_norm = opt.step();
    if (on_step) on_step(log);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace uniflg::tts
