#pragma once

// Text/speech latent chain: text encoder with per-token Gaussian prior,
// posterior encoder, affine-coupling flow, utterance-level VAE encoder,
// log-domain duration predictor and a spectral feature decoder.
//
// Per-utterance training loss:
//   recon    mean |decode(z) - x|
//   kl_frame (sum over frames/dims of
//             logs_p - logs_q - 1/2 + 1/2 (f(z) - mu_p)^2 exp(-2 logs_p)
//             minus the flow log-determinant) / T
//   kl_utt   KL(q(z_u | x) || N(0, I)) / T
//   dur      mean (log_dur_pred - log d_mas)^2
// with the prior expanded by monotonic-alignment durations computed on
// detached values.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "uniflg/nn.hpp"
#include "uniflg/types.hpp"

namespace uniflg::tts {

struct TtsConfig {
  int num_phonemes = 12;
  int feature_dim = 16;
  int g_dim = 6;           // one-hot width: speakers (standard) or emotions (AS)
  int latent_dim = 8;
  int hidden = 32;
  int kernel = 3;
  int text_layers = 3;
  int posterior_layers = 4;
  int decoder_layers = 4;
  int flow_steps = 4;
  int flow_layers = 2;
  int utterance_layers = 2;
  int duration_layers = 2;
  /// Adds the one-hot g to the prior projection input. Off by default: the
  /// text encoder and prior stay speaker-independent.
  bool prior_uses_g = false;
  CondMode mode = CondMode::kStandard;
  double w_recon = 10.0;
  double w_kl = 1.0;
  double w_kl_utt = 1.0;
  double w_dur = 1.0;

  int cond_dim() const { return g_dim + kUtteranceLatentDim; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TtsConfig& c);
void from_json(const nlohmann::json& j, TtsConfig& c);

struct TextEncoding {
  Matrix h;  // S x hidden
  PriorStats prior;
};

struct PosteriorResult {
  LatentSequence z;  // spec rate, z space
  Matrix mu;         // T x D
  Matrix log_sigma;  // T x D
};

struct FlowResult {
  LatentSequence out;
  double logdet = 0.0;  // sum over frames and dims
};

struct UtteranceLatent {
  Matrix mean;       // 1 x 16
  Matrix log_scale;  // 1 x 16
  Matrix sample;     // 1 x 16
  double kl = 0.0;   // KL to N(0, I)
};

struct LossBreakdown {
  double recon = 0, kl_frame = 0, kl_utt = 0, dur = 0, total = 0;
};

/// One utterance as seen by the model.
struct TrainExample {
  std::vector<int> phonemes;
  Matrix x;  // T x F spectral frames
  int g_index = 0;
};

/// Noise and alignment overrides for loss evaluation. Unset noise matrices
/// are drawn from `rng`; a null rng means zero noise.
struct LossOptions {
  Rng* rng = nullptr;
  const Matrix* eps_frame = nullptr;  // T x D
  const Matrix* eps_utt = nullptr;    // 1 x 16
  const std::vector<int>* forced_durations = nullptr;
};

class TtsModel {
 public:
  TtsModel(TtsConfig cfg, std::uint64_t seed);
  TtsModel(const TtsModel&) = delete;
  TtsModel& operator=(const TtsModel&) = delete;

  const TtsConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // Differentiable building blocks ------------------------------------------
  struct TextVars {
    Var h, mu, log_sigma;
  };
  TextVars text_vars(Tape& t, const std::vector<int>& phonemes, Var g) const;
  struct PosteriorVars {
    Var mu, log_sigma;
  };
  PosteriorVars posterior_vars(Tape& t, Var x, Var cond) const;
  struct FlowVars {
    Var out, logdet;  // logdet is 1 x 1
  };
  FlowVars flow_vars(Tape& t, Var z, Var cond) const;
  Var flow_inverse_var(Tape& t, Var fz, Var cond) const;
  struct UttVars {
    Var mean, log_scale;
  };
  UttVars utterance_vars(Tape& t, Var x) const;
  Var duration_vars(Tape& t, Var h, Var cond) const;  // S x 1 log durations
  Var decoder_vars(Tape& t, Var z, Var cond) const;

  /// Total weighted loss of one utterance on `t`.
  Var loss(Tape& t, const TrainExample& ex, const LossOptions& opt, LossBreakdown* parts = nullptr,
           std::vector<int>* durations = nullptr) const;

  // Value-level operations (no gradients) -----------------------------------
  TextEncoding text_encode(const std::vector<int>& phonemes, const ConditioningBundle& bundle) const;
  /// eps == nullptr draws from rng; rng == nullptr as well means eps = 0.
  PosteriorResult posterior_encode(const Matrix& x, const ConditioningBundle& bundle, Rng* rng,
                                   const Matrix* eps = nullptr) const;
  FlowResult flow_forward(const LatentSequence& z, const ConditioningBundle& bundle) const;
  LatentSequence flow_inverse(const LatentSequence& fz, const ConditioningBundle& bundle) const;
  /// rng == nullptr returns the mean as the sample.
  UtteranceLatent utterance_encode(const Matrix& x, Rng* rng) const;
  /// Rounded durations, each >= 1, and the raw log predictions.
  std::vector<int> duration_predict(const Matrix& h, const ConditioningBundle& bundle,
                                    std::vector<double>* log_durations = nullptr) const;
  SpectralFrames feature_decode(const LatentSequence& z, const ConditioningBundle& bundle) const;

  /// MAS durations of `x` against the prior of `phonemes` using the
  /// posterior mean.
  std::vector<int> align(const std::vector<int>& phonemes, const Matrix& x, const ConditioningBundle& bundle) const;

  /// Bundle from g index plus a z_u (posterior mean of x when given).
  ConditioningBundle bundle_for(int g_index, const Matrix* x, Rng* rng = nullptr) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static std::unique_ptr<TtsModel> load(const std::filesystem::path& path);

 private:
  void build(Rng& rng);
  Var cond_var(Tape& t, const ConditioningBundle& b) const;

  TtsConfig cfg_;
  nn::ParamStore store_;
  Parameter* embedding_ = nullptr;
  std::vector<nn::Conv> text_convs_;
  nn::Dense prior_proj_;
  nn::Dense post_pre_, post_proj_;
  nn::WaveNet post_net_;
  struct Coupling {
    nn::Dense pre, post;
    nn::WaveNet net;
  };
  std::vector<Coupling> flow_;
  std::vector<nn::Conv> utt_convs_;
  nn::Dense utt_proj_;
  nn::Dense dur_cond_;
  std::vector<nn::Conv> dur_convs_;
  nn::Dense dur_proj_;
  nn::Dense dec_pre_, dec_proj_;
  nn::WaveNet dec_net_;
};

/// Expands per-token stats: token i repeated d_i times.
PriorStats expand(const PriorStats& prior, const std::vector<int>& durations);

/// Analytic KL(N(mu, exp(2 log_sigma)) || N(0, I)) summed over entries.
double kl_standard_normal(const Matrix& mu, const Matrix& log_sigma);

struct TtsTrainConfig {
  int steps = 2000;
  int batch = 8;
  std::uint64_t seed = 0;
  nn::AdamWConfig optim{};
  int log_every = 100;
};

struct TtsStepLog {
  int step = 0;
  LossBreakdown loss;  // batch mean
  double grad_norm = 0;
  double lr = 0;
};

/// Trains on `examples` (a seeded shuffled pass per epoch). Throws
/// std::runtime_error on a non-finite loss. `on_step` sees every step.
std::vector<TtsStepLog> train_tts(TtsModel& model, const std::vector<TrainExample>& examples,
                                  const TtsTrainConfig& cfg,
                                  const std::function<void(const TtsStepLog&)>& on_step = {});

}  // namespace uniflg::tts
