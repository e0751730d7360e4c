#pragma once

// Landmark decoder: 1x1 projection, non-causal gated WaveNet with a global
// condition fed to every layer, 1x1 projection to 2N coordinates. Trained on
// top of a frozen TTS core with the input switching between text-derived and
// speech-derived landmark-rate latents.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "uniflg/nn.hpp"
#include "uniflg/tts_core.hpp"
#include "uniflg/types.hpp"

namespace uniflg::landmark {

enum class TrainMode {
  kMixed,   // alternate text / speech latents
  kText,    // text-only (TTL)
  kSpeech,  // speech-only (STL)
  kDirect,  // spectral features, no latent chain (STL-D)
};
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);  // mixed | ttl | stl | stl-d

enum class Modality { kText, kSpeech, kDirect };
std::string to_string(Modality m);

struct DecoderConfig {
  int layers = 16;
  int channels = 192;
  int kernel = 5;
  int dilation = 1;
  int global_cond_dim = 16;  // z_u width (standard) or emotion count (AS)
  int input_dim = 8;         // latent dim, or feature dim for direct input
  int num_points = 20;
  std::vector<int> lip_indices;
  double land_fps = 20.0;
  TrainMode mode = TrainMode::kMixed;
  CondMode cond_mode = CondMode::kStandard;

  int receptive_half_width() const { return layers * dilation * (kernel - 1) / 2; }
  void validate() const;
};

void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);

class LandmarkDecoder {
 public:
  LandmarkDecoder(DecoderConfig cfg, std::uint64_t seed);
  LandmarkDecoder(const LandmarkDecoder&) = delete;
  LandmarkDecoder& operator=(const LandmarkDecoder&) = delete;

  const DecoderConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  /// T x input_dim, 1 x global_cond_dim -> T x 2N.
  Var forward(Tape& t, Var input, Var global) const;

  /// Landmark-rate flow-space latents -> landmarks of the same length.
  LandmarkSequence decode_landmarks(const LatentSequence& f_land, const Matrix& global) const;
  /// Direct-input decoder on landmark-rate spectral features.
  LandmarkSequence decode_direct(const Matrix& x_land, const Matrix& global) const;

  /// Global vector the decoder expects from a bundle: z_u (standard) or g (AS).
  Matrix global_from(const ConditioningBundle& b) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static std::unique_ptr<LandmarkDecoder> load(const std::filesystem::path& path);

 private:
  LandmarkSequence run(const Matrix& input, const Matrix& global) const;

  DecoderConfig cfg_;
  nn::ParamStore store_;
  nn::Dense pre_, post_;
  nn::WaveNet net_;
};

/// Everything landmark training needs from one paired utterance, computed
/// once with the frozen TTS core.
struct CachedUtterance {
  std::string id;
  Matrix target;           // T_land x 2N
  Matrix global;           // 1 x global_cond_dim
  LatentSequence speech;   // landmark rate, flow space: resampled f(posterior mean)
  PriorStats text_prior;   // per token
  std::vector<int> d_spec; // MAS durations
  std::vector<int> d_land;
  Matrix direct;           // spectral frames resampled to T_land
};

/// `g_index` is the TTS one-hot index (speaker, or emotion in AS mode).
CachedUtterance prepare_utterance(const tts::TtsModel& tts, const std::string& id,
                                  const std::vector<int>& phonemes, const Matrix& x, const Matrix& target,
                                  int g_index, double ratio);

/// Decoder input for one modality. The text path samples the expanded prior
/// at `temperature` (rng == nullptr gives the mean).
LatentSequence make_training_latents(const CachedUtterance& u, Modality modality, Rng* rng,
                                     double temperature = 1.0);

/// Modality used at `step`: mixed alternates text (even) and speech (odd),
/// or draws uniformly from `rng` when `random_switch` is set.
Modality modality_for_step(TrainMode mode, int step, bool random_switch = false, Rng* rng = nullptr);

struct LandmarkTrainConfig {
  int steps = 1000;
  int batch = 48;
  std::uint64_t seed = 0;
  bool random_switch = false;
  double text_temperature = 1.0;
  nn::AdamWConfig optim{};
};

struct LandmarkStepLog {
  int step = 0;
  Modality modality = Modality::kText;
  double loss = 0;
  double grad_norm = 0;
  double lr = 0;
};

/// Mean squared error over all T x 2N entries of one utterance.
Var landmark_loss(Tape& t, const LandmarkDecoder& dec, const CachedUtterance& u, const LatentSequence& input);

/// Throws std::runtime_error on a non-finite loss.
std::vector<LandmarkStepLog> train_landmark(LandmarkDecoder& dec, const std::vector<CachedUtterance>& data,
                                            const LandmarkTrainConfig& cfg,
                                            const std::function<void(const LandmarkStepLog&)>& on_step = {});

}  // namespace uniflg::landmark
