#pragma once

// Deterministic synthetic audiovisual corpus.
//
// A SyntheticWorld is a pure function of (CorpusConfig, seed). It owns the
// phoneme inventory, the face layout and every embedding table, and renders
// per-utterance spectral frames and landmark trajectories. All randomness of
// an utterance is drawn from streams keyed by (seed, utterance index), so
// generation order and thread count never change the output bytes.
//
// Spectral frame t of phoneme p for speaker s, emotion e:
//   x_t = phone[p] * (1 + spk_scale[s]) + spk_offset[s] + emo_offset[e] + noise * n_t
// with n_t ~ N(0, I).
//
// Lip openness/width follow the phoneme targets with a linear cross-fade over
// the first kTransitionFrames frames of each phoneme (starting from the value
// reached at the end of the previous phoneme, or from the silence target).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "uniflg/types.hpp"

namespace uniflg::synth {

inline constexpr int kTransitionFrames = 2;

struct MouthShape {
  double openness = 0.0;  // [0, 1]
  double width = 0.5;     // [0, 1]
};

struct PhonemeInventory {
  std::vector<MouthShape> targets;
  std::vector<int> base_duration;  // spectral-rate frames
  int silence_id = 0;

  int size() const { return static_cast<int>(targets.size()); }
  /// Built-in inventory of `count` phonemes; id 0 is silence.
  static PhonemeInventory standard(int count);
  void validate() const;
};

struct FaceLayout {
  int num_points = 0;
  std::vector<int> lip_indices;  // ordered loop
  Matrix rest;                   // num_points x 2 neutral positions

  static FaceLayout make(int num_points, int lip_points);
};

struct CorpusConfig {
  int num_speakers = 6;          // speakers available to TTS training
  int num_paired_speakers = 1;   // first speakers, with landmark recordings
  int num_unseen_speakers = 3;   // held out from all training
  int num_emotions = 3;
  int utterances_per_speaker = 40;   // unpaired speakers
  int paired_utterances = 120;       // per paired speaker
  int unseen_utterances = 10;        // per unseen speaker
  double eval_fraction = 0.15;
  int num_phonemes = 12;
  int min_phonemes = 4;
  int max_phonemes = 9;
  double spec_fps = 80.0;
  double land_fps = 20.0;
  int num_points = 20;
  int lip_points = 8;
  int feature_dim = 16;
  double spectral_noise = 0.2;
  double landmark_noise = 0.0;
  int duration_jitter = 1;
  /// When > 0 every phoneme lasts exactly this many spectral frames.
  int fixed_duration = 0;
  double head_motion = 0.01;
  double emotion_face_offset = 0.04;

  double ratio() const { return land_fps / spec_fps; }
  int total_speakers() const { return num_speakers + num_unseen_speakers; }
  /// Throws std::invalid_argument with an explanation.
  void validate() const;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
/// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, CorpusConfig& c);

enum class SpeakerRole { kPaired, kUnpaired, kUnseen };
std::string to_string(SpeakerRole r);

struct UtteranceRecord {
  std::string id;
  int index = 0;
  int speaker = 0;
  int emotion = 0;
  SpeakerRole role = SpeakerRole::kUnpaired;
  std::string split;  // "train" | "eval"
  std::vector<int> phonemes;
  std::vector<int> durations_spec;
  std::vector<int> durations_land;
  int spec_frames = 0;
  int land_frames = 0;
  std::string spectral_path;  // relative to the manifest directory
  std::string landmark_path;  // empty when the speaker has no face recordings
};

struct CorpusManifest {
  CorpusConfig config;
  std::uint64_t seed = 0;
  std::vector<int> lip_indices;
  std::vector<UtteranceRecord> utterances;
  std::filesystem::path root;  // directory holding the manifest

  double spec_fps() const { return config.spec_fps; }
  double land_fps() const { return config.land_fps; }
  int num_points() const { return config.num_points; }

  void write(const std::filesystem::path& path) const;
  static CorpusManifest read(const std::filesystem::path& path);
  /// Checks every referenced file exists and matches the declared shapes.
  void validate_files() const;

  SpectralFrames load_spectral(const UtteranceRecord& u) const;
  LandmarkSequence load_landmarks(const UtteranceRecord& u) const;
  std::vector<const UtteranceRecord*> select(SpeakerRole role, const std::string& split) const;
};

class SyntheticWorld {
 public:
  SyntheticWorld(CorpusConfig config, std::uint64_t seed);

  const CorpusConfig& config() const { return config_; }
  const PhonemeInventory& inventory() const { return inventory_; }
  const FaceLayout& layout() const { return layout_; }
  std::uint64_t seed() const { return seed_; }

  /// Embedding tables (rows indexed by id, F columns).
  const Matrix& phone_embedding() const { return phone_; }
  const Matrix& speaker_scale() const { return spk_scale_; }
  const Matrix& speaker_offset() const { return spk_offset_; }
  const Matrix& emotion_offset() const { return emo_offset_; }

  /// Per-frame lip openness and width after cross-fading (landmark rate).
  std::vector<MouthShape> mouth_trace(const std::vector<int>& phonemes,
                                      const std::vector<int>& durations_land) const;

  /// Ground-truth landmarks (no noise) for a phoneme sequence.
  LandmarkSequence oracle_articulate(const std::vector<int>& phonemes,
                                     const std::vector<int>& durations_land, int speaker,
                                     int emotion) const;

  /// Spectral frames; `noise_stream` selects the noise draw (utterance index).
  SpectralFrames render_spectral(const std::vector<int>& phonemes,
                                 const std::vector<int>& durations_spec, int speaker, int emotion,
                                 std::uint64_t noise_stream) const;

  /// Noise-free spectral frame for one (phoneme, speaker, emotion).
  std::vector<double> clean_frame(int phoneme, int speaker, int emotion) const;

  /// Sampled phoneme and duration sequences for utterance `index`.
  void sample_utterance(int index, std::vector<int>& phonemes, std::vector<int>& durations_spec) const;

 private:
  void check_ids(const std::vector<int>& phonemes, int speaker, int emotion) const;

  CorpusConfig config_;
  std::uint64_t seed_;
  PhonemeInventory inventory_;
  FaceLayout layout_;
  Matrix phone_, spk_scale_, spk_offset_, emo_offset_;
  Matrix emo_face_;      // emotions x 2N static offsets for non-lip points
  Matrix head_params_;   // (speaker * E + emotion) x 4: amp_x, amp_y, freq, phase
};

/// Writes spectral/landmark tensors and `manifest.jsonl` under `out_dir`.
/// `threads` > 1 renders utterances concurrently with identical output.
CorpusManifest gen_corpus(const CorpusConfig& config, std::uint64_t seed,
                          const std::filesystem::path& out_dir, int threads = 1);

}  // namespace uniflg::synth
