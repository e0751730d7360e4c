#pragma once

// Generation paths on frozen models.
//
//   text       phonemes -> prior, predicted durations; the expanded prior is
//              sampled twice, once at spectral rate (-> flow^-1 -> features)
//              and once at landmark rate (-> landmark decoder). The landmark
//              branch never touches the feature decoder.
//   speech     features -> posterior mean -> flow -> resample -> decoder
//   pipelined  text acoustic branch, then the speech path on its output
//   as         speech path with the emotion one-hot as g and z_u taken from
//              the input speech (works for unseen speakers)

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uniflg/landmark_decoder.hpp"
#include "uniflg/tts_core.hpp"
#include "uniflg/types.hpp"

namespace uniflg::inference {

struct Models {
  const tts::TtsModel* tts = nullptr;
  const landmark::LandmarkDecoder* decoder = nullptr;
  double spec_fps = 80.0;
  double land_fps = 20.0;
  double ratio() const { return land_fps / spec_fps; }
  void validate() const;
};

enum class ZuSource {
  kReference,  // posterior mean of a reference utterance
  kPrior,      // N(0, I) draw
};

struct Request {
  int g_index = 0;                  // speaker (standard) or emotion (AS)
  ZuSource z_u_source = ZuSource::kReference;
  const Matrix* reference = nullptr;  // T x F features for z_u
  std::uint64_t seed = 0;
  double temperature = 0.667;
};

/// Bundle for a request. Standard mode rejects g indices outside the
/// trained speaker set.
ConditioningBundle make_bundle(const Models& m, const Request& req);

struct TextOutput {
  SpectralFrames speech;
  LandmarkSequence landmarks;
  std::vector<int> d_spec;
  std::vector<int> d_land;
};

/// Predicted durations with every token floored so it keeps at least one
/// landmark frame.
std::vector<int> predict_durations(const Models& m, const std::vector<int>& phonemes,
                                   const ConditioningBundle& b);

TextOutput infer_text(const Models& m, const std::vector<int>& phonemes, const Request& req);

/// Acoustic branch of the text path only.
SpectralFrames synthesize_features(const Models& m, const std::vector<int>& phonemes, const Request& req,
                                   std::vector<int>* d_spec = nullptr);

/// z_u comes from `x` itself (posterior mean) unless the request asks for
/// the prior. Direct-input decoders consume resampled features instead.
LandmarkSequence infer_speech(const Models& m, const Matrix& x, const Request& req);

struct PipelinedOutput {
  SpectralFrames speech;
  LandmarkSequence landmarks;
};
/// The synthesized features are fed to the speech path with the reference
/// z_u reused.
PipelinedOutput infer_pipelined(const Models& m, const std::vector<int>& phonemes, const Request& req);

/// Arbitrary-speaker path: `emotion` must be a one-hot of the trained
/// emotion count, and both models must be in AS mode.
LandmarkSequence infer_as(const Models& m, const Matrix& x, const std::vector<double>& emotion);

/// wall seconds / content seconds.
double rtf(double wall_seconds, int spec_frames, double spec_fps);

struct RtfReport {
  double median = 0.0;
  std::vector<double> runs;
  int spec_frames = 0;
  double content_seconds = 0.0;
};

/// Times `run` (which returns the spectral frame count it generated)
/// `repeats` times after `warmup` untimed calls; reports the median rtf.
RtfReport rtf_measure(const std::function<int()>& run, double spec_fps, int repeats = 5, int warmup = 1);

}  // namespace uniflg::inference
