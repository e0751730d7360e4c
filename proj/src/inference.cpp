#include "uniflg/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "uniflg/length_ops.hpp"

namespace uniflg::inference {

namespace {

// Rng streams under the request seed.
constexpr std::uint64_t kStreamZu = 1;
constexpr std::uint64_t kStreamSpec = 2;
constexpr std::uint64_t kStreamLand = 3;

LatentSequence sample_expanded(const PriorStats& prior, const std::vector<int>& d, RateTag rate, double temperature,
                               Rng& rng) {
  const PriorStats e = tts::expand(prior, d);
  LatentSequence out{e.mu, rate, SpaceTag::kFlow};
  if (temperature > 0.0)
    for (std::size_t i = 0; i < out.values.data.size(); ++i)
      out.values.data[i] += temperature * std::exp(e.log_sigma.data[i]) * rng.normal();
  return out;
}

void check_phonemes(const Models& m, const std::vector<int>& phonemes) {
  if (phonemes.empty()) throw std::invalid_argument("empty phoneme sequence");
  for (int p : phonemes)
    if (p < 0 || p >= m.tts->config().num_phonemes)
      throw std::invalid_argument("phoneme id " + std::to_string(p) + " outside the trained inventory");
}

// Every token keeps at least one landmark frame on its own.
std::vector<int> floored_durations(const Models& m, const Matrix& h, const ConditioningBundle& b) {
  std::vector<int> d = m.tts->duration_predict(h, b);
  const int floor = static_cast<int>(std::ceil(1.0 / m.ratio() - 1e-9));
  for (int& v : d) v = std::max(v, floor);
  return d;
}

}  // namespace

void Models::validate() const {
  if (!tts || !decoder) throw std::invalid_argument("inference needs both a TTS and a landmark checkpoint");
  if (!(spec_fps > 0) || !(land_fps > 0) || land_fps > spec_fps)
    throw std::invalid_argument("frame rates must satisfy 0 < land_fps <= spec_fps");
  if (tts->config().mode != decoder->config().cond_mode)
    throw std::invalid_argument("TTS (" + to_string(tts->config().mode) + ") and landmark decoder (" +
                                to_string(decoder->config().cond_mode) + ") were trained in different modes");
}

ConditioningBundle make_bundle(const Models& m, const Request& req) {
  m.validate();
  const tts::TtsConfig& c = m.tts->config();
  if (req.g_index < 0 || req.g_index >= c.g_dim) {
    if (c.mode == CondMode::kStandard)
      throw std::invalid_argument("speaker index " + std::to_string(req.g_index) +
                                  " was not seen in training (standard mode knows " + std::to_string(c.g_dim) +
                                  " speakers); use the arbitrary-speaker (as) mode for unseen speakers");
    throw std::invalid_argument("emotion index " + std::to_string(req.g_index) + " outside 0.." +
                                std::to_string(c.g_dim - 1));
  }
  if (req.z_u_source == ZuSource::kReference) {
    if (!req.reference) throw std::invalid_argument("z_u source 'reference' needs reference speech");
    return m.tts->bundle_for(req.g_index, req.reference, nullptr);
  }
  Rng rng(req.seed, {kStreamZu});
  return m.tts->bundle_for(req.g_index, nullptr, &rng);
}

std::vector<int> predict_durations(const Models& m, const std::vector<int>& phonemes, const ConditioningBundle& b) {
  check_phonemes(m, phonemes);
  const tts::TextEncoding enc = m.tts->text_encode(phonemes, b);
  std::vector<int> d = floored_durations(m, enc.h, b);
  return d;
}

SpectralFrames synthesize_features(const Models& m, const std::vector<int>& phonemes, const Request& req,
                                   std::vector<int>* d_spec_out) {
  const ConditioningBundle b = make_bundle(m, req);
  check_phonemes(m, phonemes);
  const tts::TextEncoding enc = m.tts->text_encode(phonemes, b);
  std::vector<int> d = floored_durations(m, enc.h, b);
  Rng rng(req.seed, {kStreamSpec});
  const LatentSequence fz = sample_expanded(enc.prior, d, RateTag::kSpec, req.temperature, rng);
  SpectralFrames x = m.tts->feature_decode(m.tts->flow_inverse(fz, b), b);
  if (d_spec_out) *d_spec_out = std::move(d);
  return x;
}

TextOutput infer_text(const Models& m, const std::vector<int>& phonemes, const Request& req) {
  if (m.decoder && m.decoder->config().mode == landmark::TrainMode::kDirect)
    throw std::invalid_argument("a direct-input decoder has no text path");
  const ConditioningBundle b = make_bundle(m, req);
  check_phonemes(m, phonemes);
  const tts::TextEncoding enc = m.tts->text_encode(phonemes, b);
  TextOutput out;
  out.d_spec = floored_durations(m, enc.h, b);
  out.d_land = durations_to_land(out.d_spec, m.ratio());

  // Two independent draws from the same expansion.
  Rng spec_rng(req.seed, {kStreamSpec});
  const LatentSequence fz_spec = sample_expanded(enc.prior, out.d_spec, RateTag::kSpec, req.temperature, spec_rng);
  out.speech = m.tts->feature_decode(m.tts->flow_inverse(fz_spec, b), b);

  Rng land_rng(req.seed, {kStreamLand});
  const LatentSequence fz_land = sample_expanded(enc.prior, out.d_land, RateTag::kLand, req.temperature, land_rng);
  out.landmarks = m.decoder->decode_landmarks(fz_land, m.decoder->global_from(b));
  out.landmarks.fps = m.land_fps;
  return out;
}

namespace {

LandmarkSequence speech_path(const Models& m, const Matrix& x, const ConditioningBundle& b) {
  if (x.rows < 1) throw std::invalid_argument("empty input speech");
  if (x.cols != m.tts->config().feature_dim)
    throw std::invalid_argument("input speech has " + std::to_string(x.cols) + " feature dims, model expects " +
                                std::to_string(m.tts->config().feature_dim));
  const int t_land = std::max(1, land_frame_count(x.rows, m.ratio()));
  const Matrix global = m.decoder->global_from(b);
  LandmarkSequence y;
  if (m.decoder->config().mode == landmark::TrainMode::kDirect) {
    y = m.decoder->decode_direct(resample_linear(x, t_land), global);
  } else {
    const tts::PosteriorResult post = m.tts->posterior_encode(x, b, nullptr);
    const tts::FlowResult fz = m.tts->flow_forward(post.z, b);
    y = m.decoder->decode_landmarks(resample_linear(fz.out, t_land), global);
  }
  y.fps = m.land_fps;
  return y;
}

}  // namespace

LandmarkSequence infer_speech(const Models& m, const Matrix& x, const Request& req) {
  Request r = req;
  if (r.z_u_source == ZuSource::kReference && !r.reference) r.reference = &x;
  return speech_path(m, x, make_bundle(m, r));
}

PipelinedOutput infer_pipelined(const Models& m, const std::vector<int>& phonemes, const Request& req) {
  PipelinedOutput out;
  out.speech = synthesize_features(m, phonemes, req);
  out.landmarks = speech_path(m, out.speech.x, make_bundle(m, req));
  return out;
}

LandmarkSequence infer_as(const Models& m, const Matrix& x, const std::vector<double>& emotion) {
  m.validate();
  if (m.tts->config().mode != CondMode::kArbitrarySpeaker)
    throw std::invalid_argument("models were not trained in arbitrary-speaker (as) mode");
  ConditioningBundle probe;
  probe.g = emotion;
  probe.mode = CondMode::kArbitrarySpeaker;
  probe.validate(m.tts->config().g_dim);
  Request req;
  req.g_index = probe.g_index();
  req.reference = &x;
  return speech_path(m, x, make_bundle(m, req));
}

double rtf(double wall_seconds, int spec_frames, double spec_fps) {
  if (spec_frames <= 0) throw std::invalid_argument("rtf of a zero-length generation is undefined");
  if (!(spec_fps > 0)) throw std::invalid_argument("spec_fps must be positive");
  return wall_seconds / (spec_frames / spec_fps);
}

RtfReport rtf_measure(const std::function<int()>& run, double spec_fps, int repeats, int warmup) {
  if (repeats < 1) throw std::invalid_argument("rtf_measure needs at least one timed run");
  for (int i = 0; i < warmup; ++i) run();
  RtfReport r;
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const int frames = run();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.runs.push_back(rtf(wall, frames, spec_fps));
    r.spec_frames = frames;
  }
  r.content_seconds = r.spec_frames / spec_fps;
  std::vector<double> sorted = r.runs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return r;
}

}  // namespace uniflg::inference
