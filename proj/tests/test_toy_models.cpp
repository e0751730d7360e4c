// Properties that only hold after training, measured on the cached toy models.
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "doctest.h"
#include "support/toy_world.hpp"
#include "uniflg/length_ops.hpp"

using namespace uniflg;
using toy::ToyWorld;

namespace {

std::vector<const synth::UtteranceRecord*> seen_eval(const synth::CorpusManifest& m) {
  std::vector<const synth::UtteranceRecord*> out;
  for (const synth::UtteranceRecord& u : m.utterances)
    if (u.split == "eval" && u.role != synth::SpeakerRole::kUnseen) out.push_back(&u);
  return out;
}

double dist(const Matrix& a, const Matrix& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return std::sqrt(s);
}

// Mean silhouette with Euclidean distance.
double silhouette(const std::vector<Matrix>& pts, const std::vector<int>& label) {
  const int n = static_cast<int>(pts.size());
  const int k = *std::max_element(label.begin(), label.end()) + 1;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<int> cnt(k, 0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[label[j]] += dist(pts[i], pts[j]);
      ++cnt[label[j]];
    }
    if (cnt[label[i]] == 0) continue;
    const double a = sum[label[i]] / cnt[label[i]];
    double b = INFINITY;
    for (int c = 0; c < k; ++c)
      if (c != label[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

// Held-out accuracy of a softmax-regression probe on standardized features.
// The first 70% of rows train it.
double probe_accuracy(const std::vector<std::vector<double>>& X, const std::vector<int>& y, int classes) {
  const int n = static_cast<int>(X.size()), d = static_cast<int>(X[0].size());
  const int ntrain = n * 7 / 10;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (int i = 0; i < ntrain; ++i)
    for (int c = 0; c < d; ++c) mean[c] += X[i][c] / ntrain;
  for (int i = 0; i < ntrain; ++i)
    for (int c = 0; c < d; ++c) sd[c] += (X[i][c] - mean[c]) * (X[i][c] - mean[c]) / ntrain;
  auto features = [&](int i) {
    std::vector<double> f(d + 1, 1.0);
    for (int c = 0; c < d; ++c) f[c] = (X[i][c] - mean[c]) / std::sqrt(sd[c] + 1e-9);
    return f;
  };
  auto scores = [&](const std::vector<double>& W, const std::vector<double>& f) {
    std::vector<double> s(classes, 0.0);
    for (int k = 0; k < classes; ++k)
      for (int c = 0; c <= d; ++c) s[k] += W[k * (d + 1) + c] * f[c];
    return s;
  };
  std::vector<double> W(classes * (d + 1), 0.0);
  for (int epoch = 0; epoch < 200; ++epoch) {
    std::vector<double> G(W.size(), 0.0);
    for (int i = 0; i < ntrain; ++i) {
      const std::vector<double> f = features(i);
      std::vector<double> s = scores(W, f);
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0;
      for (double& v : s) z += (v = std::exp(v - mx));
      for (int k = 0; k < classes; ++k) {
        const double g = s[k] / z - (k == y[i] ? 1.0 : 0.0);
        for (int c = 0; c <= d; ++c) G[k * (d + 1) + c] += g * f[c] / ntrain;
      }
    }
    for (std::size_t j = 0; j < W.size(); ++j) W[j] -= G[j];
  }
  int ok = 0;
  for (int i = ntrain; i < n; ++i) {
    const std::vector<double> s = scores(W, features(i));
    ok += static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()) == y[i];
  }
  return static_cast<double>(ok) / (n - ntrain);
}

double mean_abs_log_duration_error(const tts::TtsModel& model, const synth::CorpusManifest& m) {
  double err = 0;
  int n = 0;
  for (const synth::UtteranceRecord* u : seen_eval(m)) {
    const ConditioningBundle b = model.bundle_for(u->speaker, nullptr);
    std::vector<double> logd;
    model.duration_predict(model.text_encode(u->phonemes, b).h, b, &logd);
    for (std::size_t i = 0; i < logd.size(); ++i, ++n) err += std::abs(logd[i] - std::log(u->durations_spec[i]));
  }
  return err / n;
}

}  // namespace

TEST_CASE("utterance latents cluster by emotion") {
  ToyWorld& w = ToyWorld::get();
  const tts::TtsModel& model = w.tts();
  std::vector<Matrix> zs;
  std::vector<int> emo;
  for (const synth::UtteranceRecord* u : seen_eval(w.corpus())) {
    zs.push_back(model.utterance_encode(w.corpus().load_spectral(*u).x, nullptr).mean);
    emo.push_back(u->emotion);
  }
  const double s = silhouette(zs, emo);
  MESSAGE("z_u silhouette by emotion: " << s);
  CHECK(s > 0.0);
}

TEST_CASE("duration predictor beats its initialisation by a factor of two") {
  ToyWorld& w = ToyWorld::get();
  const double trained = mean_abs_log_duration_error(w.tts(), w.corpus());
  const double untrained = mean_abs_log_duration_error(w.untrained_tts(), w.corpus());
  MESSAGE("mean |log d error|: trained " << trained << ", untrained " << untrained);
  CHECK(untrained >= 2.0 * trained);
}

TEST_CASE("constant-duration corpus gives constant predictions") {
  ToyWorld& w = ToyWorld::get();
  const tts::TtsModel& model = w.constant_tts();
  int worst = 0;
  for (const synth::UtteranceRecord* u : seen_eval(w.constant_corpus())) {
    const ConditioningBundle b = model.bundle_for(u->speaker, nullptr);
    for (int d : model.duration_predict(model.text_encode(u->phonemes, b).h, b))
      worst = std::max(worst, std::abs(d - ToyWorld::constant_duration()));
  }
  MESSAGE("largest deviation from " << ToyWorld::constant_duration() << ": " << worst);
  CHECK(worst <= 1);
}

TEST_CASE("posterior-mean reconstruction of held-out speech") {
  ToyWorld& w = ToyWorld::get();
  const tts::TtsModel& model = w.tts();
  double sq = 0, norm = 0;
  std::vector<double> sum, sumsq;
  long frames = 0;
  for (const synth::UtteranceRecord* u : seen_eval(w.corpus())) {
    const Matrix x = w.corpus().load_spectral(*u).x;
    const ConditioningBundle b = model.bundle_for(u->speaker, &x);
    const Matrix xh = model.feature_decode(model.posterior_encode(x, b, nullptr).z, b).x;
    sum.resize(x.cols, 0.0);
    sumsq.resize(x.cols, 0.0);
    for (int t = 0; t < x.rows; ++t, ++frames)
      for (int c = 0; c < x.cols; ++c) {
        sq += (xh(t, c) - x(t, c)) * (xh(t, c) - x(t, c));
        norm += x(t, c) * x(t, c);
        sum[c] += x(t, c);
        sumsq[c] += x(t, c) * x(t, c);
      }
  }
  double var = 0;
  for (std::size_t c = 0; c < sum.size(); ++c) var += sumsq[c] / frames - (sum[c] / frames) * (sum[c] / frames);
  const double mse = sq / (frames * static_cast<double>(sum.size()));
  var /= static_cast<double>(sum.size());
  const double rel = std::sqrt(sq / norm);
  MESSAGE("reconstruction mse " << mse << " vs data variance " << var << ", relative L2 " << rel);
  CHECK(mse < 0.1 * var);
  CHECK(rel < 0.2);
}

TEST_CASE("training loss keeps falling in moving average") {
  const std::vector<double>& loss = ToyWorld::get().tts_losses();
  constexpr int kWindow = 100;
  REQUIRE(loss.size() >= 4 * kWindow);
  auto ma = [&](std::size_t end) {
    return std::accumulate(loss.begin() + (end - kWindow), loss.begin() + end, 0.0) / kWindow;
  };
  // Sampled at the first window and at every quarter of the run; between
  // adjacent windows the plateau is within minibatch noise.
  std::vector<std::size_t> at = {kWindow};
  for (int q = 1; q <= 4; ++q) at.push_back(loss.size() * q / 4);
  for (std::size_t i = 1; i < at.size(); ++i) {
    INFO("moving average at step " << at[i - 1] << ": " << ma(at[i - 1]) << ", at step " << at[i] << ": "
                                   << ma(at[i]));
    CHECK(ma(at[i]) < ma(at[i - 1]));
  }
  int rises = 0;
  for (std::size_t end = 2 * kWindow; end <= loss.size(); end += kWindow) rises += ma(end) >= ma(end - kWindow);
  MESSAGE("moving average " << ma(kWindow) << " -> " << ma(loss.size()) << "; " << rises
                            << " adjacent non-overlapping windows did not fall");
}

TEST_CASE("text and speech latents point the same way") {
  ToyWorld& w = ToyWorld::get();
  const tts::TtsModel& model = w.tts();
  const synth::CorpusManifest& m = w.corpus();
  double cos_mean = 0, cos_sampled = 0;
  int n = 0;
  Rng rng(11);
  for (const synth::UtteranceRecord* u : m.select(synth::SpeakerRole::kPaired, "eval")) {
    const landmark::CachedUtterance c = landmark::prepare_utterance(
        model, u->id, u->phonemes, m.load_spectral(*u).x, m.load_landmarks(*u).y, u->speaker, m.config.ratio());
    const Matrix text_mean = landmark::make_training_latents(c, landmark::Modality::kText, nullptr).values;
    const Matrix text_draw =
        landmark::make_training_latents(c, landmark::Modality::kText, &rng, w.recipe().landmark_train.text_temperature)
            .values;
    const Matrix& speech = c.speech.values;
    for (int t = 0; t < speech.rows; ++t, ++n) {
      double dm = 0, ds = 0, nm = 0, nd = 0, ns = 0;
      for (int k = 0; k < speech.cols; ++k) {
        dm += speech(t, k) * text_mean(t, k);
        ds += speech(t, k) * text_draw(t, k);
        nm += text_mean(t, k) * text_mean(t, k);
        nd += text_draw(t, k) * text_draw(t, k);
        ns += speech(t, k) * speech(t, k);
      }
      cos_mean += dm / std::sqrt(nm * ns + 1e-300);
      cos_sampled += ds / std::sqrt(nd * ns + 1e-300);
    }
  }
  cos_mean /= n;
  cos_sampled /= n;
  MESSAGE("mean cosine, speech vs text prior mean " << cos_mean << ", vs sampled text latents " << cos_sampled);
  CHECK(cos_mean > 0.7);
  CHECK(cos_sampled > 0.7);
}

TEST_CASE("shared latent space carries less speaker identity than the features") {
  ToyWorld& w = ToyWorld::get();
  const tts::TtsModel& model = w.tts();
  const synth::CorpusManifest& m = w.corpus();
  std::vector<const synth::UtteranceRecord*> us;
  for (const synth::UtteranceRecord& u : m.utterances)
    if (u.role != synth::SpeakerRole::kUnseen) us.push_back(&u);
  Rng rng(5);
  for (std::size_t i = us.size(); i > 1; --i) std::swap(us[i - 1], us[rng.uniform_int(0, static_cast<int>(i) - 1)]);

  std::vector<std::vector<double>> from_latent, from_features;
  std::vector<int> speaker;
  for (const synth::UtteranceRecord* u : us) {
    if (from_latent.size() >= 4000) break;
    const Matrix x = m.load_spectral(*u).x;
    const ConditioningBundle b = model.bundle_for(u->speaker, &x);
    const Matrix fz = model.flow_forward(model.posterior_encode(x, b, nullptr).z, b).out.values;
    for (int t = 0; t < x.rows; t += 3) {
      from_latent.emplace_back(fz.row_ptr(t), fz.row_ptr(t) + fz.cols);
      from_features.emplace_back(x.row_ptr(t), x.row_ptr(t) + x.cols);
      speaker.push_back(u->speaker);
    }
  }
  const double acc_latent = probe_accuracy(from_latent, speaker, m.config.num_speakers);
  const double acc_features = probe_accuracy(from_features, speaker, m.config.num_speakers);
  MESSAGE("speaker probe accuracy: latent " << acc_latent << ", features " << acc_features << " (chance "
                                            << 1.0 / m.config.num_speakers << ")");
  CHECK(acc_latent <= 0.5 * acc_features);
}

TEST_CASE("global conditioning reaches the landmark output") {
  ToyWorld& w = ToyWorld::get();
  const landmark::LandmarkDecoder& dec = w.decoder(landmark::TrainMode::kMixed, 1);
  const tts::TtsModel& model = w.tts();
  const synth::CorpusManifest& m = w.corpus();
  const auto eval = m.select(synth::SpeakerRole::kPaired, "eval");
  REQUIRE(eval.size() >= 2);
  const Matrix xa = m.load_spectral(*eval[0]).x, xb = m.load_spectral(*eval[1]).x;
  const landmark::CachedUtterance c = landmark::prepare_utterance(model, eval[0]->id, eval[0]->phonemes, xa,
                                                                  m.load_landmarks(*eval[0]).y, eval[0]->speaker,
                                                                  m.config.ratio());
  const Matrix za = model.utterance_encode(xa, nullptr).mean, zb = model.utterance_encode(xb, nullptr).mean;
  const double diff = max_abs_diff(dec.decode_landmarks(c.speech, za).y, dec.decode_landmarks(c.speech, zb).y);
  MESSAGE("max |Y(z_u a) - Y(z_u b)| = " << diff);
  CHECK(diff > 0.0);
}
