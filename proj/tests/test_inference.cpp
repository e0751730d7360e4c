#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "doctest.h"
#include "uniflg/inference.hpp"
#include "uniflg/length_ops.hpp"

using namespace uniflg;
using namespace uniflg::inference;

namespace {

tts::TtsConfig small_tts(CondMode mode = CondMode::kStandard) {
  tts::TtsConfig c;
  c.num_phonemes = 10;
  c.feature_dim = 6;
  c.g_dim = 3;
  c.latent_dim = 4;
  c.hidden = 8;
  c.text_layers = 2;
  c.posterior_layers = 2;
  c.decoder_layers = 2;
  c.flow_steps = 2;
  c.mode = mode;
  return c;
}

landmark::DecoderConfig small_decoder(landmark::TrainMode mode = landmark::TrainMode::kMixed,
                                      CondMode cond = CondMode::kStandard) {
  landmark::DecoderConfig c;
  c.layers = 2;
  c.channels = 8;
  c.kernel = 5;
  c.global_cond_dim = cond == CondMode::kStandard ? kUtteranceLatentDim : 3;
  c.input_dim = mode == landmark::TrainMode::kDirect ? 6 : 4;
  c.num_points = 5;
  c.lip_indices = {3, 4};
  c.mode = mode;
  c.cond_mode = cond;
  return c;
}

void jitter(nn::ParamStore& s, Rng& rng, double scale) {
  for (Parameter& p : s.all())
    for (double& v : p.value.data) v += scale * rng.normal();
}

Matrix random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

struct Fixture {
  tts::TtsModel tts;
  landmark::LandmarkDecoder dec;
  Models models;
  Matrix ref;
  explicit Fixture(CondMode mode = CondMode::kStandard, landmark::TrainMode lm = landmark::TrainMode::kMixed)
      : tts(small_tts(mode), 1), dec(small_decoder(lm, mode), 2) {
    Rng rng(3);
    jitter(tts.params(), rng, 0.05);
    jitter(dec.params(), rng, 0.05);
    models = Models{&tts, &dec, 80.0, 20.0};
    ref = random_matrix(rng, 40, 6, 0.5);
  }
  Request request(std::uint64_t seed = 5) const {
    Request r;
    r.g_index = 1;
    r.reference = &ref;
    r.seed = seed;
    return r;
  }
};

}  // namespace

TEST_CASE("text path lengths follow the converted durations") {
  Fixture f;
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> ph(rng.uniform_int(1, 9));
    for (int& p : ph) p = rng.uniform_int(0, 9);
    const TextOutput out = infer_text(f.models, ph, f.request(trial));
    CHECK(out.d_spec.size() == ph.size());
    for (int d : out.d_spec) CHECK(d >= 4);  // ratio 1/4
    CHECK(out.d_land == durations_to_land(out.d_spec, 0.25));
    CHECK(out.landmarks.frames() == std::accumulate(out.d_land.begin(), out.d_land.end(), 0));
    CHECK(out.speech.frames() == std::accumulate(out.d_spec.begin(), out.d_spec.end(), 0));
    CHECK(out.landmarks.fps == 20.0);
    CHECK(out.d_spec == predict_durations(f.models, ph, make_bundle(f.models, f.request(trial))));
  }
}

TEST_CASE("speech path maps 80 spectral frames to 20 landmark frames") {
  Fixture f;
  Rng rng(7);
  const Matrix x = random_matrix(rng, 80, 6, 0.5);
  CHECK(infer_speech(f.models, x, f.request()).frames() == 20);
  CHECK(infer_speech(f.models, random_matrix(rng, 1, 6), f.request()).frames() == 1);
  CHECK(infer_speech(f.models, random_matrix(rng, 83, 6), f.request()).frames() == 21);
  CHECK_THROWS_AS(infer_speech(f.models, Matrix(0, 6), f.request()), std::invalid_argument);
  CHECK_THROWS_AS(infer_speech(f.models, Matrix(8, 5), f.request()), std::invalid_argument);
}

TEST_CASE("fixed seeds give identical outputs") {
  Fixture f;
  const std::vector<int> ph = {0, 3, 5, 2, 0};
  const TextOutput a = infer_text(f.models, ph, f.request(9)), b = infer_text(f.models, ph, f.request(9));
  CHECK(max_abs_diff(a.landmarks.y, b.landmarks.y) == 0.0);
  CHECK(max_abs_diff(a.speech.x, b.speech.x) == 0.0);
  const TextOutput c = infer_text(f.models, ph, f.request(10));
  CHECK(max_abs_diff(a.landmarks.y, c.landmarks.y) > 0.0);

  Request prior = f.request(11);
  prior.z_u_source = ZuSource::kPrior;
  prior.reference = nullptr;
  Rng rng(12);
  const Matrix x = random_matrix(rng, 30, 6);
  CHECK(max_abs_diff(infer_speech(f.models, x, prior).y, infer_speech(f.models, x, prior).y) == 0.0);
  CHECK(max_abs_diff(infer_text(f.models, ph, prior).landmarks.y, infer_text(f.models, ph, prior).landmarks.y) ==
        0.0);
  const PipelinedOutput p1 = infer_pipelined(f.models, ph, f.request(9)), p2 = infer_pipelined(f.models, ph, f.request(9));
  CHECK(max_abs_diff(p1.landmarks.y, p2.landmarks.y) == 0.0);
}

TEST_CASE("text landmarks do not depend on the feature decoder") {
  Fixture f;
  const std::vector<int> ph = {0, 1, 7, 4, 0};
  const TextOutput before = infer_text(f.models, ph, f.request());
  Rng rng(13);
  int touched = 0;
  for (Parameter& p : f.tts.params().all())
    if (p.name.rfind("dec.", 0) == 0) {
      for (double& v : p.value.data) v += 0.5 * rng.normal();
      ++touched;
    }
  REQUIRE(touched > 0);
  const TextOutput after = infer_text(f.models, ph, f.request());
  CHECK(max_abs_diff(before.landmarks.y, after.landmarks.y) == 0.0);
  CHECK(max_abs_diff(before.speech.x, after.speech.x) > 0.0);
}

TEST_CASE("pipelined output matches the text path length") {
  Fixture f;
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ph(rng.uniform_int(1, 8));
    for (int& p : ph) p = rng.uniform_int(0, 9);
    const TextOutput t = infer_text(f.models, ph, f.request(trial));
    const PipelinedOutput p = infer_pipelined(f.models, ph, f.request(trial));
    CHECK(std::abs(p.landmarks.frames() - t.landmarks.frames()) <= 1);
    CHECK(max_abs_diff(p.speech.x, t.speech.x) == 0.0);
  }
}

TEST_CASE("request validation") {
  Fixture f;
  Request r = f.request();
  r.g_index = 3;
  CHECK_THROWS_WITH_AS(infer_text(f.models, {1, 2}, r), doctest::Contains("arbitrary-speaker"), std::invalid_argument);
  r.g_index = 0;
  r.reference = nullptr;
  CHECK_THROWS_WITH_AS(infer_text(f.models, {1, 2}, r), doctest::Contains("reference"), std::invalid_argument);
  CHECK_THROWS_AS(infer_text(f.models, {}, f.request()), std::invalid_argument);
  CHECK_THROWS_AS(infer_text(f.models, {10}, f.request()), std::invalid_argument);
  CHECK_THROWS_AS(infer_as(f.models, f.ref, one_hot(0, 3)), std::invalid_argument);
  Models missing = f.models;
  missing.decoder = nullptr;
  CHECK_THROWS_AS(infer_speech(missing, f.ref, f.request()), std::invalid_argument);
}

TEST_CASE("arbitrary-speaker path") {
  Fixture f(CondMode::kArbitrarySpeaker);
  Rng rng(15);
  const Matrix x = random_matrix(rng, 44, 6, 0.8);  // a voice the model never saw
  const LandmarkSequence y = infer_as(f.models, x, one_hot(2, 3));
  CHECK(y.frames() == 11);
  CHECK(all_finite(y.y));
  CHECK_THROWS_AS(infer_as(f.models, x, {1.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(infer_as(f.models, x, {0.5, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(infer_as(f.models, x, {1.0, 0.0}), std::invalid_argument);
  landmark::LandmarkDecoder std_dec(small_decoder(), 2);
  Models mixed{&f.tts, &std_dec, 80, 20};
  CHECK_THROWS_AS(infer_as(mixed, x, one_hot(0, 3)), std::invalid_argument);
}

TEST_CASE("direct-input decoder has only a speech path") {
  Fixture f(CondMode::kStandard, landmark::TrainMode::kDirect);
  CHECK(infer_speech(f.models, f.ref, f.request()).frames() == 10);
  CHECK_THROWS_AS(infer_text(f.models, {1, 2}, f.request()), std::invalid_argument);
}

TEST_CASE("all paths stay finite over 500 random utterances") {
  Fixture f;
  Fixture as(CondMode::kArbitrarySpeaker);
  Rng rng(16);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    std::vector<int> ph(rng.uniform_int(1, 10));
    for (int& p : ph) p = rng.uniform_int(0, 9);
    const Matrix x = random_matrix(rng, rng.uniform_int(1, 120), 6, rng.uniform(0.1, 3.0));
    Request r = f.request(i);
    r.g_index = i % 3;
    r.z_u_source = i % 2 ? ZuSource::kPrior : ZuSource::kReference;
    switch (i % 4) {
      case 0: {
        const TextOutput o = infer_text(f.models, ph, r);
        bad += !all_finite(o.landmarks.y) || !all_finite(o.speech.x);
        break;
      }
      case 1:
        bad += !all_finite(infer_speech(f.models, x, r).y);
        break;
      case 2:
        bad += !all_finite(infer_pipelined(f.models, ph, r).landmarks.y);
        break;
      default:
        bad += !all_finite(infer_as(as.models, x, one_hot(i % 3, 3)).y);
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("real time factor") {
  CHECK(rtf(0.5, 160, 80.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(rtf(0.1, 0, 80.0), std::invalid_argument);
  int calls = 0;
  const RtfReport rep = rtf_measure(
      [&] {
        ++calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        return 80;
      },
      80.0, 5, 1);
  CHECK(calls == 6);
  CHECK(rep.runs.size() == 5);
  CHECK(rep.content_seconds == 1.0);
  CHECK(rep.median >= 0.02);
  CHECK(rep.median < 0.2);
  CHECK_THROWS_AS(rtf_measure([] { return 0; }, 80.0, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(rtf_measure([] { return 10; }, 80.0, 0), std::invalid_argument);
}
