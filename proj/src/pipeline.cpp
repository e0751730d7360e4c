#include "uniflg/pipeline.hpp"

#include <fstream>
#include <stdexcept>

#include "uniflg/parallel.hpp"

namespace uniflg {

using nlohmann::json;

namespace {

template <typename Fn>
void for_known_keys(const json& j, const std::string& what, Fn&& fn) {
  if (!j.is_object()) throw std::invalid_argument(what + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!fn(key, value)) throw std::invalid_argument("unknown " + what + " key '" + key + "'");
}

}  // namespace

namespace nn {

void to_json(json& j, const AdamWConfig& c) {
  j = json{{"lr", c.lr},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"eps", c.eps},
           {"weight_decay", c.weight_decay},
           {"lr_decay", c.lr_decay},
           {"clip_norm", c.clip_norm}};
}

void from_json(const json& j, AdamWConfig& c) {
  for_known_keys(j, "optimizer", [&](const std::string& k, const json& v) {
    if (k == "lr") v.get_to(c.lr);
    else if (k == "beta1") v.get_to(c.beta1);
    else if (k == "beta2") v.get_to(c.beta2);
    else if (k == "eps") v.get_to(c.eps);
    else if (k == "weight_decay") v.get_to(c.weight_decay);
    else if (k == "lr_decay") v.get_to(c.lr_decay);
    else if (k == "clip_norm") v.get_to(c.clip_norm);
    else return false;
    return true;
  });
}

}  // namespace nn

namespace tts {

void to_json(json& j, const TtsTrainConfig& c) {
  j = json{{"steps", c.steps}, {"batch", c.batch}, {"seed", c.seed}, {"log_every", c.log_every}, {"optim", c.optim}};
}

void from_json(const json& j, TtsTrainConfig& c) {
  for_known_keys(j, "tts_train", [&](const std::string& k, const json& v) {
    if (k == "steps") v.get_to(c.steps);
    else if (k == "batch") v.get_to(c.batch);
    else if (k == "seed") v.get_to(c.seed);
    else if (k == "log_every") v.get_to(c.log_every);
    else if (k == "optim") v.get_to(c.optim);
    else return false;
    return true;
  });
}

}  // namespace tts

namespace landmark {

void to_json(json& j, const LandmarkTrainConfig& c) {
  j = json{{"steps", c.steps},
           {"batch", c.batch},
           {"seed", c.seed},
           {"random_switch", c.random_switch},
           {"text_temperature", c.text_temperature},
           {"optim", c.optim}};
}

void from_json(const json& j, LandmarkTrainConfig& c) {
  for_known_keys(j, "landmark_train", [&](const std::string& k, const json& v) {
    if (k == "steps") v.get_to(c.steps);
    else if (k == "batch") v.get_to(c.batch);
    else if (k == "seed") v.get_to(c.seed);
    else if (k == "random_switch") v.get_to(c.random_switch);
    else if (k == "text_temperature") v.get_to(c.text_temperature);
    else if (k == "optim") v.get_to(c.optim);
    else return false;
    return true;
  });
}

}  // namespace landmark

namespace pipeline {

void to_json(json& j, const Recipe& r) {
  j = json{{"corpus", r.corpus},
           {"tts", r.tts},
           {"tts_train", r.tts_train},
           {"decoder", r.decoder},
           {"landmark_train", r.landmark_train},
           {"temperature", r.temperature}};
}

void from_json(const json& j, Recipe& r) {
  for_known_keys(j, "recipe", [&](const std::string& k, const json& v) {
    if (k == "corpus") v.get_to(r.corpus);
    else if (k == "tts") v.get_to(r.tts);
    else if (k == "tts_train") v.get_to(r.tts_train);
    else if (k == "decoder") v.get_to(r.decoder);
    else if (k == "landmark_train") v.get_to(r.landmark_train);
    else if (k == "temperature") v.get_to(r.temperature);
    else return false;
    return true;
  });
}

Recipe load_recipe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return json::parse(in).get<Recipe>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

json apply_overrides(json base, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + o + "' is not key=value");
    std::string path = "/" + o.substr(0, eq);
    for (char& c : path)
      if (c == '.') c = '/';
    const std::string text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    base[json::json_pointer(path)] = value;
  }
  return base;
}

int g_index_for(const synth::UtteranceRecord& u, CondMode mode) {
  return mode == CondMode::kArbitrarySpeaker ? u.emotion : u.speaker;
}

tts::TtsConfig fit_tts_config(tts::TtsConfig c, const synth::CorpusManifest& m) {
  c.num_phonemes = m.config.num_phonemes;
  c.feature_dim = m.config.feature_dim;
  c.g_dim = c.mode == CondMode::kArbitrarySpeaker ? m.config.num_emotions : m.config.num_speakers;
  return c;
}

std::vector<tts::TrainExample> tts_examples(const synth::CorpusManifest& m, CondMode mode) {
  std::vector<tts::TrainExample> out;
  for (const synth::UtteranceRecord& u : m.utterances)
    if (u.split == "train" && u.role != synth::SpeakerRole::kUnseen)
      out.push_back({u.phonemes, m.load_spectral(u).x, g_index_for(u, mode)});
  if (out.empty()) throw std::invalid_argument("manifest has no TTS training utterances");
  return out;
}

landmark::DecoderConfig fit_decoder_config(landmark::DecoderConfig c, const synth::CorpusManifest& m,
                                           const tts::TtsModel& tts) {
  c.cond_mode = tts.config().mode;
  c.global_cond_dim = c.cond_mode == CondMode::kArbitrarySpeaker ? tts.config().g_dim : kUtteranceLatentDim;
  c.input_dim = c.mode == landmark::TrainMode::kDirect ? tts.config().feature_dim : tts.config().latent_dim;
  c.num_points = m.config.num_points;
  c.lip_indices = m.lip_indices;
  c.land_fps = m.config.land_fps;
  return c;
}

std::vector<landmark::CachedUtterance> landmark_cache(const tts::TtsModel& tts, const synth::CorpusManifest& m,
                                                      const std::string& split, int threads) {
  const std::vector<const synth::UtteranceRecord*> todo = m.select(synth::SpeakerRole::kPaired, split);
  if (todo.empty()) throw std::invalid_argument("manifest has no paired '" + split + "' utterances");
  std::vector<landmark::CachedUtterance> out(todo.size());
  parallel_for(todo.size(), threads, [&](std::size_t i) {
    const synth::UtteranceRecord& u = *todo[i];
    out[i] = landmark::prepare_utterance(tts, u.id, u.phonemes, m.load_spectral(u).x, m.load_landmarks(u).y,
                                         g_index_for(u, tts.config().mode), m.config.ratio());
  });
  return out;
}

}  // namespace pipeline
}  // namespace uniflg
