#pragma once

// Glue between a corpus manifest and the models: recipe files, training
// sets, landmark caches. Used by the CLI and by the end-to-end tests so both
// build models the same way.

#include <string>
#include <vector>

#include "json.hpp"
#include "uniflg/data_synth.hpp"
#include "uniflg/landmark_decoder.hpp"
#include "uniflg/tts_core.hpp"

namespace uniflg {
namespace nn {
void to_json(nlohmann::json& j, const AdamWConfig& c);
void from_json(const nlohmann::json& j, AdamWConfig& c);
}  // namespace nn
namespace tts {
void to_json(nlohmann::json& j, const TtsTrainConfig& c);
void from_json(const nlohmann::json& j, TtsTrainConfig& c);
}  // namespace tts
namespace landmark {
void to_json(nlohmann::json& j, const LandmarkTrainConfig& c);
void from_json(const nlohmann::json& j, LandmarkTrainConfig& c);
}  // namespace landmark
}  // namespace uniflg

namespace uniflg::pipeline {

/// Everything a run needs besides the data. Sections and keys that are
/// absent keep their defaults; unknown ones are rejected.
struct Recipe {
  synth::CorpusConfig corpus;
  tts::TtsConfig tts;
  tts::TtsTrainConfig tts_train;
  landmark::DecoderConfig decoder;
  landmark::LandmarkTrainConfig landmark_train;
  double temperature = 0.667;  // inference-time prior temperature
};

void to_json(nlohmann::json& j, const Recipe& r);
void from_json(const nlohmann::json& j, Recipe& r);
Recipe load_recipe(const std::filesystem::path& path);

/// Applies dotted overrides such as "tts_train.steps=200" (value parsed as
/// JSON, falling back to a string) on top of `base`.
nlohmann::json apply_overrides(nlohmann::json base, const std::vector<std::string>& overrides);

/// TTS one-hot index of an utterance: the speaker in standard mode, the
/// emotion in arbitrary-speaker mode.
int g_index_for(const synth::UtteranceRecord& u, CondMode mode);

/// Copies the corpus-determined sizes into a TTS config.
tts::TtsConfig fit_tts_config(tts::TtsConfig c, const synth::CorpusManifest& m);

/// Training split of every speaker the TTS may see (paired and unpaired).
std::vector<tts::TrainExample> tts_examples(const synth::CorpusManifest& m, CondMode mode);

/// Copies corpus and TTS sizes into a decoder config.
landmark::DecoderConfig fit_decoder_config(landmark::DecoderConfig c, const synth::CorpusManifest& m,
                                           const tts::TtsModel& tts);

/// Paired utterances of `split` prepared for landmark training.
std::vector<landmark::CachedUtterance> landmark_cache(const tts::TtsModel& tts, const synth::CorpusManifest& m,
                                                      const std::string& split = "train", int threads = 1);

}  // namespace uniflg::pipeline
