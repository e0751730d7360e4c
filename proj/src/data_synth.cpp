#include "uniflg/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "uniflg/io.hpp"
#include "uniflg/length_ops.hpp"
#include "uniflg/parallel.hpp"
#include "uniflg/rng.hpp"

namespace uniflg::synth {

using nlohmann::json;

namespace {

// Stream ids for Rng(seed, {stream, ...}).
enum Stream : std::uint64_t {
  kPhoneTable = 1,
  kSpeakerTable = 2,
  kEmotionTable = 3,
  kHeadMotion = 4,
  kEmotionFace = 5,
  kLandmarkNoise = 6,
  kUtteranceText = 7,
  kSpectralNoise = 8,
};

constexpr double kMouthCenterX = 0.0;
constexpr double kMouthCenterY = -0.45;

double lip_half_width(double width) { return 0.16 + 0.08 * width; }
double lip_half_height(double openness) { return 0.01 + 0.14 * openness; }

}  // namespace

PhonemeInventory PhonemeInventory::standard(int count) {
  if (count < 8) throw std::invalid_argument("phoneme inventory needs at least 8 phonemes");
  PhonemeInventory inv;
  inv.silence_id = 0;
  inv.targets.push_back({0.0, 0.5});
  inv.base_duration.push_back(10);
  const int m = count - 1;
  for (int i = 1; i < count; ++i) {
    MouthShape s;
    s.openness = 0.1 + 0.9 * static_cast<double>((i * 5) % m) / (m - 1);
    s.width = 0.2 + 0.8 * static_cast<double>((i * 3) % m) / (m - 1);
    inv.targets.push_back(s);
    inv.base_duration.push_back(6 + (i * 7) % 9);
  }
  return inv;
}

void PhonemeInventory::validate() const {
  if (size() < 8) throw std::invalid_argument("phoneme inventory needs at least 8 phonemes");
  if (base_duration.size() != targets.size())
    throw std::invalid_argument("phoneme inventory: one duration per phoneme required");
  if (silence_id < 0 || silence_id >= size()) throw std::invalid_argument("bad silence id");
  for (const MouthShape& s : targets)
    if (s.openness < 0 || s.openness > 1 || s.width < 0 || s.width > 1)
      throw std::invalid_argument("mouth shape outside [0, 1]");
  if (targets[silence_id].openness != 0.0) throw std::invalid_argument("silence must be closed");
  for (int d : base_duration)
    if (d < 1) throw std::invalid_argument("base durations must be >= 1 frame");
}

FaceLayout FaceLayout::make(int num_points, int lip_points) {
  if (lip_points < 3) throw std::invalid_argument("face layout needs at least 3 lip points");
  if (num_points - lip_points < 2)
    throw std::invalid_argument("face layout needs at least 2 non-lip points");
  FaceLayout f;
  f.num_points = num_points;
  f.rest = Matrix(num_points, 2);
  const int others = num_points - lip_points;
  const int jaw = (others + 1) / 2;
  for (int k = 0; k < jaw; ++k) {
    const double a0 = std::numbers::pi + 0.35, a1 = 2 * std::numbers::pi - 0.35;
    const double th = jaw == 1 ? 1.5 * std::numbers::pi : a0 + (a1 - a0) * k / (jaw - 1);
    f.rest(k, 0) = 0.75 * std::cos(th);
    f.rest(k, 1) = 0.85 * std::sin(th);
  }
  const int upper = others - jaw;
  for (int k = 0; k < upper; ++k) {
    f.rest(jaw + k, 0) = upper == 1 ? 0.0 : -0.5 + 1.0 * k / (upper - 1);
    f.rest(jaw + k, 1) = 0.35 + 0.1 * std::abs(std::sin(k * 1.7));
  }
  for (int j = 0; j < lip_points; ++j) {
    const int idx = others + j;
    f.lip_indices.push_back(idx);
    const double th = 2 * std::numbers::pi * j / lip_points;
    f.rest(idx, 0) = kMouthCenterX + lip_half_width(0.5) * std::cos(th);
    f.rest(idx, 1) = kMouthCenterY + lip_half_height(0.0) * std::sin(th);
  }
  return f;
}

void CorpusConfig::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid corpus config: " + why); };
  if (num_speakers < 1) fail("num_speakers must be >= 1");
  if (num_paired_speakers < 0 || num_paired_speakers > num_speakers)
    fail("num_paired_speakers must lie in [0, num_speakers]");
  if (num_unseen_speakers < 0) fail("num_unseen_speakers must be >= 0");
  if (num_emotions < 1) fail("num_emotions must be >= 1");
  if (utterances_per_speaker < 0 || paired_utterances < 0 || unseen_utterances < 0)
    fail("utterance counts must be non-negative");
  const long total = static_cast<long>(num_paired_speakers) * paired_utterances +
                     static_cast<long>(num_speakers - num_paired_speakers) * utterances_per_speaker +
                     static_cast<long>(num_unseen_speakers) * unseen_utterances;
  if (total <= 0) fail("configuration produces zero utterances");
  if (!(land_fps > 0.0)) fail("land_fps must be positive");
  if (!(land_fps < spec_fps))
    fail("land_fps (" + std::to_string(land_fps) + ") must be below spec_fps (" +
         std::to_string(spec_fps) + ")");
  if (num_phonemes < 8) fail("num_phonemes must be >= 8");
  if (min_phonemes < 1 || max_phonemes < min_phonemes) fail("need 1 <= min_phonemes <= max_phonemes");
  if (lip_points < 3) fail("lip_points must be >= 3");
  if (num_points - lip_points < 2) fail("num_points must exceed lip_points by at least 2");
  if (feature_dim < 1) fail("feature_dim must be >= 1");
  if (spectral_noise < 0 || landmark_noise < 0 || head_motion < 0) fail("noise levels must be >= 0");
  if (eval_fraction < 0 || eval_fraction >= 1) fail("eval_fraction must lie in [0, 1)");
  if (duration_jitter < 0 || fixed_duration < 0) fail("durations must be non-negative");
  if (fixed_duration > 0 && fixed_duration * ratio() < 1.0)
    fail("fixed_duration too short to give every phoneme a landmark frame");
}

#define UNIFLG_CORPUS_FIELDS(X)                                                                \
  X(num_speakers) X(num_paired_speakers) X(num_unseen_speakers) X(num_emotions)                \
  X(utterances_per_speaker) X(paired_utterances) X(unseen_utterances) X(eval_fraction)         \
  X(num_phonemes) X(min_phonemes) X(max_phonemes) X(spec_fps) X(land_fps) X(num_points)        \
  X(lip_points) X(feature_dim) X(spectral_noise) X(landmark_noise) X(duration_jitter)          \
  X(fixed_duration) X(head_motion) X(emotion_face_offset)

void to_json(json& j, const CorpusConfig& c) {
  j = json::object();
#define X(f) j[#f] = c.f;
  UNIFLG_CORPUS_FIELDS(X)
#undef X
}

void from_json(const json& j, CorpusConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("corpus config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
#define X(f)                       \
  if (key == #f) {                 \
    value.get_to(c.f);             \
    known = true;                  \
  }
    UNIFLG_CORPUS_FIELDS(X)
#undef X
    if (!known) throw std::invalid_argument("unknown corpus config key '" + key + "'");
  }
}

std::string to_string(SpeakerRole r) {
  switch (r) {
    case SpeakerRole::kPaired:
      return "paired";
    case SpeakerRole::kUnseen:
      return "unseen";
    case SpeakerRole::kUnpaired:
      break;
  }
  return "unpaired";
}

namespace {

SpeakerRole role_from_string(const std::string& s) {
  if (s == "paired") return SpeakerRole::kPaired;
  if (s == "unpaired") return SpeakerRole::kUnpaired;
  if (s == "unseen") return SpeakerRole::kUnseen;
  throw std::runtime_error("manifest: unknown speaker role '" + s + "'");
}

json record_json(const UtteranceRecord& u) {
  json j;
  j["type"] = "utterance";
  j["id"] = u.id;
  j["index"] = u.index;
  j["speaker"] = u.speaker;
  j["emotion"] = u.emotion;
  j["role"] = to_string(u.role);
  j["split"] = u.split;
  j["phonemes"] = u.phonemes;
  j["durations_spec"] = u.durations_spec;
  j["durations_land"] = u.durations_land;
  j["spec_frames"] = u.spec_frames;
  j["land_frames"] = u.land_frames;
  j["spectral_path"] = u.spectral_path;
  j["landmark_path"] = u.landmark_path;
  return j;
}

UtteranceRecord record_from_json(const json& j) {
  UtteranceRecord u;
  u.id = j.at("id").get<std::string>();
  u.index = j.at("index").get<int>();
  u.speaker = j.at("speaker").get<int>();
  u.emotion = j.at("emotion").get<int>();
  u.role = role_from_string(j.at("role").get<std::string>());
  u.split = j.at("split").get<std::string>();
  u.phonemes = j.at("phonemes").get<std::vector<int>>();
  u.durations_spec = j.at("durations_spec").get<std::vector<int>>();
  u.durations_land = j.at("durations_land").get<std::vector<int>>();
  u.spec_frames = j.at("spec_frames").get<int>();
  u.land_frames = j.at("land_frames").get<int>();
  u.spectral_path = j.at("spectral_path").get<std::string>();
  u.landmark_path = j.at("landmark_path").get<std::string>();
  return u;
}

}  // namespace

void CorpusManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  json head;
  head["type"] = "corpus";
  head["version"] = 1;
  head["seed"] = seed;
  head["config"] = config;
  head["lip_indices"] = lip_indices;
  out << head.dump() << '\n';
  for (const UtteranceRecord& u : utterances) out << record_json(u).dump() << '\n';
}

CorpusManifest CorpusManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  CorpusManifest m;
  m.root = path.parent_path();
  std::string line;
  bool have_head = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "corpus") {
      if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported manifest version");
      m.seed = j.at("seed").get<std::uint64_t>();
      m.config = j.at("config").get<CorpusConfig>();
      m.lip_indices = j.at("lip_indices").get<std::vector<int>>();
      have_head = true;
    } else if (type == "utterance") {
      m.utterances.push_back(record_from_json(j));
    } else {
      throw std::runtime_error("manifest: unknown record type '" + type + "'");
    }
  }
  if (!have_head) throw std::runtime_error("manifest lacks a corpus header: " + path.string());
  m.config.validate();
  for (int k : m.lip_indices)
    if (k < 0 || k >= m.config.num_points) throw std::runtime_error("manifest: lip index out of range");
  return m;
}

void CorpusManifest::validate_files() const {
  for (const UtteranceRecord& u : utterances) {
    const auto spec = io::read_tensor(root / u.spectral_path);
    if (spec.rank != 2 || static_cast<int>(spec.dims[0]) != u.spec_frames ||
        static_cast<int>(spec.dims[1]) != config.feature_dim)
      throw std::runtime_error("spectral file shape mismatch for " + u.id);
    if (!u.landmark_path.empty()) {
      const auto lmk = io::read_tensor(root / u.landmark_path);
      if (lmk.rank != 3 || static_cast<int>(lmk.dims[0]) != u.land_frames ||
          static_cast<int>(lmk.dims[1]) != config.num_points || lmk.dims[2] != 2)
        throw std::runtime_error("landmark file shape mismatch for " + u.id);
    }
  }
}

SpectralFrames CorpusManifest::load_spectral(const UtteranceRecord& u) const {
  return SpectralFrames{io::tensor_matrix(io::read_tensor(root / u.spectral_path))};
}

LandmarkSequence CorpusManifest::load_landmarks(const UtteranceRecord& u) const {
  if (u.landmark_path.empty()) throw std::runtime_error("utterance " + u.id + " has no landmarks");
  LandmarkSequence s;
  s.y = io::tensor_matrix(io::read_tensor(root / u.landmark_path));
  s.fps = config.land_fps;
  s.lip_indices = lip_indices;
  return s;
}

std::vector<const UtteranceRecord*> CorpusManifest::select(SpeakerRole role,
                                                           const std::string& split) const {
  std::vector<const UtteranceRecord*> out;
  for (const UtteranceRecord& u : utterances)
    if (u.role == role && (split.empty() || u.split == split)) out.push_back(&u);
  return out;
}

SyntheticWorld::SyntheticWorld(CorpusConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  inventory_ = PhonemeInventory::standard(config_.num_phonemes);
  layout_ = FaceLayout::make(config_.num_points, config_.lip_points);
  const int f = config_.feature_dim;
  const int speakers = config_.total_speakers();
  const int emotions = config_.num_emotions;

  phone_ = Matrix(config_.num_phonemes, f);
  Rng phone_rng(seed_, {kPhoneTable});
  for (double& v : phone_.data) v = phone_rng.normal();

  spk_scale_ = Matrix(speakers, f);
  spk_offset_ = Matrix(speakers, f);
  for (int s = 0; s < speakers; ++s) {
    Rng r(seed_, {kSpeakerTable, static_cast<std::uint64_t>(s)});
    for (int k = 0; k < f; ++k) spk_scale_(s, k) = r.uniform(-0.3, 0.3);
    for (int k = 0; k < f; ++k) spk_offset_(s, k) = 0.6 * r.normal();
  }
  emo_offset_ = Matrix(emotions, f);
  emo_face_ = Matrix(emotions, 2 * config_.num_points);
  for (int e = 0; e < emotions; ++e) {
    Rng r(seed_, {kEmotionTable, static_cast<std::uint64_t>(e)});
    for (int k = 0; k < f; ++k) emo_offset_(e, k) = 0.6 * r.normal();
    Rng rf(seed_, {kEmotionFace, static_cast<std::uint64_t>(e)});
    for (int p = 0; p < config_.num_points - config_.lip_points; ++p) {
      emo_face_(e, 2 * p) = config_.emotion_face_offset * rf.normal();
      emo_face_(e, 2 * p + 1) = config_.emotion_face_offset * rf.normal();
    }
  }
  head_params_ = Matrix(speakers * emotions, 4);
  for (int s = 0; s < speakers; ++s)
    for (int e = 0; e < emotions; ++e) {
      Rng r(seed_, {kHeadMotion, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(e)});
      const int row = s * emotions + e;
      head_params_(row, 0) = config_.head_motion * r.uniform(0.5, 1.5);
      head_params_(row, 1) = config_.head_motion * r.uniform(0.5, 1.5);
      head_params_(row, 2) = r.uniform(0.3, 0.9);
      head_params_(row, 3) = r.uniform(0.0, 2 * std::numbers::pi);
    }
}

void SyntheticWorld::check_ids(const std::vector<int>& phonemes, int speaker, int emotion) const {
  for (int p : phonemes)
    if (p < 0 || p >= inventory_.size())
      throw std::invalid_argument("unknown phoneme id " + std::to_string(p));
  if (speaker < 0 || speaker >= config_.total_speakers())
    throw std::invalid_argument("unknown speaker id " + std::to_string(speaker));
  if (emotion < 0 || emotion >= config_.num_emotions)
    throw std::invalid_argument("unknown emotion id " + std::to_string(emotion));
}

std::vector<MouthShape> SyntheticWorld::mouth_trace(const std::vector<int>& phonemes,
                                                    const std::vector<int>& durations_land) const {
  if (phonemes.size() != durations_land.size())
    throw std::invalid_argument("mouth_trace: phoneme/duration count mismatch");
  for (int p : phonemes)
    if (p < 0 || p >= inventory_.size())
      throw std::invalid_argument("unknown phoneme id " + std::to_string(p));
  std::vector<MouthShape> out;
  MouthShape current = inventory_.targets[inventory_.silence_id];
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    if (durations_land[i] <= 0) throw std::invalid_argument("mouth_trace: non-positive duration");
    const MouthShape start = current;
    const MouthShape& target = inventory_.targets[phonemes[i]];
    for (int k = 0; k < durations_land[i]; ++k) {
      const double a = k < kTransitionFrames ? static_cast<double>(k + 1) / (kTransitionFrames + 1) : 1.0;
      current.openness = start.openness + (target.openness - start.openness) * a;
      current.width = start.width + (target.width - start.width) * a;
      if (a == 1.0) current = target;
      out.push_back(current);
    }
  }
  return out;
}

LandmarkSequence SyntheticWorld::oracle_articulate(const std::vector<int>& phonemes,
                                                   const std::vector<int>& durations_land,
                                                   int speaker, int emotion) const {
  check_ids(phonemes, speaker, emotion);
  const std::vector<MouthShape> trace = mouth_trace(phonemes, durations_land);
  const int n = config_.num_points;
  const int lips = config_.lip_points;
  const int others = n - lips;
  LandmarkSequence seq;
  seq.fps = config_.land_fps;
  seq.lip_indices = layout_.lip_indices;
  seq.y = Matrix(static_cast<int>(trace.size()), 2 * n);
  const int row = speaker * config_.num_emotions + emotion;
  const double ax = head_params_(row, 0), ay = head_params_(row, 1);
  const double freq = head_params_(row, 2), phase = head_params_(row, 3);
  for (int t = 0; t < seq.y.rows; ++t) {
    const double w = 2 * std::numbers::pi * freq * t / config_.land_fps + phase;
    const double dx = ax * std::sin(w);
    const double dy = ay * std::sin(w + 1.3);
    for (int p = 0; p < others; ++p) {
      seq.y(t, 2 * p) = layout_.rest(p, 0) + emo_face_(emotion, 2 * p) + dx;
      seq.y(t, 2 * p + 1) = layout_.rest(p, 1) + emo_face_(emotion, 2 * p + 1) + dy;
    }
    const double hw = lip_half_width(trace[t].width);
    const double hh = lip_half_height(trace[t].openness);
    for (int j = 0; j < lips; ++j) {
      const double th = 2 * std::numbers::pi * j / lips;
      const int p = others + j;
      seq.y(t, 2 * p) = kMouthCenterX + hw * std::cos(th);
      seq.y(t, 2 * p + 1) = kMouthCenterY + hh * std::sin(th);
    }
  }
  return seq;
}

std::vector<double> SyntheticWorld::clean_frame(int phoneme, int speaker, int emotion) const {
  check_ids({phoneme}, speaker, emotion);
  std::vector<double> f(config_.feature_dim);
  for (int k = 0; k < config_.feature_dim; ++k)
    f[k] = phone_(phoneme, k) * (1.0 + spk_scale_(speaker, k)) + spk_offset_(speaker, k) +
           emo_offset_(emotion, k);
  return f;
}

SpectralFrames SyntheticWorld::render_spectral(const std::vector<int>& phonemes,
                                               const std::vector<int>& durations_spec, int speaker,
                                               int emotion, std::uint64_t noise_stream) const {
  check_ids(phonemes, speaker, emotion);
  if (phonemes.size() != durations_spec.size())
    throw std::invalid_argument("render_spectral: phoneme/duration count mismatch");
  int total = 0;
  for (int d : durations_spec) {
    if (d <= 0) throw std::invalid_argument("render_spectral: non-positive duration");
    total += d;
  }
  SpectralFrames out{Matrix(total, config_.feature_dim)};
  Rng noise(seed_, {kSpectralNoise, noise_stream});
  int t = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    const std::vector<double> clean = clean_frame(phonemes[i], speaker, emotion);
    for (int k = 0; k < durations_spec[i]; ++k, ++t)
      for (int c = 0; c < config_.feature_dim; ++c)
        out.x(t, c) = clean[c] + config_.spectral_noise * noise.normal();
  }
  return out;
}

void SyntheticWorld::sample_utterance(int index, std::vector<int>& phonemes,
                                      std::vector<int>& durations_spec) const {
  Rng r(seed_, {kUtteranceText, static_cast<std::uint64_t>(index)});
  const int count = r.uniform_int(config_.min_phonemes, config_.max_phonemes);
  phonemes.clear();
  durations_spec.clear();
  phonemes.push_back(inventory_.silence_id);
  // No phoneme repeats its predecessor: a doubled phoneme is one long sound,
  // and its split would be a tie for the aligner.
  for (int i = 0; i < count; ++i) {
    if (i == 0) {
      phonemes.push_back(r.uniform_int(1, inventory_.size() - 1));
      continue;
    }
    int p = r.uniform_int(1, inventory_.size() - 2);
    if (p >= phonemes.back()) ++p;
    phonemes.push_back(p);
  }
  phonemes.push_back(inventory_.silence_id);
  for (int p : phonemes) {
    int d = config_.fixed_duration;
    if (d == 0) {
      d = inventory_.base_duration[p] + r.uniform_int(-config_.duration_jitter, config_.duration_jitter);
      // keep at least one landmark frame per phoneme on average
      d = std::max(d, static_cast<int>(std::ceil(1.0 / config_.ratio())));
    }
    durations_spec.push_back(d);
  }
}

CorpusManifest gen_corpus(const CorpusConfig& config, std::uint64_t seed,
                          const std::filesystem::path& out_dir, int threads) {
  const SyntheticWorld world(config, seed);
  CorpusManifest m;
  m.config = config;
  m.seed = seed;
  m.lip_indices = world.layout().lip_indices;
  m.root = out_dir;

  auto add_speaker = [&](int speaker, SpeakerRole role, int count) {
    const int n_eval = role == SpeakerRole::kUnseen
                           ? count
                           : static_cast<int>(std::llround(count * config.eval_fraction));
    for (int i = 0; i < count; ++i) {
      UtteranceRecord u;
      u.index = static_cast<int>(m.utterances.size());
      char id[32];
      std::snprintf(id, sizeof(id), "spk%02d_%04d", speaker, i);
      u.id = id;
      u.speaker = speaker;
      u.emotion = i % config.num_emotions;
      u.role = role;
      u.split = i >= count - n_eval ? "eval" : "train";
      u.spectral_path = "spectral/" + u.id + ".f32";
      if (role == SpeakerRole::kPaired) u.landmark_path = "landmarks/" + u.id + ".f32";
      m.utterances.push_back(std::move(u));
    }
  };
  for (int s = 0; s < config.num_speakers; ++s) {
    const bool paired = s < config.num_paired_speakers;
    add_speaker(s, paired ? SpeakerRole::kPaired : SpeakerRole::kUnpaired,
                paired ? config.paired_utterances : config.utterances_per_speaker);
  }
  for (int s = 0; s < config.num_unseen_speakers; ++s)
    add_speaker(config.num_speakers + s, SpeakerRole::kUnseen, config.unseen_utterances);

  std::filesystem::create_directories(out_dir / "spectral");
  if (config.num_paired_speakers > 0) std::filesystem::create_directories(out_dir / "landmarks");

  auto render_one = [&](UtteranceRecord& u) {
    world.sample_utterance(u.index, u.phonemes, u.durations_spec);
    u.durations_land = durations_to_land(u.durations_spec, config.ratio());
    u.spec_frames = 0;
    for (int d : u.durations_spec) u.spec_frames += d;
    u.land_frames = 0;
    for (int d : u.durations_land) u.land_frames += d;
    const SpectralFrames x =
        world.render_spectral(u.phonemes, u.durations_spec, u.speaker, u.emotion, u.index);
    io::write_tensor(out_dir / u.spectral_path, io::matrix_tensor(x.x));
    if (!u.landmark_path.empty()) {
      LandmarkSequence y = world.oracle_articulate(u.phonemes, u.durations_land, u.speaker, u.emotion);
      if (config.landmark_noise > 0.0) {
        Rng noise(seed, {kLandmarkNoise, static_cast<std::uint64_t>(u.index)});
        for (double& v : y.y.data) v += config.landmark_noise * noise.normal();
      }
      io::write_tensor(out_dir / u.landmark_path, io::landmark_tensor(y.y));
    }
  };

  parallel_for(m.utterances.size(), threads, [&](std::size_t i) { render_one(m.utterances[i]); });
  m.write(out_dir / "manifest.jsonl");
  return m;
}

}  // namespace uniflg::synth
