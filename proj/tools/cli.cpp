#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "render.hpp"
#include "uniflg/data_synth.hpp"
#include "uniflg/inference.hpp"
#include "uniflg/io.hpp"
#include "uniflg/landmark_decoder.hpp"
#include "uniflg/mas.hpp"
#include "uniflg/metrics.hpp"
#include "uniflg/pipeline.hpp"
#include "uniflg/tts_core.hpp"

namespace uniflg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options shared by the commands that build a recipe.
struct RecipeArgs {
  std::string config;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON recipe file (sections: corpus, tts, tts_train, decoder, landmark_train)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override a recipe key, e.g. --set tts_train.steps=200 (repeatable)");
  }

  // defaults < file < --set; specific flags are applied by the caller afterwards
  pipeline::Recipe resolve() const {
    json j = pipeline::Recipe{};
    if (!config.empty()) {
      std::ifstream in(config);
      json file = json::parse(in, nullptr, false);
      if (file.is_discarded() || !file.is_object()) throw std::invalid_argument(config + ": not a JSON object");
      // reject unknown keys before merging
      try {
        (void)file.get<pipeline::Recipe>();
      } catch (const std::exception& e) {
        throw std::invalid_argument(config + ": " + e.what());
      }
      j.merge_patch(file);
    }
    return pipeline::apply_overrides(j, sets).get<pipeline::Recipe>();
  }
};

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Record of one invocation, written next to its outputs.
struct RunRecord {
  json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  RunRecord(const std::string& command, int argc, const char* const* argv) {
    j["command"] = command;
    j["argv"] = std::vector<std::string>(argv, argv + argc);
    j["started"] = timestamp();
  }
  void write(const fs::path& path) {
    j["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(path, j);
  }
};

std::vector<int> parse_phonemes(const std::string& in) {
  std::string text = in;
  if (fs::is_regular_file(in)) {
    std::ifstream f(in);
    text.assign(std::istreambuf_iterator<char>(f), {});
  }
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream ss(text);
  std::vector<int> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("phoneme input must be integer ids, got '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("no phoneme ids in input");
  return out;
}

Matrix read_features(const fs::path& p) { return io::tensor_matrix(io::read_tensor(p)); }

struct LoadedModels {
  std::unique_ptr<tts::TtsModel> tts;
  std::unique_ptr<landmark::LandmarkDecoder> decoder;
  inference::Models models;
};

LoadedModels load_models(const fs::path& tts_path, const fs::path& lm_path) {
  LoadedModels m;
  m.tts = tts::TtsModel::load(tts_path);
  m.decoder = landmark::LandmarkDecoder::load(lm_path);
  const json extra = json::parse(io::read_checkpoint(tts_path).config_json).value("extra", json::object());
  m.models.tts = m.tts.get();
  m.models.decoder = m.decoder.get();
  m.models.spec_fps = extra.value("spec_fps", 80.0);
  m.models.land_fps = m.decoder->config().land_fps;
  m.models.validate();
  return m;
}

void log_kernel() {
  const mas::KernelInfo k = mas::active_kernel();
  std::cerr << "mas kernel: " << k.name << (k.diagnostic.empty() ? "" : " (" + k.diagnostic + ")") << "\n";
}

// --- commands -----------------------------------------------------------

struct GenData {
  RecipeArgs recipe;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;

  int run(int argc, const char* const* argv) {
    const pipeline::Recipe r = recipe.resolve();
    RunRecord rec("gen-data", argc, argv);
    const synth::CorpusManifest m = synth::gen_corpus(r.corpus, seed, out, threads);
    int paired = 0;
    for (const auto& u : m.utterances) paired += !u.landmark_path.empty();
    std::cerr << "wrote " << m.utterances.size() << " utterances (" << paired << " with landmarks) to " << out << "\n";
    rec.j["seeds"] = {{"corpus", seed}};
    rec.j["corpus"] = r.corpus;
    rec.j["outputs"] = {(fs::path(out) / "manifest.jsonl").string()};
    rec.write(fs::path(out) / "run.json");
    return 0;
  }
};

struct TrainTts {
  RecipeArgs recipe;
  std::string manifest, out, mode;
  int steps = -1;
  std::int64_t seed = -1;
  int threads = 1;

  int run(int argc, const char* const* argv) {
    pipeline::Recipe r = recipe.resolve();
    if (steps >= 0) r.tts_train.steps = steps;
    if (seed >= 0) r.tts_train.seed = static_cast<std::uint64_t>(seed);
    if (!mode.empty()) r.tts.mode = cond_mode_from_string(mode);
    log_kernel();
    const synth::CorpusManifest m = synth::CorpusManifest::read(manifest);
    const tts::TtsConfig cfg = pipeline::fit_tts_config(r.tts, m);
    const std::vector<tts::TrainExample> ex = pipeline::tts_examples(m, cfg.mode);
    tts::TtsModel model(cfg, r.tts_train.seed);
    std::cerr << "training TTS (" << to_string(cfg.mode) << ") on " << ex.size() << " utterances, "
              << model.params().scalar_count() << " parameters, " << r.tts_train.steps << " steps\n";
    RunRecord rec("train-tts", argc, argv);
    fs::create_directories(out);
    std::ofstream log(fs::path(out) / "tts.log.jsonl");
    const int every = std::max(1, r.tts_train.log_every);
    tts::train_tts(model, ex, r.tts_train, [&](const tts::TtsStepLog& s) {
      const json row = {{"step", s.step},  {"total", s.loss.total}, {"recon", s.loss.recon},
                        {"kl_frame", s.loss.kl_frame}, {"kl_utt", s.loss.kl_utt}, {"dur", s.loss.dur},
                        {"grad_norm", s.grad_norm}, {"lr", s.lr}};
      log << row.dump() << "\n";
      if (s.step % every == 0 || s.step + 1 == r.tts_train.steps)
        std::cerr << "step " << s.step << " loss " << s.loss.total << " recon " << s.loss.recon << " dur "
                  << s.loss.dur << "\n";
    });
    const fs::path ckpt = fs::path(out) / "tts.ckpt";
    model.save(ckpt, {{"spec_fps", m.spec_fps()}, {"land_fps", m.land_fps()}, {"corpus_seed", m.seed}});
    rec.j["recipe"] = r;
    rec.j["seeds"] = {{"init_and_training", r.tts_train.seed}, {"corpus", m.seed}};
    rec.j["mas_kernel"] = mas::active_kernel().name;
    rec.j["outputs"] = {ckpt.string()};
    rec.write(fs::path(out) / "tts.run.json");
    std::cerr << "saved " << ckpt.string() << "\n";
    return 0;
  }
};

struct TrainLandmark {
  RecipeArgs recipe;
  std::string manifest, tts_ckpt, out, mode;
  int steps = -1;
  std::int64_t seed = -1;
  int threads = 1;

  int run(int argc, const char* const* argv) {
    pipeline::Recipe r = recipe.resolve();
    if (steps >= 0) r.landmark_train.steps = steps;
    if (seed >= 0) r.landmark_train.seed = static_cast<std::uint64_t>(seed);
    if (!mode.empty()) r.decoder.mode = landmark::train_mode_from_string(mode);
    log_kernel();
    const synth::CorpusManifest m = synth::CorpusManifest::read(manifest);
    const auto tts = tts::TtsModel::load(tts_ckpt);
    const landmark::DecoderConfig cfg = pipeline::fit_decoder_config(r.decoder, m, *tts);
    const std::vector<landmark::CachedUtterance> data = pipeline::landmark_cache(*tts, m, "train", threads);
    landmark::LandmarkDecoder dec(cfg, r.landmark_train.seed);
    std::cerr << "training landmark decoder (" << to_string(cfg.mode) << ") on " << data.size()
              << " paired utterances, " << dec.params().scalar_count() << " parameters\n";
    RunRecord rec("train-landmark", argc, argv);
    const fs::path ckpt = out.empty() ? fs::path(tts_ckpt).parent_path() / "landmark.ckpt" : fs::path(out);
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    std::ofstream log(fs::path(ckpt).replace_extension(".log.jsonl"));
    const int every = 100;
    landmark::train_landmark(dec, data, r.landmark_train, [&](const landmark::LandmarkStepLog& s) {
      log << json{{"step", s.step}, {"modality", to_string(s.modality)}, {"loss", s.loss},
                  {"grad_norm", s.grad_norm}, {"lr", s.lr}}
                 .dump()
          << "\n";
      if (s.step % every == 0 || s.step + 1 == r.landmark_train.steps)
        std::cerr << "step " << s.step << " " << to_string(s.modality) << " loss " << s.loss << "\n";
    });
    dec.save(ckpt, {{"tts_ckpt", fs::absolute(tts_ckpt).string()}});
    rec.j["recipe"] = r;
    rec.j["seeds"] = {{"init_and_training", r.landmark_train.seed}};
    rec.j["outputs"] = {ckpt.string()};
    rec.write(fs::path(ckpt).replace_extension(".run.json"));
    std::cerr << "saved " << ckpt.string() << "\n";
    return 0;
  }
};

struct Infer {
  std::string mode = "text", in, ckpt, tts_ckpt, landmark_ckpt, out, speech_out, reference, zu = "reference";
  std::string manifest, split = "eval", role = "paired";
  std::uint64_t seed = 0;
  int speaker = 0, emotion = 0;
  double temperature = 0.667;

  fs::path tts_path() const { return tts_ckpt.empty() ? fs::path(ckpt) / "tts.ckpt" : fs::path(tts_ckpt); }
  fs::path lm_path() const { return landmark_ckpt.empty() ? fs::path(ckpt) / "landmark.ckpt" : fs::path(landmark_ckpt); }

  // One generation; `x` is the input speech (speech/as) or the reference.
  LandmarkSequence generate(const inference::Models& m, const std::vector<int>& phonemes, const Matrix* x, int spk,
                            int emo, SpectralFrames* speech) const {
    inference::Request req;
    req.g_index = m.tts->config().mode == CondMode::kArbitrarySpeaker ? emo : spk;
    req.seed = seed;
    req.temperature = temperature;
    req.reference = x;
    if (zu == "prior") req.z_u_source = inference::ZuSource::kPrior;
    else if (zu != "reference") throw std::invalid_argument("--zu must be reference or prior");
    if (mode == "text") {
      inference::TextOutput o = inference::infer_text(m, phonemes, req);
      if (speech) *speech = std::move(o.speech);
      return o.landmarks;
    }
    if (mode == "pipelined") {
      inference::PipelinedOutput o = inference::infer_pipelined(m, phonemes, req);
      if (speech) *speech = std::move(o.speech);
      return o.landmarks;
    }
    if (!x) throw std::invalid_argument("mode " + mode + " needs input speech");
    if (mode == "speech") return inference::infer_speech(m, *x, req);
    if (mode == "as") return inference::infer_as(m, *x, one_hot(emo, m.tts->config().g_dim));
    throw std::invalid_argument("unknown --mode " + mode);
  }

  int run(int argc, const char* const* argv) {
    const LoadedModels lm = load_models(tts_path(), lm_path());
    RunRecord rec("infer", argc, argv);
    rec.j["seeds"] = {{"inference", seed}};
    if (!manifest.empty()) return run_batch(lm.models, rec);
    if (in.empty()) throw std::invalid_argument("--in is required without --manifest");
    if (out.empty()) throw std::invalid_argument("--out is required");
    const bool text_like = mode == "text" || mode == "pipelined";
    std::vector<int> phonemes;
    Matrix x;
    if (text_like) {
      phonemes = parse_phonemes(in);
      if (!reference.empty()) x = read_features(reference);
    } else {
      x = read_features(in);
    }
    SpectralFrames speech;
    const LandmarkSequence y = generate(lm.models, phonemes, x.rows ? &x : nullptr, speaker, emotion, &speech);
    io::write_tensor(out, io::landmark_tensor(y.y));
    rec.j["outputs"] = {out};
    if (!speech_out.empty() && speech.frames() > 0) {
      io::write_tensor(speech_out, io::matrix_tensor(speech.x));
      rec.j["outputs"].push_back(speech_out);
    }
    rec.write(fs::path(out).replace_extension(".run.json"));
    std::cerr << "wrote " << y.frames() << " landmark frames to " << out << "\n";
    return 0;
  }

  int run_batch(const inference::Models& m, RunRecord& rec) {
    if (out.empty()) throw std::invalid_argument("--out (a directory) is required");
    const synth::CorpusManifest man = synth::CorpusManifest::read(manifest);
    synth::SpeakerRole r = synth::SpeakerRole::kPaired;
    if (role == "unpaired") r = synth::SpeakerRole::kUnpaired;
    else if (role == "unseen") r = synth::SpeakerRole::kUnseen;
    else if (role != "paired") throw std::invalid_argument("--role must be paired, unpaired or unseen");
    fs::create_directories(out);
    int n = 0;
    for (const synth::UtteranceRecord* u : man.select(r, split)) {
      const Matrix x = man.load_spectral(*u).x;
      const LandmarkSequence y = generate(m, u->phonemes, &x, u->speaker, u->emotion, nullptr);
      io::write_tensor(fs::path(out) / (u->id + ".f32"), io::landmark_tensor(y.y));
      ++n;
    }
    rec.j["outputs"] = {out};
    rec.j["count"] = n;
    rec.write(fs::path(out) / "run.json");
    std::cerr << "wrote " << n << " predictions to " << out << "\n";
    return 0;
  }
};

struct Eval {
  std::string pred, manifest, split = "eval", out;
  int threads = 1;

  int run(int, const char* const*) {
    const synth::CorpusManifest m = synth::CorpusManifest::read(manifest);
    const metrics::EvalReport rep = metrics::evaluate_corpus(pred, m, {split, threads});
    const json j = rep.to_json();
    if (!out.empty()) write_json(out, j);
    std::cout << j["mean"].dump(2) << "\n";
    std::cerr << rep.utterances.size() << " utterances, " << rep.dtw_count << " DTW-aligned\n";
    return 0;
  }
};

struct BenchRtf {
  std::string mode = "all", ckpt, tts_ckpt, landmark_ckpt, manifest, out;
  int repeat = 5, count = 8;
  std::uint64_t seed = 0;

  int run(int argc, const char* const* argv) {
    if (repeat < 5) std::cerr << "note: fewer than 5 timed runs\n";
    const fs::path tp = tts_ckpt.empty() ? fs::path(ckpt) / "tts.ckpt" : fs::path(tts_ckpt);
    const fs::path lp = landmark_ckpt.empty() ? fs::path(ckpt) / "landmark.ckpt" : fs::path(landmark_ckpt);
    const LoadedModels lm = load_models(tp, lp);
    const synth::CorpusManifest man = synth::CorpusManifest::read(manifest);
    std::vector<const synth::UtteranceRecord*> utts = man.select(synth::SpeakerRole::kPaired, "eval");
    if (utts.empty()) utts = man.select(synth::SpeakerRole::kPaired, "");
    if (utts.size() > static_cast<std::size_t>(count)) utts.resize(count);
    if (utts.empty()) throw std::invalid_argument("manifest has no paired utterances to time");
    std::vector<Matrix> xs;
    for (const auto* u : utts) xs.push_back(man.load_spectral(*u).x);
    auto request = [&](std::size_t i) {
      inference::Request r;
      r.g_index = lm.tts->config().mode == CondMode::kArbitrarySpeaker ? utts[i]->emotion : utts[i]->speaker;
      r.reference = &xs[i];
      r.seed = seed;
      return r;
    };
    std::map<std::string, std::function<int()>> paths = {
        {"speech",
         [&] {
           int frames = 0;
           for (std::size_t i = 0; i < utts.size(); ++i) {
             inference::infer_speech(lm.models, xs[i], request(i));
             frames += xs[i].rows;
           }
           return frames;
         }},
        {"text",
         [&] {
           int frames = 0;
           for (std::size_t i = 0; i < utts.size(); ++i)
             frames += inference::infer_text(lm.models, utts[i]->phonemes, request(i)).speech.frames();
           return frames;
         }},
        {"pipelined", [&] {
           int frames = 0;
           for (std::size_t i = 0; i < utts.size(); ++i)
             frames += inference::infer_pipelined(lm.models, utts[i]->phonemes, request(i)).speech.frames();
           return frames;
         }}};
    std::vector<std::string> modes = {"speech", "text", "pipelined"};
    if (mode != "all") {
      if (!paths.count(mode)) throw std::invalid_argument("--mode must be speech, text, pipelined or all");
      modes = {mode};
    }
    RunRecord rec("bench-rtf", argc, argv);
    json report = {{"schema_version", 1}, {"utterances", utts.size()}, {"repeat", repeat}, {"threads", 1}};
    for (const std::string& name : modes) {
      const inference::RtfReport r = inference::rtf_measure(paths[name], lm.models.spec_fps, repeat);
      report["paths"][name] = {{"rtf_median", r.median}, {"runs", r.runs}, {"content_seconds", r.content_seconds}};
      std::cout << name << " rtf " << r.median << "\n";
    }
    if (report["paths"].contains("text") && report["paths"].contains("pipelined")) {
      const double t = report["paths"]["text"]["rtf_median"], p = report["paths"]["pipelined"]["rtf_median"];
      report["text_vs_pipelined_speedup"] = 1.0 - t / p;
      std::cout << "text vs pipelined speedup " << 100.0 * (1.0 - t / p) << "%\n";
    }
    rec.j["report"] = report;
    if (!out.empty()) {
      write_json(out, report);
      rec.write(fs::path(out).replace_extension(".run.json"));
    }
    return 0;
  }
};

struct Render {
  std::string in, out, manifest, lips;
  int size = 256, stride = 1;

  int run(int, const char* const*) {
    LandmarkSequence y;
    const io::TensorFile t = io::read_tensor(in);
    if (t.rank != 3 || t.dims[2] != 2) throw std::invalid_argument(in + " is not a T x N x 2 landmark tensor");
    y.y = io::tensor_matrix(t);
    if (!manifest.empty()) y.lip_indices = synth::CorpusManifest::read(manifest).lip_indices;
    if (!lips.empty()) {
      y.lip_indices.clear();
      for (int v : parse_phonemes(lips)) y.lip_indices.push_back(v);
    }
    for (int k : y.lip_indices)
      if (k < 0 || k >= y.num_points()) throw std::invalid_argument("lip index " + std::to_string(k) + " out of range");
    const int n = render_sequence(y, out, size, stride);
    std::cerr << "wrote " << n << " frames to " << out << "\n";
    return 0;
  }
};

struct MasCorpus {
  std::string out;
  int count = 1000, max_tokens = 128, max_frames = 1024;
  std::uint64_t seed = 0;

  int run(int, const char* const*) {
    mas::write_conformance_corpus(out, count, seed, max_tokens, max_frames);
    std::cerr << "wrote " << count << " lattices and expected.jsonl to " << out << "\n";
    return 0;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Unified text/speech-driven facial landmark generation on a synthetic corpus", "uniflg"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenData gen;
  CLI::App* c_gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  gen.recipe.attach(c_gen);
  c_gen->add_option("--out", gen.out, "output directory")->required();
  c_gen->add_option("--seed", gen.seed, "corpus seed");
  c_gen->add_option("--threads", gen.threads, "render threads")->check(CLI::PositiveNumber);

  TrainTts tt;
  CLI::App* c_tts = app.add_subcommand("train-tts", "train the text/speech latent model");
  tt.recipe.attach(c_tts);
  c_tts->add_option("--manifest", tt.manifest, "corpus manifest.jsonl")->required()->check(CLI::ExistingFile);
  c_tts->add_option("--out", tt.out, "checkpoint directory (tts.ckpt)")->required();
  c_tts->add_option("--steps", tt.steps, "training steps");
  c_tts->add_option("--seed", tt.seed, "initialisation and shuffling seed");
  c_tts->add_option("--mode", tt.mode, "standard | as")->check(CLI::IsMember({"standard", "as"}));

  TrainLandmark tl;
  CLI::App* c_lm = app.add_subcommand("train-landmark", "train the landmark decoder on a frozen TTS");
  tl.recipe.attach(c_lm);
  c_lm->add_option("--manifest", tl.manifest, "corpus manifest.jsonl")->required()->check(CLI::ExistingFile);
  c_lm->add_option("--tts-ckpt", tl.tts_ckpt, "trained TTS checkpoint")->required()->check(CLI::ExistingFile);
  c_lm->add_option("--mode", tl.mode, "mixed | ttl | stl | stl-d")
      ->check(CLI::IsMember({"mixed", "ttl", "stl", "stl-d"}));
  c_lm->add_option("--steps", tl.steps, "training steps");
  c_lm->add_option("--seed", tl.seed, "initialisation and sampling seed");
  c_lm->add_option("--out", tl.out, "checkpoint path (default: landmark.ckpt next to the TTS checkpoint)");
  c_lm->add_option("--threads", tl.threads, "threads for latent caching")->check(CLI::PositiveNumber);

  Infer inf;
  CLI::App* c_inf = app.add_subcommand("infer", "generate landmarks");
  c_inf->add_option("--mode", inf.mode, "text | speech | pipelined | as")
      ->check(CLI::IsMember({"text", "speech", "pipelined", "as"}));
  c_inf->add_option("--in", inf.in, "phoneme ids (text, or a file holding them) or a spectral .f32 file");
  c_inf->add_option("--ckpt", inf.ckpt, "directory holding tts.ckpt and landmark.ckpt");
  c_inf->add_option("--tts-ckpt", inf.tts_ckpt, "TTS checkpoint (overrides --ckpt)");
  c_inf->add_option("--landmark-ckpt", inf.landmark_ckpt, "landmark checkpoint (overrides --ckpt)");
  c_inf->add_option("--seed", inf.seed, "sampling seed");
  c_inf->add_option("--out", inf.out, "landmark .f32 output, or a directory with --manifest");
  c_inf->add_option("--speech-out", inf.speech_out, "spectral .f32 output of the text paths");
  c_inf->add_option("--reference", inf.reference, "reference speech .f32 for z_u");
  c_inf->add_option("--zu", inf.zu, "reference | prior")->check(CLI::IsMember({"reference", "prior"}));
  c_inf->add_option("--speaker", inf.speaker, "speaker index (standard mode)");
  c_inf->add_option("--emotion", inf.emotion, "emotion index (as mode)");
  c_inf->add_option("--temperature", inf.temperature, "prior sampling temperature");
  c_inf->add_option("--manifest", inf.manifest, "batch mode: generate for every utterance of --split/--role");
  c_inf->add_option("--split", inf.split, "batch split");
  c_inf->add_option("--role", inf.role, "batch speaker role: paired | unpaired | unseen");

  Eval ev;
  CLI::App* c_ev = app.add_subcommand("eval", "score predictions against corpus landmarks");
  c_ev->add_option("--pred", ev.pred, "directory of <id>.f32 predictions")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--manifest", ev.manifest, "corpus manifest.jsonl")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--split", ev.split, "split to score (empty = all)");
  c_ev->add_option("--threads", ev.threads, "scoring threads")->check(CLI::PositiveNumber);
  c_ev->add_option("--out", ev.out, "JSON report path");

  BenchRtf br;
  CLI::App* c_br = app.add_subcommand("bench-rtf", "measure real time factors");
  c_br->add_option("--mode", br.mode, "speech | text | pipelined | all");
  c_br->add_option("--ckpt", br.ckpt, "directory holding tts.ckpt and landmark.ckpt");
  c_br->add_option("--tts-ckpt", br.tts_ckpt, "TTS checkpoint");
  c_br->add_option("--landmark-ckpt", br.landmark_ckpt, "landmark checkpoint");
  c_br->add_option("--manifest", br.manifest, "corpus supplying the inputs")->required()->check(CLI::ExistingFile);
  c_br->add_option("--repeat", br.repeat, "timed runs per path (median reported)")->check(CLI::PositiveNumber);
  c_br->add_option("--count", br.count, "utterances per run")->check(CLI::PositiveNumber);
  c_br->add_option("--seed", br.seed, "sampling seed");
  c_br->add_option("--out", br.out, "JSON timing report");

  Render rd;
  CLI::App* c_rd = app.add_subcommand("render", "draw landmark frames as PNG stick figures");
  c_rd->add_option("--in", rd.in, "landmark .f32 (T x N x 2)")->required()->check(CLI::ExistingFile);
  c_rd->add_option("--out", rd.out, "output directory")->required();
  c_rd->add_option("--manifest", rd.manifest, "corpus manifest for the lip loop");
  c_rd->add_option("--lips", rd.lips, "lip loop indices, e.g. 12,13,14");
  c_rd->add_option("--size", rd.size, "image size in pixels")->check(CLI::Range(16, 4096));
  c_rd->add_option("--stride", rd.stride, "render every n-th frame")->check(CLI::PositiveNumber);

  MasCorpus mc;
  CLI::App* c_mc = app.add_subcommand("mas-corpus", "write the alignment-kernel conformance corpus");
  c_mc->add_option("--out", mc.out, "output directory")->required();
  c_mc->add_option("--count", mc.count, "instances")->check(CLI::PositiveNumber);
  c_mc->add_option("--seed", mc.seed, "seed");
  c_mc->add_option("--max-tokens", mc.max_tokens, "largest token count")->check(CLI::PositiveNumber);
  c_mc->add_option("--max-frames", mc.max_frames, "largest frame count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (c_gen->parsed()) return gen.run(argc, argv);
    if (c_tts->parsed()) return tt.run(argc, argv);
    if (c_lm->parsed()) return tl.run(argc, argv);
    if (c_inf->parsed()) return inf.run(argc, argv);
    if (c_ev->parsed()) return ev.run(argc, argv);
    if (c_br->parsed()) return br.run(argc, argv);
    if (c_rd->parsed()) return rd.run(argc, argv);
    if (c_mc->parsed()) return mc.run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace uniflg::cli
