#include "uniflg/landmark_decoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uniflg/io.hpp"
#include "uniflg/length_ops.hpp"
#include "uniflg/mas.hpp"

namespace uniflg::landmark {

using nlohmann::json;

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kText:
      return "ttl";
    case TrainMode::kSpeech:
      return "stl";
    case TrainMode::kDirect:
      return "stl-d";
    case TrainMode::kMixed:
      break;
  }
  return "mixed";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "mixed") return TrainMode::kMixed;
  if (s == "ttl") return TrainMode::kText;
  if (s == "stl") return TrainMode::kSpeech;
  if (s == "stl-d") return TrainMode::kDirect;
  throw std::invalid_argument("unknown training mode '" + s + "' (expected mixed, ttl, stl or stl-d)");
}

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kSpeech:
      return "speech";
    case Modality::kDirect:
      return "direct";
    case Modality::kText:
      break;
  }
  return "text";
}

void DecoderConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid decoder config: " + what);
  };
  need(layers >= 1 && channels >= 1, "layers and channels must be >= 1");
  need(kernel >= 1 && kernel % 2 == 1, "kernel must be odd");
  need(dilation >= 1, "dilation must be >= 1");
  need(global_cond_dim >= 1, "global_cond_dim must be >= 1");
  need(input_dim >= 1, "input_dim must be >= 1");
  need(num_points >= 1, "num_points must be >= 1");
  for (int k : lip_indices) need(k >= 0 && k < num_points, "lip index out of range");
  need(land_fps > 0, "land_fps must be positive");
}

void to_json(json& j, const DecoderConfig& c) {
  j = json{{"layers", c.layers},
           {"channels", c.channels},
           {"kernel", c.kernel},
           {"dilation", c.dilation},
           {"global_cond_dim", c.global_cond_dim},
           {"input_dim", c.input_dim},
           {"num_points", c.num_points},
           {"lip_indices", c.lip_indices},
           {"land_fps", c.land_fps},
           {"mode", to_string(c.mode)},
           {"cond_mode", to_string(c.cond_mode)}};
}

void from_json(const json& j, DecoderConfig& c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "layers") v.get_to(c.layers);
    else if (key == "channels") v.get_to(c.channels);
    else if (key == "kernel") v.get_to(c.kernel);
    else if (key == "dilation") v.get_to(c.dilation);
    else if (key == "global_cond_dim") v.get_to(c.global_cond_dim);
    else if (key == "input_dim") v.get_to(c.input_dim);
    else if (key == "num_points") v.get_to(c.num_points);
    else if (key == "lip_indices") v.get_to(c.lip_indices);
    else if (key == "land_fps") v.get_to(c.land_fps);
    else if (key == "mode") c.mode = train_mode_from_string(v.get<std::string>());
    else if (key == "cond_mode") c.cond_mode = cond_mode_from_string(v.get<std::string>());
    else throw std::invalid_argument("unknown decoder config key '" + key + "'");
  }
}

LandmarkDecoder::LandmarkDecoder(DecoderConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed, {0x1a4d});
  pre_ = nn::Dense::make(store_, "pre", cfg_.input_dim, cfg_.channels, rng);
  net_ = nn::WaveNet::make(store_, "net", cfg_.channels, cfg_.layers, cfg_.kernel, cfg_.dilation,
                           cfg_.global_cond_dim, rng);
  post_ = nn::Dense::make(store_, "post", cfg_.channels, 2 * cfg_.num_points, rng);
}

Var LandmarkDecoder::forward(Tape& t, Var input, Var global) const {
  if (input.cols() != cfg_.input_dim)
    throw std::invalid_argument("landmark decoder expects " + std::to_string(cfg_.input_dim) + " input dims, got " +
                                std::to_string(input.cols()));
  if (global.rows() != 1 || global.cols() != cfg_.global_cond_dim)
    throw std::invalid_argument("landmark decoder expects a 1 x " + std::to_string(cfg_.global_cond_dim) +
                                " global condition");
  return post_(t, net_(t, pre_(t, input), global));
}

LandmarkSequence LandmarkDecoder::run(const Matrix& input, const Matrix& global) const {
  if (input.rows < 1) throw std::invalid_argument("landmark decoder: empty input");
  Tape t(false);
  LandmarkSequence y;
  y.y = forward(t, t.constant(input), t.constant(global)).value();
  y.fps = cfg_.land_fps;
  y.lip_indices = cfg_.lip_indices;
  return y;
}

LandmarkSequence LandmarkDecoder::decode_landmarks(const LatentSequence& f_land, const Matrix& global) const {
  if (cfg_.mode == TrainMode::kDirect)
    throw std::invalid_argument("this decoder takes spectral features (stl-d); use decode_direct");
  if (f_land.rate != RateTag::kLand) throw std::invalid_argument("decode_landmarks expects landmark-rate latents");
  if (f_land.space != SpaceTag::kFlow) throw std::invalid_argument("decode_landmarks expects flow-space latents");
  return run(f_land.values, global);
}

LandmarkSequence LandmarkDecoder::decode_direct(const Matrix& x_land, const Matrix& global) const {
  if (cfg_.mode != TrainMode::kDirect) throw std::invalid_argument("decoder was not trained on direct input");
  return run(x_land, global);
}

Matrix LandmarkDecoder::global_from(const ConditioningBundle& b) const {
  if (cfg_.cond_mode != b.mode)
    throw std::invalid_argument("decoder trained in " + to_string(cfg_.cond_mode) + " mode received a " +
                                to_string(b.mode) + " bundle");
  if (cfg_.cond_mode == CondMode::kArbitrarySpeaker) {
    b.validate(cfg_.global_cond_dim);
    return Matrix::from_rows({b.g});
  }
  if (b.z_u.rows != 1 || b.z_u.cols != kUtteranceLatentDim) throw std::invalid_argument("bundle lacks z_u");
  return b.z_u;
}

void LandmarkDecoder::save(const std::filesystem::path& path, const json& extra) const {
  json j;
  j["kind"] = "landmark";
  j["config"] = cfg_;
  if (!extra.is_null()) j["extra"] = extra;
  io::save_checkpoint(path, store_, j.dump());
}

std::unique_ptr<LandmarkDecoder> LandmarkDecoder::load(const std::filesystem::path& path) {
  const io::Checkpoint ck = io::read_checkpoint(path);
  const json j = json::parse(ck.config_json);
  if (j.value("kind", "") != "landmark") throw std::runtime_error(path.string() + " is not a landmark checkpoint");
  auto dec = std::make_unique<LandmarkDecoder>(j.at("config").get<DecoderConfig>(), 0);
  io::load_into(ck, dec->params());
  return dec;
}

CachedUtterance prepare_utterance(const tts::TtsModel& tts, const std::string& id, const std::vector<int>& phonemes,
                                  const Matrix& x, const Matrix& target, int g_index, double ratio) {
  CachedUtterance u;
  u.id = id;
  u.target = target;
  const ConditioningBundle b = tts.bundle_for(g_index, &x);
  u.global = tts.config().mode == CondMode::kArbitrarySpeaker ? Matrix::from_rows({b.g}) : b.z_u_mean;

  const tts::PosteriorResult post = tts.posterior_encode(x, b, nullptr);
  const tts::FlowResult fz = tts.flow_forward(post.z, b);
  u.speech = resample_linear(fz.out, target.rows);
  u.text_prior = tts.text_encode(phonemes, b).prior;
  u.d_spec = mas::align(mas::loglik_lattice(fz.out.values, u.text_prior)).durations;
  u.d_land = durations_to_land(u.d_spec, ratio);
  if (std::accumulate(u.d_land.begin(), u.d_land.end(), 0) != target.rows)
    throw std::invalid_argument("utterance " + id + ": text path gives " +
                                std::to_string(std::accumulate(u.d_land.begin(), u.d_land.end(), 0)) +
                                " landmark frames, target has " + std::to_string(target.rows));
  u.direct = resample_linear(x, target.rows);
  return u;
}

LatentSequence make_training_latents(const CachedUtterance& u, Modality modality, Rng* rng, double temperature) {
  switch (modality) {
    case Modality::kSpeech:
      return u.speech;
    case Modality::kDirect:
      return LatentSequence{u.direct, RateTag::kLand, SpaceTag::kZ};
    case Modality::kText:
      break;
  }
  const PriorStats e = tts::expand(u.text_prior, u.d_land);
  LatentSequence out{e.mu, RateTag::kLand, SpaceTag::kFlow};
  if (rng && temperature > 0.0)
    for (std::size_t i = 0; i < out.values.data.size(); ++i)
      out.values.data[i] += temperature * std::exp(e.log_sigma.data[i]) * rng->normal();
  return out;
}

Modality modality_for_step(TrainMode mode, int step, bool random_switch, Rng* rng) {
  switch (mode) {
    case TrainMode::kText:
      return Modality::kText;
    case TrainMode::kSpeech:
      return Modality::kSpeech;
    case TrainMode::kDirect:
      return Modality::kDirect;
    case TrainMode::kMixed:
      break;
  }
  if (random_switch) {
    if (!rng) throw std::invalid_argument("random modality switching needs an rng");
    return rng->uniform() < 0.5 ? Modality::kText : Modality::kSpeech;
  }
  return step % 2 == 0 ? Modality::kText : Modality::kSpeech;
}

Var landmark_loss(Tape& t, const LandmarkDecoder& dec, const CachedUtterance& u, const LatentSequence& input) {
  if (input.frames() != u.target.rows)
    throw std::invalid_argument("landmark_loss: input has " + std::to_string(input.frames()) + " frames, target " +
                                std::to_string(u.target.rows));
  Var pred = dec.forward(t, t.constant(input.values), t.constant(u.global));
  return ag::mean(ag::square(ag::sub(pred, t.constant(u.target))));
}

std::vector<LandmarkStepLog> train_landmark(LandmarkDecoder& dec, const std::vector<CachedUtterance>& data,
                                            const LandmarkTrainConfig& cfg,
                                            const std::function<void(const LandmarkStepLog&)>& on_step) {
  if (data.empty()) throw std::invalid_argument("train_landmark: no paired training utterances");
  if (cfg.batch < 1) throw std::invalid_argument("train_landmark: batch must be >= 1");
  nn::AdamW opt(dec.params(), cfg.optim);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  int epoch = -1;
  Rng switch_rng(cfg.seed, {3});
  std::vector<LandmarkStepLog> logs;
  for (int step = 0; step < cfg.steps; ++step) {
    LandmarkStepLog log;
    log.step = step;
    log.modality = modality_for_step(dec.config().mode, step, cfg.random_switch, &switch_rng);
    Rng noise(cfg.seed, {4, static_cast<std::uint64_t>(step)});
    for (int b = 0; b < cfg.batch; ++b) {
      if (cursor == order.size()) {
        ++epoch;
        opt.set_epoch(epoch);
        Rng shuffle(cfg.seed, {5, static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[shuffle.uniform_int(0, static_cast<int>(i) - 1)]);
        cursor = 0;
      }
      const CachedUtterance& u = data[order[cursor++]];
      Tape t;
      Var l = landmark_loss(t, dec, u, make_training_latents(u, log.modality, &noise, cfg.text_temperature));
      const double v = l.value()(0, 0);
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite landmark loss at step " + std::to_string(step) + " on " + u.id);
      t.backward(ag::scale(l, 1.0 / cfg.batch));
      log.loss += v / cfg.batch;
    }
    log.lr = opt.current_lr();
    log.grad_norm = opt.step();
    if (on_step) on_step(log);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace uniflg::landmark
