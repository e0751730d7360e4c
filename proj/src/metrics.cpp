#include "uniflg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uniflg/data_synth.hpp"
#include "uniflg/io.hpp"
#include "uniflg/parallel.hpp"

namespace uniflg::metrics {

namespace {

std::vector<int> resolve(const std::vector<int>& indices, int n) {
  if (indices.empty()) {
    std::vector<int> all(n);
    for (int k = 0; k < n; ++k) all[k] = k;
    return all;
  }
  for (int k : indices)
    if (k < 0 || k >= n) throw std::invalid_argument("keypoint index " + std::to_string(k) + " out of range");
  return indices;
}

void check_pair(const LandmarkSequence& pred, const LandmarkSequence& ref) {
  if (pred.frames() != ref.frames())
    throw std::invalid_argument("frame count mismatch: " + std::to_string(pred.frames()) + " vs " +
                                std::to_string(ref.frames()) + " (align with DTW first)");
  if (pred.num_points() != ref.num_points()) throw std::invalid_argument("keypoint count mismatch");
}

LandmarkSequence with_rows(const LandmarkSequence& src, const std::vector<int>& rows) {
  LandmarkSequence out;
  out.fps = src.fps;
  out.lip_indices = src.lip_indices;
  out.y = Matrix(static_cast<int>(rows.size()), src.y.cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(src.y.row_ptr(rows[r]), src.y.row_ptr(rows[r]) + src.y.cols, out.y.row_ptr(static_cast<int>(r)));
  return out;
}

}  // namespace

double normalizer(const LandmarkSequence& ref) {
  if (ref.frames() < 1 || ref.num_points() < 1) throw std::invalid_argument("normalizer: empty reference");
  double total = 0.0;
  for (int t = 0; t < ref.frames(); ++t) {
    double x0 = ref.px(t, 0), x1 = x0, y0 = ref.py(t, 0), y1 = y0;
    for (int k = 1; k < ref.num_points(); ++k) {
      x0 = std::min(x0, ref.px(t, k));
      x1 = std::max(x1, ref.px(t, k));
      y0 = std::min(y0, ref.py(t, k));
      y1 = std::max(y1, ref.py(t, k));
    }
    total += std::hypot(x1 - x0, y1 - y0);
  }
  const double n = total / ref.frames();
  if (!(n > 0.0)) throw std::invalid_argument("normalizer: degenerate reference (zero extent)");
  return n;
}

double landmark_distance(const LandmarkSequence& pred, const LandmarkSequence& ref,
                         const std::vector<int>& indices) {
  check_pair(pred, ref);
  const std::vector<int> idx = resolve(indices, ref.num_points());
  double sum = 0.0;
  for (int t = 0; t < ref.frames(); ++t)
    for (int k : idx) sum += std::hypot(pred.px(t, k) - ref.px(t, k), pred.py(t, k) - ref.py(t, k));
  return 100.0 * sum / (static_cast<double>(ref.frames()) * idx.size()) / normalizer(ref);
}

double velocity_difference(const LandmarkSequence& pred, const LandmarkSequence& ref,
                           const std::vector<int>& indices) {
  check_pair(pred, ref);
  if (ref.frames() < 2) throw std::invalid_argument("velocity difference needs at least 2 frames");
  const std::vector<int> idx = resolve(indices, ref.num_points());
  double sum = 0.0;
  for (int t = 0; t + 1 < ref.frames(); ++t)
    for (int k : idx) {
      const double dx = (pred.px(t + 1, k) - pred.px(t, k)) - (ref.px(t + 1, k) - ref.px(t, k));
      const double dy = (pred.py(t + 1, k) - pred.py(t, k)) - (ref.py(t + 1, k) - ref.py(t, k));
      sum += std::hypot(dx, dy);
    }
  return 100.0 * sum / (static_cast<double>(ref.frames() - 1) * idx.size()) / normalizer(ref);
}

double signed_area(const LandmarkSequence& y, int t, const std::vector<int>& loop) {
  if (loop.size() < 3) throw std::invalid_argument("mouth area needs at least 3 loop points");
  double twice = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const int a = loop[i], b = loop[(i + 1) % loop.size()];
    twice += y.px(t, a) * y.py(t, b) - y.px(t, b) * y.py(t, a);
  }
  return 0.5 * twice;
}

double area_difference(const LandmarkSequence& pred, const LandmarkSequence& ref, const std::vector<int>& loop) {
  check_pair(pred, ref);
  resolve(loop, ref.num_points());
  double sum = 0.0;
  for (int t = 0; t < ref.frames(); ++t)
    sum += std::abs(std::abs(signed_area(pred, t, loop)) - std::abs(signed_area(ref, t, loop)));
  const double n = normalizer(ref);
  return 100.0 * sum / ref.frames() / (n * n);
}

double frame_cost(const LandmarkSequence& a, int i, const LandmarkSequence& b, int j) {
  double sum = 0.0;
  for (int k = 0; k < a.num_points(); ++k) sum += std::hypot(a.px(i, k) - b.px(j, k), a.py(i, k) - b.py(j, k));
  return sum / a.num_points();
}

DtwResult dtw_align(const LandmarkSequence& pred, const LandmarkSequence& ref) {
  if (pred.frames() < 1 || ref.frames() < 1) throw std::invalid_argument("dtw_align: empty sequence");
  if (pred.num_points() != ref.num_points()) throw std::invalid_argument("dtw_align: keypoint count mismatch");
  const int P = pred.frames(), R = ref.frames();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(static_cast<std::size_t>(P) * R, inf);
  auto D = [&](int i, int j) -> double& { return acc[static_cast<std::size_t>(i) * R + j]; };
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < R; ++j) {
      const double c = frame_cost(pred, i, ref, j);
      if (i == 0 && j == 0) {
        D(i, j) = c;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = D(i - 1, j - 1);
      if (i > 0) best = std::min(best, D(i - 1, j));
      if (j > 0) best = std::min(best, D(i, j - 1));
      D(i, j) = best + c;
    }
  DtwResult r;
  r.cost = D(P - 1, R - 1);
  int i = P - 1, j = R - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double diag = D(i - 1, j - 1), up = D(i - 1, j), left = D(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  std::vector<int> pi, rj;
  for (const auto& [a, b] : r.path) {
    pi.push_back(a);
    rj.push_back(b);
  }
  r.pred_aligned = with_rows(pred, pi);
  r.ref_aligned = with_rows(ref, rj);
  return r;
}

std::vector<double> lip_openness(const LandmarkSequence& y) {
  if (y.lip_indices.empty()) throw std::invalid_argument("lip_openness: sequence has no lip indices");
  std::vector<double> out(y.frames());
  for (int t = 0; t < y.frames(); ++t) {
    double lo = y.py(t, y.lip_indices[0]), hi = lo;
    for (int k : y.lip_indices) {
      lo = std::min(lo, y.py(t, k));
      hi = std::max(hi, y.py(t, k));
    }
    out[t] = hi - lo;
  }
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal series of length >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

UtteranceScores score_pair(const LandmarkSequence& pred, const LandmarkSequence& ref, const std::string& id) {
  UtteranceScores s;
  s.id = id;
  s.pred_frames = pred.frames();
  s.ref_frames = ref.frames();
  s.normalizer = normalizer(ref);
  const std::vector<int>& lips = ref.lip_indices;
  const LandmarkSequence* p = &pred;
  const LandmarkSequence* r = &ref;
  DtwResult aligned;
  if (pred.frames() != ref.frames()) {
    aligned = dtw_align(pred, ref);
    p = &aligned.pred_aligned;
    r = &aligned.ref_aligned;
    s.dtw_applied = true;
  }
  s.d_ll = landmark_distance(*p, *r, lips);
  s.d_l = landmark_distance(*p, *r);
  s.d_vl = r->frames() >= 2 ? velocity_difference(*p, *r, lips) : 0.0;
  s.d_v = r->frames() >= 2 ? velocity_difference(*p, *r) : 0.0;
  s.d_a = area_difference(*p, *r, lips);
  return s;
}

EvalReport summarize(std::vector<UtteranceScores> rows) {
  EvalReport rep;
  rep.utterances = std::move(rows);
  rep.mean.id = "mean";
  const double n = static_cast<double>(rep.utterances.size());
  for (const UtteranceScores& u : rep.utterances) {
    rep.mean.d_ll += u.d_ll / n;
    rep.mean.d_vl += u.d_vl / n;
    rep.mean.d_a += u.d_a / n;
    rep.mean.d_l += u.d_l / n;
    rep.mean.d_v += u.d_v / n;
    rep.mean.normalizer += u.normalizer / n;
    rep.dtw_count += u.dtw_applied;
  }
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  auto row = [](const UtteranceScores& u) {
    nlohmann::json j;
    j["id"] = u.id;
    j["D-LL"] = u.d_ll;
    j["D-VL"] = u.d_vl;
    j["D-A"] = u.d_a;
    j["D-L"] = u.d_l;
    j["D-V"] = u.d_v;
    j["normalizer"] = u.normalizer;
    j["dtw_applied"] = u.dtw_applied;
    j["pred_frames"] = u.pred_frames;
    j["ref_frames"] = u.ref_frames;
    return j;
  };
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["normalization"] = kNormalizationNote;
  j["count"] = utterances.size();
  j["dtw_count"] = dtw_count;
  nlohmann::json m = row(mean);
  for (const char* k : {"id", "dtw_applied", "pred_frames", "ref_frames"}) m.erase(k);
  j["mean"] = m;
  j["utterances"] = nlohmann::json::array();
  for (const UtteranceScores& u : utterances) j["utterances"].push_back(row(u));
  return j;
}

EvalReport evaluate_corpus(const std::filesystem::path& pred_dir, const synth::CorpusManifest& manifest,
                           const EvalOptions& options) {
  std::vector<const synth::UtteranceRecord*> todo;
  for (const synth::UtteranceRecord& u : manifest.utterances)
    if (!u.landmark_path.empty() && (options.split.empty() || u.split == options.split)) todo.push_back(&u);
  if (todo.empty()) throw std::invalid_argument("evaluate_corpus: no reference utterances in split '" + options.split + "'");
  for (const auto* u : todo)
    if (!std::filesystem::exists(pred_dir / (u->id + ".f32")))
      throw std::runtime_error("missing prediction " + (pred_dir / (u->id + ".f32")).string());

  std::vector<UtteranceScores> rows(todo.size());
  auto work = [&](std::size_t i) {
    const synth::UtteranceRecord& u = *todo[i];
    const LandmarkSequence ref = manifest.load_landmarks(u);
    LandmarkSequence pred;
    pred.y = io::tensor_matrix(io::read_tensor(pred_dir / (u.id + ".f32")));
    pred.fps = ref.fps;
    pred.lip_indices = ref.lip_indices;
    if (pred.num_points() != ref.num_points())
      throw std::runtime_error("prediction " + u.id + " has " + std::to_string(pred.num_points()) + " keypoints");
    rows[i] = score_pair(pred, ref, u.id);
  };
  parallel_for(todo.size(), options.threads, work);
  return summarize(std::move(rows));
}

}  // namespace uniflg::metrics
