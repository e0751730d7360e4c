#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "uniflg/data_synth.hpp"
#include "uniflg/io.hpp"
#include "uniflg/metrics.hpp"
#include "uniflg/rng.hpp"

using namespace uniflg;
using namespace uniflg::metrics;
namespace fs = std::filesystem;

namespace {

LandmarkSequence random_seq(Rng& rng, int frames, int points, std::vector<int> lips) {
  LandmarkSequence s;
  s.y = Matrix(frames, 2 * points);
  for (double& v : s.y.data) v = rng.uniform(-1.0, 1.0);
  s.lip_indices = std::move(lips);
  s.fps = 20;
  return s;
}

// Convex polygon with `n` vertices around (cx, cy) at frame-specific radii.
LandmarkSequence convex_loops(Rng& rng, int frames, int n) {
  LandmarkSequence s;
  s.y = Matrix(frames, 2 * n);
  for (int k = 0; k < n; ++k) s.lip_indices.push_back(k);
  for (int t = 0; t < frames; ++t) {
    const double cx = rng.uniform(-1, 1), cy = rng.uniform(-1, 1);
    const double rx = rng.uniform(0.1, 1.0), ry = rng.uniform(0.1, 1.0);
    for (int k = 0; k < n; ++k) {
      const double th = 2 * M_PI * k / n + 0.1;
      s.y(t, 2 * k) = cx + rx * std::cos(th);
      s.y(t, 2 * k + 1) = cy + ry * std::sin(th);
    }
  }
  return s;
}

LandmarkSequence scaled(LandmarkSequence s, double k) {
  for (double& v : s.y.data) v *= k;
  return s;
}

LandmarkSequence shifted(LandmarkSequence s, double dx, double dy) {
  for (int t = 0; t < s.frames(); ++t)
    for (int p = 0; p < s.num_points(); ++p) {
      s.y(t, 2 * p) += dx;
      s.y(t, 2 * p + 1) += dy;
    }
  return s;
}

// Oracles written as plain loops over (frame, point) tuples.
double oracle_normalizer(const LandmarkSequence& r) {
  double acc = 0;
  for (int t = 0; t < r.frames(); ++t) {
    std::vector<double> xs, ys;
    for (int p = 0; p < r.num_points(); ++p) {
      xs.push_back(r.px(t, p));
      ys.push_back(r.py(t, p));
    }
    const double w = *std::max_element(xs.begin(), xs.end()) - *std::min_element(xs.begin(), xs.end());
    const double h = *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
    acc += std::sqrt(w * w + h * h);
  }
  return acc / r.frames();
}

double oracle_distance(const LandmarkSequence& a, const LandmarkSequence& b, const std::vector<int>& idx) {
  double acc = 0;
  int n = 0;
  for (int t = 0; t < a.frames(); ++t)
    for (int p : idx) {
      acc += std::sqrt(std::pow(a.px(t, p) - b.px(t, p), 2) + std::pow(a.py(t, p) - b.py(t, p), 2));
      ++n;
    }
  return acc / n / oracle_normalizer(b) * 100;
}

double oracle_velocity(const LandmarkSequence& a, const LandmarkSequence& b, const std::vector<int>& idx) {
  double acc = 0;
  int n = 0;
  for (int t = 1; t < a.frames(); ++t)
    for (int p : idx) {
      const double vax = a.px(t, p) - a.px(t - 1, p), vay = a.py(t, p) - a.py(t - 1, p);
      const double vbx = b.px(t, p) - b.px(t - 1, p), vby = b.py(t, p) - b.py(t - 1, p);
      acc += std::sqrt(std::pow(vax - vbx, 2) + std::pow(vay - vby, 2));
      ++n;
    }
  return acc / n / oracle_normalizer(b) * 100;
}

// Fan triangulation from vertex 0.
double fan_area(const LandmarkSequence& s, int t, const std::vector<int>& loop) {
  double area = 0;
  for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
    const double ax = s.px(t, loop[i]) - s.px(t, loop[0]), ay = s.py(t, loop[i]) - s.py(t, loop[0]);
    const double bx = s.px(t, loop[i + 1]) - s.px(t, loop[0]), by = s.py(t, loop[i + 1]) - s.py(t, loop[0]);
    area += 0.5 * std::abs(ax * by - ay * bx);
  }
  return area;
}

LandmarkSequence from_frames(const std::vector<std::vector<double>>& frames) {
  LandmarkSequence s;
  s.y = Matrix::from_rows(frames);
  return s;
}

}  // namespace

TEST_CASE("normalizer") {
  const LandmarkSequence square = from_frames({{0, 0, 1, 0, 1, 1, 0, 1}, {0, 0, 1, 0, 1, 1, 0, 1}});
  CHECK(normalizer(square) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(normalizer(scaled(square, 2.0)) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-15));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_seq(rng, 7, 5, {});
    CHECK(std::abs(normalizer(s) - oracle_normalizer(s)) < 1e-12);
  }
  CHECK_THROWS_AS(normalizer(from_frames({{0.3, 0.3, 0.3, 0.3}})), std::invalid_argument);
}

TEST_CASE("distances against loop oracles") {
  Rng rng(2);
  const std::vector<int> lips = {1, 3, 4};
  for (int i = 0; i < 20; ++i) {
    const auto a = random_seq(rng, 9, 6, lips), b = random_seq(rng, 9, 6, lips);
    CHECK(std::abs(landmark_distance(a, b) - oracle_distance(a, b, {0, 1, 2, 3, 4, 5})) < 1e-6);
    CHECK(std::abs(landmark_distance(a, b, lips) - oracle_distance(a, b, lips)) < 1e-6);
    CHECK(std::abs(velocity_difference(a, b) - oracle_velocity(a, b, {0, 1, 2, 3, 4, 5})) < 1e-6);
    CHECK(std::abs(velocity_difference(a, b, lips) - oracle_velocity(a, b, lips)) < 1e-6);
  }
  const auto a = random_seq(rng, 9, 6, lips);
  const double delta = 0.03;
  // offset along x only: every point moves by exactly delta
  CHECK(landmark_distance(shifted(a, delta, 0), a) == doctest::Approx(100 * delta / normalizer(a)));
  CHECK_THROWS_AS(landmark_distance(random_seq(rng, 8, 6, lips), a), std::invalid_argument);
  CHECK_THROWS_AS(velocity_difference(random_seq(rng, 1, 6, lips), random_seq(rng, 1, 6, lips)),
                  std::invalid_argument);
}

TEST_CASE("metric identities hold within 1e-9") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_seq(rng, 12, 8, {2, 3, 4, 5}), b = random_seq(rng, 12, 8, {2, 3, 4, 5});
    const UtteranceScores self = score_pair(a, a);
    CHECK(self.d_l == 0.0);
    CHECK(self.d_ll == 0.0);
    CHECK(self.d_v == 0.0);
    CHECK(self.d_vl == 0.0);
    CHECK(self.d_a == 0.0);

    const double k = rng.uniform(0.1, 10.0);
    CHECK(std::abs(landmark_distance(scaled(a, k), scaled(b, k)) - landmark_distance(a, b)) < 1e-9);
    CHECK(std::abs(landmark_distance(scaled(a, k), scaled(b, k), a.lip_indices) -
                   landmark_distance(a, b, a.lip_indices)) < 1e-9);

    const double dx = rng.uniform(-2, 2), dy = rng.uniform(-2, 2);
    CHECK(velocity_difference(shifted(a, dx, dy), a) < 1e-9);
    CHECK(std::abs(velocity_difference(shifted(a, dx, dy), b) - velocity_difference(a, b)) < 1e-9);

    const UtteranceScores ab = score_pair(a, b);
    for (double v : {ab.d_l, ab.d_ll, ab.d_v, ab.d_vl, ab.d_a}) CHECK(v >= 0.0);
  }
}

TEST_CASE("shoelace area") {
  const LandmarkSequence square = from_frames({{0, 0, 1, 0, 1, 1, 0, 1}});
  CHECK(signed_area(square, 0, {0, 1, 2, 3}) == 1.0);
  CHECK(signed_area(square, 0, {3, 2, 1, 0}) == -1.0);
  CHECK(signed_area(square, 0, {2, 3, 0, 1}) == 1.0);
  CHECK_THROWS_AS(signed_area(square, 0, {0, 1}), std::invalid_argument);

  Rng rng(4);
  const auto loops = convex_loops(rng, 30, 8);
  std::vector<int> rotated = loops.lip_indices;
  std::rotate(rotated.begin(), rotated.begin() + 3, rotated.end());
  std::vector<int> reversed(loops.lip_indices.rbegin(), loops.lip_indices.rend());
  for (int t = 0; t < loops.frames(); ++t) {
    const double a = signed_area(loops, t, loops.lip_indices);
    CHECK(std::abs(std::abs(a) - fan_area(loops, t, loops.lip_indices)) < 1e-6);
    CHECK(std::abs(signed_area(loops, t, rotated) - a) < 1e-12);
    CHECK(std::abs(signed_area(loops, t, reversed) + a) < 1e-12);
  }
  const auto other = convex_loops(rng, 30, 8);
  double want = 0;
  for (int t = 0; t < 30; ++t)
    want += std::abs(fan_area(loops, t, loops.lip_indices) - fan_area(other, t, loops.lip_indices));
  want = want / 30 / std::pow(oracle_normalizer(other), 2) * 100;
  CHECK(std::abs(area_difference(loops, other, loops.lip_indices) - want) < 1e-6);
}

TEST_CASE("dynamic time warping") {
  Rng rng(5);
  const auto a = random_seq(rng, 10, 4, {0, 1, 2});
  const DtwResult self = dtw_align(a, a);
  CHECK(self.cost == 0.0);
  REQUIRE(self.path.size() == 10);
  for (int t = 0; t < 10; ++t) CHECK(self.path[t] == std::pair{t, t});

  // A = all points at 0, B = all points at 1
  const std::vector<double> A(8, 0.0), B(8, 1.0);
  const auto ab = from_frames({A, B}), aab = from_frames({A, A, B});
  const DtwResult r = dtw_align(ab, aab);
  const std::vector<std::pair<int, int>> want = {{0, 0}, {0, 1}, {1, 2}};
  CHECK(r.path == want);
  CHECK(r.cost == 0.0);
  CHECK(r.pred_aligned.frames() == 3);

  for (int i = 0; i < 30; ++i) {
    const auto p = random_seq(rng, rng.uniform_int(1, 12), 4, {0, 1, 2});
    const auto q = random_seq(rng, rng.uniform_int(1, 12), 4, {0, 1, 2});
    const DtwResult pq = dtw_align(p, q), qp = dtw_align(q, p);
    CHECK(std::abs(pq.cost - qp.cost) < 1e-12);
    CHECK(pq.path.front() == std::pair{0, 0});
    CHECK(pq.path.back() == std::pair{p.frames() - 1, q.frames() - 1});
    for (std::size_t k = 1; k < pq.path.size(); ++k) {
      const int di = pq.path[k].first - pq.path[k - 1].first, dj = pq.path[k].second - pq.path[k - 1].second;
      CHECK((di == 0 || di == 1));
      CHECK((dj == 0 || dj == 1));
      CHECK(di + dj >= 1);
    }
    const auto q2 = random_seq(rng, p.frames(), 4, {0, 1, 2});
    double diag = 0;
    for (int t = 0; t < p.frames(); ++t) diag += frame_cost(p, t, q2, t);
    CHECK(dtw_align(p, q2).cost <= diag + 1e-12);
  }
  CHECK_THROWS_AS(dtw_align(LandmarkSequence{}, a), std::invalid_argument);
}

TEST_CASE("pearson and lip openness") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(pearson({1, 1, 1}, {3, 2, 1}) == 0.0);
  LandmarkSequence s = from_frames({{0, -0.1, 0, 0.2, 5, 5}});
  s.lip_indices = {0, 1};
  CHECK(lip_openness(s)[0] == doctest::Approx(0.3));
}

TEST_CASE("corpus evaluation") {
  const fs::path root = fs::temp_directory_path() / "uniflg_test_metrics";
  fs::remove_all(root);
  synth::CorpusConfig cfg;
  cfg.num_speakers = 1;
  cfg.num_unseen_speakers = 0;
  cfg.paired_utterances = 12;
  const auto m = synth::gen_corpus(cfg, 9, root / "corpus");
  const auto evals = m.select(synth::SpeakerRole::kPaired, "eval");
  REQUIRE(!evals.empty());

  fs::create_directories(root / "same");
  fs::create_directories(root / "dropped");
  for (const auto* u : evals) {
    fs::copy_file(root / "corpus" / u->landmark_path, root / "same" / (u->id + ".f32"));
    // drop the last frame so the evaluation has to align
    LandmarkSequence y = m.load_landmarks(*u);
    Matrix shorter(y.frames() - 1, y.y.cols);
    std::copy(y.y.data.begin(), y.y.data.begin() + shorter.data.size(), shorter.data.begin());
    io::write_tensor(root / "dropped" / (u->id + ".f32"), io::landmark_tensor(shorter));
  }
  const EvalReport same = evaluate_corpus(root / "same", m);
  CHECK(same.utterances.size() == evals.size());
  CHECK(same.dtw_count == 0);
  for (double v : {same.mean.d_l, same.mean.d_ll, same.mean.d_v, same.mean.d_vl, same.mean.d_a}) CHECK(v == 0.0);
  for (std::size_t i = 0; i < evals.size(); ++i) CHECK(same.utterances[i].id == evals[i]->id);

  const EvalReport dropped = evaluate_corpus(root / "dropped", m);
  CHECK(dropped.dtw_count == static_cast<int>(evals.size()));
  const EvalReport threaded = evaluate_corpus(root / "dropped", m, {"eval", 3});
  CHECK(threaded.to_json().dump() == dropped.to_json().dump());
  const auto j = dropped.to_json();
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["count"] == evals.size());
  double mean_ll = 0;
  for (const auto& row : dropped.utterances) mean_ll += row.d_ll;
  CHECK(dropped.mean.d_ll == doctest::Approx(mean_ll / evals.size()));

  fs::remove(root / "same" / (evals[0]->id + ".f32"));
  CHECK_THROWS_WITH(evaluate_corpus(root / "same", m), doctest::Contains("missing prediction"));
  fs::remove_all(root);
}
