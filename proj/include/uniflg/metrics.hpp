#pragma once

// Objective landmark metrics. Distances are reported in percent of the
// reference face size: the mean over frames of the bounding-box diagonal of
// all reference keypoints. Mouth-area differences use that size squared.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "uniflg/types.hpp"

namespace uniflg::synth {
struct CorpusManifest;
}

namespace uniflg::metrics {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kNormalizationNote =
    "percent of the mean per-frame bounding-box diagonal of all reference keypoints; "
    "D-A divides by its square";

/// Throws std::invalid_argument for an empty or zero-extent reference.
double normalizer(const LandmarkSequence& ref);

/// Mean Euclidean keypoint distance over frames and `indices` (empty = all),
/// in percent of normalizer(ref). D-L with all points, D-LL with lips.
double landmark_distance(const LandmarkSequence& pred, const LandmarkSequence& ref,
                         const std::vector<int>& indices = {});
/// Same on frame differences v_t = Y_{t+1} - Y_t. D-V / D-VL.
double velocity_difference(const LandmarkSequence& pred, const LandmarkSequence& ref,
                           const std::vector<int>& indices = {});

/// Signed shoelace area of the polygon `loop` at frame t.
double signed_area(const LandmarkSequence& y, int t, const std::vector<int>& loop);
/// Mean |area_pred - area_ref| / normalizer^2 * 100. D-A.
double area_difference(const LandmarkSequence& pred, const LandmarkSequence& ref,
                       const std::vector<int>& loop);

/// Mean keypoint distance between frame i of a and frame j of b.
double frame_cost(const LandmarkSequence& a, int i, const LandmarkSequence& b, int j);

struct DtwResult {
  std::vector<std::pair<int, int>> path;  // (pred frame, ref frame) from (0,0) to the ends
  double cost = 0.0;                      // accumulated frame cost along the path
  LandmarkSequence pred_aligned, ref_aligned;
};

/// Steps (1,0), (0,1), (1,1); the backtrack prefers the diagonal on ties.
DtwResult dtw_align(const LandmarkSequence& pred, const LandmarkSequence& ref);

/// Vertical extent of the lip keypoints per frame.
std::vector<double> lip_openness(const LandmarkSequence& y);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct UtteranceScores {
  std::string id;
  double d_ll = 0, d_vl = 0, d_a = 0, d_l = 0, d_v = 0;
  double normalizer = 0;
  bool dtw_applied = false;
  int pred_frames = 0, ref_frames = 0;
};

/// All five metrics; DTW-aligns first when the frame counts differ.
UtteranceScores score_pair(const LandmarkSequence& pred, const LandmarkSequence& ref,
                           const std::string& id = "");

struct EvalReport {
  std::vector<UtteranceScores> utterances;  // manifest order
  UtteranceScores mean;                      // arithmetic means, id "mean"
  int dtw_count = 0;

  nlohmann::json to_json() const;
};

EvalReport summarize(std::vector<UtteranceScores> rows);

struct EvalOptions {
  std::string split = "eval";  // empty = all splits
  int threads = 1;
};

/// Scores <pred_dir>/<id>.f32 against every landmark-bearing utterance of the
/// chosen split. Throws when a prediction file is missing.
EvalReport evaluate_corpus(const std::filesystem::path& pred_dir, const synth::CorpusManifest& manifest,
                           const EvalOptions& options = {});

}  // namespace uniflg::metrics
