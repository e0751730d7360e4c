#pragma once

#include <string>
#include <vector>

#include "uniflg/tensor.hpp"

namespace uniflg {

enum class RateTag { kSpec, kLand };
enum class SpaceTag { kZ, kFlow };

std::string to_string(RateTag r);
std::string to_string(SpaceTag s);

/// Frame-level latents (frames x D) with their frame rate and space.
struct LatentSequence {
  Matrix values;
  RateTag rate = RateTag::kSpec;
  SpaceTag space = SpaceTag::kZ;

  int frames() const { return values.rows; }
  int dim() const { return values.cols; }
};

/// Per-token Gaussian prior. Scales are stored as logs so they stay positive.
struct PriorStats {
  Matrix mu;         // S x D
  Matrix log_sigma;  // S x D
  int tokens() const { return mu.rows; }
  int dim() const { return mu.cols; }
};

/// Acoustic feature frames (frames x F) at the spectral frame rate.
struct SpectralFrames {
  Matrix x;
  int frames() const { return x.rows; }
};

/// Facial keypoint trajectories. `y` stores one frame per row as
/// [x0, y0, x1, y1, ...] (T x 2N), in normalized face coordinates.
struct LandmarkSequence {
  Matrix y;
  double fps = 0.0;
  std::vector<int> lip_indices;

  int frames() const { return y.rows; }
  int num_points() const { return y.cols / 2; }
  double px(int t, int k) const { return y(t, 2 * k); }
  double py(int t, int k) const { return y(t, 2 * k + 1); }
};

/// Whose identity the one-hot `g` encodes.
enum class CondMode {
  kStandard,         // g = speaker, z_u = emotion
  kArbitrarySpeaker  // g = emotion, z_u = speaker
};

std::string to_string(CondMode m);
CondMode cond_mode_from_string(const std::string& s);

inline constexpr int kUtteranceLatentDim = 16;

/// Global conditioning shared by the TTS core and the landmark decoder.
struct ConditioningBundle {
  std::vector<double> g;   // one-hot
  Matrix z_u;              // 1 x 16 sample (or mean)
  Matrix z_u_mean;         // 1 x 16 posterior mean (empty when drawn from the prior)
  Matrix z_u_scale;        // 1 x 16 posterior scale
  CondMode mode = CondMode::kStandard;

  /// Throws std::invalid_argument unless g is one-hot of width `g_dim`
  /// and z_u (when set) is 1 x 16.
  void validate(int g_dim) const;
  int g_index() const;
  /// 1 x (|g| + 16) row [g, z_u].
  Matrix cond_row() const;
};

std::vector<double> one_hot(int index, int size);

}  // namespace uniflg
