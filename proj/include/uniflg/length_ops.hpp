#pragma once

#include <vector>

#include "uniflg/types.hpp"

namespace uniflg {

/// Converts per-token spectral-rate durations to landmark-rate durations on
/// the cumulative boundary grid: b_i = round(ratio * sum_{j<=i} d_j),
/// d_land_i = b_i - b_{i-1}. Tokens that receive zero frames are floored to
/// one frame, taking the frame from the larger immediate neighbour (or the
/// nearest token that can spare one). The total is always
/// round(ratio * sum d).
///
/// Throws std::invalid_argument for non-positive durations, ratio outside
/// (0, 1], or when the rounded total is smaller than the token count.
std::vector<int> durations_to_land(const std::vector<int>& d_spec, double ratio);

/// Endpoint-aligned linear interpolation along time: output frame j samples
/// source position j * (L_in - 1) / (L_out - 1). A single-frame source is
/// repeated. The result is tagged landmark-rate.
LatentSequence resample_linear(const LatentSequence& seq, int target_len);
Matrix resample_linear(const Matrix& seq, int target_len);

/// Token i's row repeated d_i times (durations must be positive).
Matrix expand_rows(const Matrix& token_rows, const std::vector<int>& durations);

/// round(ratio * frames), the landmark frame count matching `frames` spectral frames.
int land_frame_count(int spec_frames, double ratio);

}  // namespace uniflg
