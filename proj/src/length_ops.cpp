#include "uniflg/length_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uniflg {

int land_frame_count(int spec_frames, double ratio) {
  return static_cast<int>(std::llround(ratio * spec_frames));
}

std::vector<int> durations_to_land(const std::vector<int>& d_spec, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("durations_to_land: ratio " + std::to_string(ratio) +
                                " outside (0, 1]");
  if (d_spec.empty()) throw std::invalid_argument("durations_to_land: no tokens");
  const int n = static_cast<int>(d_spec.size());
  std::vector<int> out(n);
  long cum = 0;
  long prev = 0;
  for (int i = 0; i < n; ++i) {
    if (d_spec[i] <= 0) throw std::invalid_argument("durations_to_land: non-positive duration");
    cum += d_spec[i];
    const long b = std::llround(ratio * static_cast<double>(cum));
    out[i] = static_cast<int>(b - prev);
    prev = b;
  }
  if (prev < n)
    throw std::invalid_argument("durations_to_land: " + std::to_string(prev) +
                                " landmark frames cannot cover " + std::to_string(n) + " tokens");
  for (int i = 0; i < n; ++i) {
    if (out[i] > 0) continue;
    const int left = i > 0 ? out[i - 1] : -1;
    const int right = i + 1 < n ? out[i + 1] : -1;
    int donor = -1;
    if (std::max(left, right) >= 2) {
      donor = left >= right ? i - 1 : i + 1;
    } else {
      for (int dist = 2; dist < n && donor < 0; ++dist) {
        const int l = i - dist, r = i + dist;
        const int lv = l >= 0 ? out[l] : -1;
        const int rv = r < n ? out[r] : -1;
        if (std::max(lv, rv) >= 2) donor = lv >= rv ? l : r;
      }
    }
    if (donor < 0) throw std::logic_error("durations_to_land: no donor frame available");
    --out[donor];
    ++out[i];
  }
  return out;
}

Matrix resample_linear(const Matrix& seq, int target_len) {
  if (target_len < 1) throw std::invalid_argument("resample_linear: target_len < 1");
  if (seq.rows < 1) throw std::invalid_argument("resample_linear: empty input");
  Matrix out(target_len, seq.cols);
  if (seq.rows == 1) {
    for (int j = 0; j < target_len; ++j) std::copy(seq.row_ptr(0), seq.row_ptr(0) + seq.cols, out.row_ptr(j));
    return out;
  }
  if (target_len == 1) {
    std::copy(seq.row_ptr(0), seq.row_ptr(0) + seq.cols, out.row_ptr(0));
    return out;
  }
  // Source position j * (L_in - 1) / (L_out - 1), split exactly into integer
  // and fractional parts so both endpoints are reproduced bit-for-bit.
  const long span_in = seq.rows - 1, span_out = target_len - 1;
  for (int j = 0; j < target_len; ++j) {
    const long num = static_cast<long>(j) * span_in;
    long i0 = num / span_out;
    long rem = num % span_out;
    if (i0 == span_in) {
      i0 = span_in - 1;
      rem = span_out;
    }
    const double frac = static_cast<double>(rem) / static_cast<double>(span_out);
    const double* a = seq.row_ptr(static_cast<int>(i0));
    const double* b = seq.row_ptr(static_cast<int>(i0) + 1);
    double* o = out.row_ptr(j);
    for (int c = 0; c < seq.cols; ++c) o[c] = (1.0 - frac) * a[c] + frac * b[c];
  }
  return out;
}

LatentSequence resample_linear(const LatentSequence& seq, int target_len) {
  LatentSequence out;
  out.values = resample_linear(seq.values, target_len);
  out.rate = RateTag::kLand;
  out.space = seq.space;
  return out;
}

Matrix expand_rows(const Matrix& token_rows, const std::vector<int>& durations) {
  if (static_cast<int>(durations.size()) != token_rows.rows)
    throw std::invalid_argument("expand: duration count does not match token count");
  int total = 0;
  for (int d : durations) {
    if (d <= 0) throw std::invalid_argument("expand: non-positive duration");
    total += d;
  }
  Matrix out(total, token_rows.cols);
  int r = 0;
  for (int i = 0; i < token_rows.rows; ++i)
    for (int k = 0; k < durations[i]; ++k, ++r)
      std::copy(token_rows.row_ptr(i), token_rows.row_ptr(i) + token_rows.cols, out.row_ptr(r));
  return out;
}

}  // namespace uniflg
