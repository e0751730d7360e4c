#include "uniflg/types.hpp"

#include <stdexcept>

namespace uniflg {

std::string to_string(RateTag r) { return r == RateTag::kSpec ? "spec-rate" : "landmark-rate"; }
std::string to_string(SpaceTag s) { return s == SpaceTag::kZ ? "z-space" : "flow-space"; }

std::string to_string(CondMode m) { return m == CondMode::kStandard ? "standard" : "as"; }

CondMode cond_mode_from_string(const std::string& s) {
  if (s == "standard") return CondMode::kStandard;
  if (s == "as") return CondMode::kArbitrarySpeaker;
  throw std::invalid_argument("unknown conditioning mode '" + s + "' (expected standard|as)");
}

std::vector<double> one_hot(int index, int size) {
  if (index < 0 || index >= size)
    throw std::invalid_argument("one_hot: index " + std::to_string(index) + " outside [0, " +
                                std::to_string(size) + ")");
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return v;
}

void ConditioningBundle::validate(int g_dim) const {
  if (static_cast<int>(g.size()) != g_dim)
    throw std::invalid_argument("conditioning g has width " + std::to_string(g.size()) +
                                ", expected " + std::to_string(g_dim));
  int ones = 0;
  for (double v : g) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw std::invalid_argument("conditioning g is not one-hot");
    }
  }
  if (ones != 1) throw std::invalid_argument("conditioning g must contain exactly one 1");
  if (!z_u.empty() && (z_u.rows != 1 || z_u.cols != kUtteranceLatentDim))
    throw std::invalid_argument("z_u must be 1 x 16");
}

int ConditioningBundle::g_index() const {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] == 1.0) return static_cast<int>(i);
  throw std::invalid_argument("conditioning g has no active entry");
}

Matrix ConditioningBundle::cond_row() const {
  if (z_u.rows != 1 || z_u.cols != kUtteranceLatentDim)
    throw std::invalid_argument("cond_row: z_u not set");
  Matrix row(1, static_cast<int>(g.size()) + kUtteranceLatentDim);
  for (std::size_t i = 0; i < g.size(); ++i) row(0, static_cast<int>(i)) = g[i];
  for (int i = 0; i < kUtteranceLatentDim; ++i) row(0, static_cast<int>(g.size()) + i) = z_u(0, i);
  return row;
}

}  // namespace uniflg
