#pragma once

// On-disk formats.
//
// Tensor file (.f32): 16-byte little-endian header followed by float32 data.
//   bytes 0..2   magic "UFT"
//   byte  3      rank (1..3)
//   bytes 4..15  three uint32 dims; dims beyond `rank` are stored as 1
// Data is row-major with the last dim fastest. Landmark sequences are
// rank 3 (T x N x 2), spectral frames and latents rank 2, durations rank 1.
//
// Checkpoint file (.ckpt): magic "UFCK", uint32 version, uint64 length of a
// JSON config echo, the JSON text, uint32 parameter count, then per
// parameter: uint32 name length, name bytes, uint32 rows, uint32 cols,
// rows*cols float64 values.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uniflg/nn.hpp"
#include "uniflg/tensor.hpp"

namespace uniflg::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorFile {
  int rank = 0;
  std::array<std::uint32_t, 3> dims{1, 1, 1};
  std::vector<float> data;

  std::size_t element_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
};

/// Encodes header + payload exactly as written to disk.
std::vector<std::uint8_t> encode_tensor(const TensorFile& t);
TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& origin = "");

void write_tensor(const std::filesystem::path& path, const TensorFile& t);
TensorFile read_tensor(const std::filesystem::path& path);

/// Rank-2 file from a matrix (values rounded to float32).
TensorFile matrix_tensor(const Matrix& m);
/// Rank-3 T x N x 2 file from a T x 2N matrix.
TensorFile landmark_tensor(const Matrix& y);
/// Views a rank-2 or rank-3 file as a matrix: rank 3 collapses the trailing dims.
Matrix tensor_matrix(const TensorFile& t);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

struct Checkpoint {
  std::string config_json;
  std::vector<Parameter> params;
};

void save_checkpoint(const std::filesystem::path& path, const nn::ParamStore& store,
                     const std::string& config_json);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Copies checkpoint values into an identically-shaped store; every
/// parameter must be present in both.
void load_into(const Checkpoint& ckpt, nn::ParamStore& store);

}  // namespace uniflg::io
