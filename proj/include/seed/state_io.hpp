#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seed/trainer.hpp"

namespace seed {

inline constexpr std::uint32_t kStateVersion = 1;

/// Run-state container. All integers and floats little-endian; the layout is
///   "SEEDCLST" | u32 version | u64 len + config JSON bytes
///   | net config | 3 x rng snapshot | i32 tasks_completed | task classes
///   | trunk (u8 frozen + mlp) | u32 K + K heads (i32 index, u8 trained, mlp)
///   | K banks | task logs | u64 FNV-1a of everything before it.
/// An mlp is u32 input width, u32 layer count, then per layer u32 in, u32 out, u8 activation,
/// out*in f64 weights, out f64 biases. A bank is u32 count, u8 mode, then per
/// class i32 id, u32 S, S f64 mean and, unless prototype, the S(S+1)/2
/// lower-triangular covariance entries row by row.
struct RunStateFile {
  std::string config_json;
  EnsembleState state;
};

std::vector<unsigned char> encode_state(const RunStateFile& file);
/// Throws VersionMismatch or CorruptState.
RunStateFile decode_state(const std::vector<unsigned char>& bytes);

void save_state(const std::filesystem::path& path, const RunStateFile& file);
RunStateFile load_state(const std::filesystem::path& path);

}  // namespace seed
