#pragma once

#include <filesystem>

#include "drmn/training.hpp"

namespace drmn {

inline constexpr char kCkptMagic[8] = {'D', 'R', 'M', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

/// Layout, all integers little-endian:
///   magic "DRMNCKPT", u32 version
///   u32 tensor count; per tensor: name (u64 length + bytes), u32 rank,
///     u64 extents, f64 payload
///   u32 optimizer state count; per state: u64 step, f64 m payload, f64 v payload
///     (shapes follow the matching parameter)
///   u32 next epoch, 4 x u64 RNG state
///   config echo as JSON (u64 length + bytes): model, train, ensemble, history
std::string encode_checkpoint(const TrainState& s);
TrainState decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint");

void save_checkpoint(const TrainState& s, const std::filesystem::path& file);
TrainState load_checkpoint(const std::filesystem::path& file);

}  // namespace drmn
