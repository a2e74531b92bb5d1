#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rtp_arb/dqn.hpp"
#include "rtp_arb/network.hpp"

namespace rtp_arb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMetadata {
  std::int32_t training_year = 0;
  std::uint64_t step = 0;
  double eval_reward = 0.0;  // greedy return at `step`, cents

  friend bool operator==(const CheckpointMetadata&, const CheckpointMetadata&) = default;
};

struct Checkpoint {
  QNetwork net;
  ObservationNormalizer normalizer;
  OptimizerState optimizer;
  CheckpointMetadata metadata;

  std::size_t window() const { return net.input_width() == 0 ? 0 : net.input_width() - 1; }
};

// Binary layout, all integers and floats little-endian:
//   magic "RTPARBQ\0", u32 version, u32 dim count, u64 dims[],
//   f64 normalizer {price_mean, price_scale, charge_scale},
//   i32 training_year, u64 step, f64 eval_reward,
//   f64 parameters (per layer: weights row-major, then bias),
//   u64 optimizer step, f64 {lr, beta1, beta2, epsilon},
//   f64 first moments, f64 second moments (parameter layout),
//   u64 FNV-1a hash of every preceding byte.
std::string serialize_checkpoint(const Checkpoint& ckpt);

// Throws CheckpointError on bad magic, unknown version, truncation, trailing
// bytes or hash mismatch. Nothing is returned unless the whole file is valid.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rtp_arb
