// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (little-endian):
//   "MCCK" u32 version=1
//   u64 config_hash  u64 iteration
//   u32 stream count, then each random-stream state as u64 length + bytes
//   u32 tensor count, then per tensor: u32 rank, u64 dims..., f64 values
//   u32 velocity count (0 before the first step), then tensors as above
// Parameters appear in ModelParams::all() order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metaconcept/meta.hpp"
#include "metaconcept/tensor.hpp"

namespace metaconcept {

struct CheckpointData {
    std::uint64_t config_hash = 0;
    std::uint64_t iteration = 0;
    std::vector<std::string> rng_states;
    std::vector<Tensor> params;
    std::vector<Tensor> velocity;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Copies checkpointed values into `params`, checking count and shapes.
void assign_parameters(const ModelParams& params, const std::vector<Tensor>& values);

}  // namespace metaconcept
