#pragma once

#include <string>

#include "voken/core/params.hpp"
#include "voken/io/kvconfig.hpp"
#include "voken/vocab/vocab.hpp"

namespace voken::io {

// Checkpoint directory layout:
//   manifest.json — format_version, stage, config snapshot, per-group tensor
//                   names/shapes and blob hashes
//   <group>.bin   — tensor records: 8-byte magic, u64 rank, u64 dims...,
//                   float32 little-endian row-major data
//   vocab.txt     — serialized vocabulary
// Writing is deterministic, so load-then-save is byte-identical.

struct CheckpointMeta {
    std::string stage;
    RunConfig config;
};

void save_checkpoint(const std::string& dir, const std::string& stage, const RunConfig& cfg,
                     const ParamStore& store, const vocab::Vocabulary& vocab);

CheckpointMeta read_checkpoint_meta(const std::string& dir);
vocab::Vocabulary read_checkpoint_vocab(const std::string& dir);
bool checkpoint_has_group(const std::string& dir, const std::string& group);

// loads blob data into an already-constructed store (shapes must match)
void load_checkpoint_params(const std::string& dir, ParamStore& store);

// loads only the named groups (e.g. reusing frozen stage-0 components under
// a different voken count)
void load_checkpoint_groups(const std::string& dir, ParamStore& store,
                            const std::vector<std::string>& groups);

}  // namespace voken::io
