#pragma once

#include <map>
#include <string>
#include <vector>

#include "voken/core/tensor.hpp"

namespace voken {

struct ParamEntry {
    std::string name;
    Ptr t;
};

// Named parameter groups. Groups are the unit of freezing, checkpointing and
// hashing; registration order is deterministic and defines serialization
// order.
class ParamStore {
public:
    Ptr create(const std::string& group, const std::string& name, Shape shape);

    const std::vector<ParamEntry>& group(const std::string& name) const;
    bool has_group(const std::string& name) const;
    const std::vector<std::string>& group_names() const { return order_; }

    void set_trainable(const std::string& group, bool trainable);
    bool trainable(const std::string& group) const;

    // every entry of every trainable group
    std::vector<ParamEntry> trainable_entries() const;
    void zero_grad();

    int64_t group_numel(const std::string& name) const;
    // sha256 over the group's tensors serialized as little-endian float32
    std::string group_hash(const std::string& name) const;
    std::map<std::string, std::string> all_hashes() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, std::vector<ParamEntry>> groups_;
    std::map<std::string, bool> trainable_;
};

// Per-stage trainable/frozen flags over the full store.
struct ParameterPartition {
    std::vector<std::string> trainable_groups;
    std::vector<std::string> frozen_groups;

    void apply(ParamStore& store) const;
};

}  // namespace voken
