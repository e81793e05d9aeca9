#include "voken/core/params.hpp"

#include <algorithm>

#include "voken/io/sha256.hpp"

namespace voken {

Ptr ParamStore::create(const std::string& group, const std::string& name, Shape shape) {
    if (!groups_.count(group)) {
        order_.push_back(group);
        trainable_[group] = true;
    }
    auto& entries = groups_[group];
    for (const auto& e : entries)
        require(e.name != name, "param already registered: " + group + "/" + name);
    Ptr t = make_tensor(std::move(shape), trainable_[group]);
    entries.push_back({name, t});
    return t;
}

const std::vector<ParamEntry>& ParamStore::group(const std::string& name) const {
    auto it = groups_.find(name);
    require(it != groups_.end(), "unknown parameter group: " + name);
    return it->second;
}

bool ParamStore::has_group(const std::string& name) const { return groups_.count(name) > 0; }

void ParamStore::set_trainable(const std::string& group, bool trainable) {
    auto it = groups_.find(group);
    require(it != groups_.end(), "unknown parameter group: " + group);
    trainable_[group] = trainable;
    for (auto& e : it->second) e.t->set_requires_grad(trainable);
}

bool ParamStore::trainable(const std::string& group) const {
    auto it = trainable_.find(group);
    require(it != trainable_.end(), "unknown parameter group: " + group);
    return it->second;
}

std::vector<ParamEntry> ParamStore::trainable_entries() const {
    std::vector<ParamEntry> out;
    for (const auto& g : order_) {
        if (!trainable_.at(g)) continue;
        for (const auto& e : groups_.at(g)) {
            out.push_back({g + "/" + e.name, e.t});
        }
    }
    return out;
}

void ParamStore::zero_grad() {
    for (const auto& g : order_)
        for (const auto& e : groups_.at(g)) e.t->zero_grad();
}

int64_t ParamStore::group_numel(const std::string& name) const {
    int64_t n = 0;
    for (const auto& e : group(name)) n += e.t->size();
    return n;
}

std::string ParamStore::group_hash(const std::string& name) const {
    io::Sha256 h;
    for (const auto& e : group(name)) {
        std::vector<float> buf(e.t->v.begin(), e.t->v.end());
        h.update(buf.data(), buf.size() * sizeof(float));
    }
    return h.hex();
}

std::map<std::string, std::string> ParamStore::all_hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& g : order_) out[g] = group_hash(g);
    return out;
}

void ParameterPartition::apply(ParamStore& store) const {
    for (const auto& g : frozen_groups) store.set_trainable(g, false);
    for (const auto& g : trainable_groups) store.set_trainable(g, true);
}

}  // namespace voken
