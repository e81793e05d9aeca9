#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "voken/core/types.hpp"

namespace voken::io {

// Flat key=value run configuration. Every key has a registered default;
// unknown keys are hard errors. The full resolved set (defaults included)
// goes into every run manifest.
class RunConfig {
public:
    static const std::map<std::string, std::string>& registry();

    RunConfig();  // all defaults
    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);

    void set(const std::string& key, const std::string& value);
    const std::string& raw(const std::string& key) const;

    int geti(const std::string& key) const;
    int64_t geti64(const std::string& key) const;
    double getf(const std::string& key) const;
    bool getb(const std::string& key) const;
    const std::string& gets(const std::string& key) const;

    void validate() const;  // range checks; throws on nonsense

    nlohmann::json to_json() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace voken::io
