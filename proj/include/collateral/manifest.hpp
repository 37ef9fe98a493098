#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "collateral/util.hpp"
#include "collateral/version.hpp"

namespace collateral {

inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 14695981039346656037ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

/// Reproducibility record written beside every command output: the command,
/// its configuration, content digests of every input file, and the seed.
class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {}

    void set_config(nlohmann::json config) { config_ = std::move(config); }
    void set_seed(uint64_t seed) { seed_ = seed; }

    void add_input(const std::string& path) {
        inputs_[path] = fnv1a64_hex(read_file(path));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command_;
        j["config"] = config_;
        j["inputs"] = inputs_;
        if (seed_) j["seed"] = *seed_;
        j["version"] = kVersion;
        return j;
    }

    /// Writes <output_path>.manifest.json next to the output it describes.
    void write_for(const std::string& output_path) const {
        write_file(output_path + ".manifest.json", to_json().dump(2) + "\n");
    }

private:
    std::string command_;
    nlohmann::json config_ = nlohmann::json::object();
    std::map<std::string, std::string> inputs_;
    std::optional<uint64_t> seed_;
};

}  // namespace collateral
