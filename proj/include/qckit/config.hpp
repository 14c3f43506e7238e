#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qckit/autoencoder.hpp"
#include "qckit/train.hpp"

namespace qc {

// Flat key=value run configuration. Lines hold `key = value`; blank lines and
// lines starting with '#' are skipped; duplicate keys are an error.
class RunConfig {
public:
    RunConfig() = default;
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
    std::vector<std::int64_t> get_int64_list(const std::string& key,
                                             std::vector<std::int64_t> fallback) const;

    // canonical form: sorted `key=value` lines
    std::string serialize() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

    // rejects keys outside the given set
    void require_known(const std::vector<std::string>& known) const;

private:
    std::map<std::string, std::string> kv_;
};

// schema of the model./train. keys understood by the converters below
const std::vector<std::string>& run_config_keys();

AutoencoderConfig autoencoder_config_from(const RunConfig& rc);
TrainConfig train_config_from(const RunConfig& rc);
RunConfig to_run_config(const AutoencoderConfig& model, const TrainConfig& train);

}  // namespace qc
