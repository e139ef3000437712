#ifndef SENSEMASK_CONFIG_HPP
#define SENSEMASK_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "sensemask/simcls.hpp"
#include "sensemask/synthgen.hpp"
#include "sensemask/trainer.hpp"

namespace sensemask {

/// Flat key=value settings. Lines are `key = value`; blank lines and lines
/// starting with '#' are ignored. Later assignments win.
class RunConfig {
public:
    RunConfig() = default;
    RunConfig(std::initializer_list<std::pair<const std::string, std::string>> entries)
        : entries_(entries) {}

    /// Throws ConfigError naming the offending line.
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// Copies every entry of `other` over this one.
    void merge(const RunConfig& other);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    /// Typed getters throw ConfigError when the key is missing or the value
    /// does not parse completely.
    std::string get(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;

    /// Throws ConfigError on any key outside `known`.
    void require_known(const std::set<std::string>& known) const;

    /// Sorted `key=value` lines.
    std::string serialize() const;
    void write(const std::filesystem::path& path) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Every PlantSpec field under its own name (source is hidden|attention).
RunConfig plant_spec_defaults();
PlantSpec to_plant_spec(const RunConfig& cfg);

/// mode, k, heads, batch_size, lr, max_epochs, patience, seed, aspects,
/// lambda, beta1, beta2, eps. `heads` > 0 overrides k with heads·a.
RunConfig train_config_defaults();
TrainConfig to_train_config(const RunConfig& cfg, int head_size);

/// cls_batch_size, cls_lr, cls_max_epochs, cls_patience, seed, beta1, beta2, eps.
RunConfig classifier_config_defaults();
ClassifierConfig to_classifier_config(const RunConfig& cfg);

}  // namespace sensemask

#endif  // SENSEMASK_CONFIG_HPP
