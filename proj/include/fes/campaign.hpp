#pragma once

#include "fes/classify.hpp"
#include "fes/error_model.hpp"
#include "fes/executor.hpp"
#include "fes/graph.hpp"
#include "fes/record.hpp"
#include "fes/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace fes {

struct CampaignConfig {
    std::uint64_t experiments = 0;
    std::uint64_t seed = 0;
    /// Node-id or operator-kind keys; node ids win. Empty means uniform over all nodes.
    std::map<std::string, double> site_weights;
    /// Each entry maps graph input names to raw tensor files.
    std::vector<std::map<std::string, std::filesystem::path>> input_files;
    std::filesystem::path db_path;
    std::filesystem::path model_path;
    bool fallback = false;
    PolicySpec classifier;
    SamplerConfig sampler;
    bool cache = true;
    std::size_t cache_capacity = 64;
    int workers = 1;
    bool record_timing = false;

    /// Throws DataError on out-of-range settings.
    void validate() const;
};

/// Reads a JSON campaign config; relative paths resolve against the file's directory.
CampaignConfig load_campaign_config(const std::filesystem::path& path);
CampaignConfig campaign_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base = {});

/// Loads every input set named by the config, checking shapes against the graph.
std::vector<InputMap> load_inputs(const CampaignConfig& config, const Graph& graph);

struct PlannedExperiment {
    std::uint64_t index = 0;
    std::size_t site = 0; // node index
    std::size_t input = 0;
    std::uint64_t seed = 0;
};

/// Deterministic plan; entry i depends only on (seed, i), the graph and the site policy.
std::vector<PlannedExperiment> plan_campaign(const CampaignConfig& config, const Graph& graph,
                                             const ErrorModelDB& db);

/// LRU map from (input, site) to the golden frontier tensors of that split.
/// Lookups and inserts are serialized; values are immutable once stored.
class PrefixCache {
public:
    using Value = std::shared_ptr<const std::vector<Tensor>>;

    explicit PrefixCache(std::size_t capacity) : capacity_(capacity) {}

    Value get_or_compute(std::size_t input, std::size_t site, const std::function<std::vector<Tensor>()>& compute);

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    std::size_t size() const;

private:
    using Key = std::pair<std::size_t, std::size_t>;
    struct KeyHash {
        std::size_t operator()(const Key& k) const { return k.first * 0x9e3779b97f4a7c15ULL ^ k.second; }
    };
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<std::pair<Key, Value>> lru_;
    std::unordered_map<Key, std::list<std::pair<Key, Value>>::iterator, KeyHash> index_;
    std::uint64_t hits_ = 0, misses_ = 0;
};

struct CampaignResult {
    std::vector<CampaignRecord> records;
    Report report;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    double wall_seconds = 0.0;
};

using RecordSink = std::function<void(const CampaignRecord&)>;

/// Runs every planned experiment: cut the graph at the site, corrupt the golden
/// site tensor, finish the graph and classify against the golden outputs. Records
/// reach `sink` in experiment order regardless of the worker count.
CampaignResult run_campaign(const CampaignConfig& config, const Graph& graph, const ErrorModelDB& db,
                            const std::vector<InputMap>& inputs, const UsabilityPolicy& policy,
                            const RecordSink& sink = {});

/// Convenience overload resolving the policy from the config.
CampaignResult run_campaign(const CampaignConfig& config, const Graph& graph, const ErrorModelDB& db,
                            const std::vector<InputMap>& inputs, const RecordSink& sink = {});

} // namespace fes
