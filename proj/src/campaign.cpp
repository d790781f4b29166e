#include "fes/campaign.hpp"

#include "fes/error.hpp"
#include "fes/saboteur.hpp"

#include <omp.h>
#include <tomlplusplus/toml.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace fes {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- config ----------------------------------------------------------------

void CampaignConfig::validate() const
{
    if (experiments < 1)
        throw DataError("campaign needs experiments >= 1");
    if (input_files.empty())
        throw DataError("campaign needs at least one input set");
    double total = 0.0;
    for (auto& [k, w] : site_weights) {
        if (!(w >= 0.0))
            throw DataError("site weight for '" + k + "' must be >= 0");
        total += w;
    }
    if (!site_weights.empty() && !(total > 0.0))
        throw DataError("site weights must have a positive sum");
    for (double p : {sampler.row_skip_p, sampler.map_skip_p})
        if (!(p >= 0.0 && p < 1.0))
            throw DataError("skip probabilities must lie in [0, 1)");
    if (!(sampler.random_scale >= 4.0))
        throw DataError("random_scale must be >= 4");
    if (workers < 1)
        throw DataError("workers must be >= 1");
}

CampaignConfig campaign_config_from_json(const json& doc, const fs::path& base)
{
    CampaignConfig c;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };
    try {
        auto n = doc.at("experiments");
        if (!n.is_number_integer() || n.get<long long>() < 0)
            throw DataError("experiments must be a non-negative integer");
        c.experiments = n.get<std::uint64_t>();
        c.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("sites")) {
            auto& s = doc.at("sites");
            auto policy = s.value("policy", std::string("uniform"));
            if (policy == "weighted") {
                for (auto& [k, v] : s.at("weights").items())
                    c.site_weights[k] = v.get<double>();
                if (c.site_weights.empty())
                    throw DataError("weighted site policy needs weights");
            } else if (policy != "uniform") {
                throw DataError("unknown site policy '" + policy + "'");
            }
        }
        for (auto& in : doc.at("inputs")) {
            std::map<std::string, fs::path> m;
            if (in.is_string())
                m[""] = resolve(in.get<std::string>());
            else
                for (auto& [k, v] : in.items())
                    m[k] = resolve(v.get<std::string>());
            c.input_files.push_back(std::move(m));
        }
        if (doc.contains("db"))
            c.db_path = resolve(doc.at("db").get<std::string>());
        if (doc.contains("model"))
            c.model_path = resolve(doc.at("model").get<std::string>());
        c.fallback = doc.value("fallback", false);
        if (doc.contains("classifier"))
            c.classifier = policy_spec_from_json(doc.at("classifier"));
        if (doc.contains("sampler")) {
            auto& s = doc.at("sampler");
            c.sampler.row_skip_p = s.value("row_skip_p", c.sampler.row_skip_p);
            c.sampler.map_skip_p = s.value("map_skip_p", c.sampler.map_skip_p);
            c.sampler.random_scale = s.value("random_scale", c.sampler.random_scale);
            if (s.contains("force_domain")) {
                auto d = parse_domain_kind(s.at("force_domain").get<std::string>());
                if (!d)
                    throw DataError("unknown value domain '" + s.at("force_domain").get<std::string>() + "'");
                c.sampler.force_domain = d;
            }
        }
        if (doc.contains("cache")) {
            auto& s = doc.at("cache");
            c.cache = s.value("enabled", true);
            c.cache_capacity = s.value("capacity", c.cache_capacity);
        }
        c.workers = doc.value("workers", 1);
        c.record_timing = doc.value("record_timing", false);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed campaign config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

json toml_to_json(const toml::node& node)
{
    if (auto* t = node.as_table()) {
        json out = json::object();
        for (auto& [k, v] : *t)
            out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (auto* a = node.as_array()) {
        json out = json::array();
        for (auto& v : *a)
            out.push_back(toml_to_json(v));
        return out;
    }
    if (auto v = node.value_exact<std::int64_t>())
        return *v;
    if (auto v = node.value_exact<double>())
        return *v;
    if (auto v = node.value_exact<bool>())
        return *v;
    if (auto v = node.value_exact<std::string>())
        return *v;
    throw DataError("unsupported TOML value type in campaign config");
}

} // namespace

CampaignConfig load_campaign_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open campaign config " + path.string());
    json doc;
    if (path.extension() == ".toml") {
        try {
            doc = toml_to_json(toml::parse(in, path.string()));
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << "malformed campaign config " << path.string() << ": " << e.description() << " at line "
                << e.source().begin.line;
            throw DataError(msg.str());
        }
    } else {
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw DataError("malformed campaign config " + path.string() + ": " + e.what());
        }
    }
    return campaign_config_from_json(doc, path.parent_path());
}

std::vector<InputMap> load_inputs(const CampaignConfig& config, const Graph& graph)
{
    std::vector<InputMap> sets;
    for (auto& files : config.input_files) {
        InputMap m;
        for (auto& [name, path] : files) {
            std::string key = name;
            if (key.empty()) {
                if (graph.inputs().size() != 1)
                    throw DataError("unnamed input file but the model has " + std::to_string(graph.inputs().size()) +
                                    " inputs");
                key = graph.inputs()[0].name;
            }
            auto idx = graph.input_index(key);
            if (!idx)
                throw DataError("model has no input named '" + key + "'");
            m.emplace(key, read_raw(path, graph.inputs()[*idx].shape));
        }
        for (auto& spec : graph.inputs())
            if (!m.count(spec.name))
                throw DataError("input set misses model input '" + spec.name + "'");
        sets.push_back(std::move(m));
    }
    return sets;
}

// ---- planning --------------------------------------------------------------

std::vector<PlannedExperiment> plan_campaign(const CampaignConfig& config, const Graph& graph, const ErrorModelDB& db)
{
    config.validate();
    const auto n = graph.nodes().size();
    std::vector<double> weights(n, 1.0);
    if (!config.site_weights.empty()) {
        std::set<std::string> used;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = graph.node(i);
            const auto kind = std::string(to_string(node.kind));
            if (auto it = config.site_weights.find(node.id); it != config.site_weights.end()) {
                weights[i] = it->second;
                used.insert(node.id);
            } else if (auto kt = config.site_weights.find(kind); kt != config.site_weights.end()) {
                weights[i] = kt->second;
                used.insert(kind);
            } else {
                weights[i] = 0.0;
            }
        }
        for (auto& [k, w] : config.site_weights)
            if (!used.count(k) && !graph.index_of(k) && !parse_op_kind(k))
                throw DataError("site weight key '" + k + "' matches no node id or operator kind");
    }

    std::vector<std::size_t> selectable;
    double total = 0.0;
    std::set<std::string> missing;
    for (std::size_t i = 0; i < n; ++i)
        if (weights[i] > 0.0) {
            selectable.push_back(i);
            total += weights[i];
            const auto kind = std::string(to_string(graph.node(i).kind));
            if (!db.find(kind, config.fallback))
                missing.insert(kind);
        }
    if (selectable.empty())
        throw DataError("site policy selects no injection sites");
    if (!missing.empty()) {
        std::string list;
        for (auto& k : missing)
            list += (list.empty() ? "" : ", ") + k;
        throw DataError("no error model for operator kind(s): " + list +
                        (config.fallback ? " and the database has no fallback entry" : " (fallback disabled)"));
    }

    std::vector<PlannedExperiment> plan(config.experiments);
    for (std::uint64_t i = 0; i < config.experiments; ++i) {
        Rng rng(derive_seed(config.seed, i));
        const double u = uniform01(rng) * total;
        double acc = 0.0;
        std::size_t site = selectable.back();
        for (auto s : selectable) {
            acc += weights[s];
            if (u < acc) {
                site = s;
                break;
            }
        }
        plan[i] = {i, site, static_cast<std::size_t>(i % config.input_files.size()), rng()};
    }
    return plan;
}

// ---- cache -----------------------------------------------------------------

PrefixCache::Value PrefixCache::get_or_compute(std::size_t input, std::size_t site,
                                               const std::function<std::vector<Tensor>()>& compute)
{
    const Key key{input, site};
    {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(key); it != index_.end()) {
            ++hits_;
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        ++misses_;
    }
    auto value = std::make_shared<const std::vector<Tensor>>(compute());
    std::lock_guard lock(mutex_);
    if (capacity_ == 0)
        return value;
    if (auto it = index_.find(key); it != index_.end())
        return it->second->second;
    lru_.emplace_front(key, value);
    index_[key] = lru_.begin();
    while (lru_.size() > capacity_) {
        index_.erase(lru_.back().first);
        lru_.pop_back();
    }
    return value;
}

std::size_t PrefixCache::size() const
{
    std::lock_guard lock(mutex_);
    return lru_.size();
}

// ---- execution -------------------------------------------------------------

CampaignResult run_campaign(const CampaignConfig& config, const Graph& graph, const ErrorModelDB& db,
                            const std::vector<InputMap>& inputs, const UsabilityPolicy& policy,
                            const RecordSink& sink)
{
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    auto plan = plan_campaign(config, graph, db);
    if (inputs.size() != config.input_files.size())
        throw DataError("campaign expects " + std::to_string(config.input_files.size()) + " input sets, got " +
                        std::to_string(inputs.size()));

    std::vector<std::vector<Tensor>> goldens;
    for (auto& in : inputs)
        goldens.push_back(execute_outputs(graph, in));
    for (auto& g : goldens.front())
        policy.check_shape(g.shape());

    std::map<std::size_t, Split> splits;
    for (auto& p : plan)
        if (!splits.count(p.site))
            splits.emplace(p.site, split_at(graph, p.site));

    PrefixCache cache(config.cache ? config.cache_capacity : 0);

    auto run_one = [&](const PlannedExperiment& p) {
        const auto t0 = clock::now();
        CampaignRecord rec;
        rec.index = p.index;
        rec.input = p.input;
        rec.master_seed = config.seed;
        const auto& node = graph.node(p.site);
        const auto kind = std::string(to_string(node.kind));
        try {
            Rng rng(p.seed);
            rec.event = sample_error(db, kind, node.output_shape, rng, config.sampler, config.fallback);
            rec.event.site = node.id;
            rec.event.seed = p.seed;
            const auto& split = splits.at(p.site);
            auto prefix = [&] { return run_prefix(graph, split, inputs[p.input]); };
            PrefixCache::Value frontier = config.cache
                                              ? cache.get_or_compute(p.input, p.site, prefix)
                                              : std::make_shared<const std::vector<Tensor>>(prefix());
            auto corrupted = corrupt_values((*frontier)[0], rec.event.targets, rec.event.domains, rng, config.sampler);
            auto outputs = run_suffix(graph, split, *frontier, corrupted, inputs[p.input]);
            rec.outcome = classify_output(goldens[p.input], outputs, policy);
            rec.digest = digest(outputs);
        } catch (const std::exception& e) {
            rec.event.site = node.id;
            rec.event.kind = kind;
            rec.event.seed = p.seed;
            rec.outcome = Outcome{OutcomeKind::EngineError, json::object()};
            rec.error = e.what();
        }
        if (config.record_timing)
            rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        return rec;
    };

    CampaignResult result;
    result.records.resize(plan.size());
    constexpr std::size_t batch = 256;
    for (std::size_t lo = 0; lo < plan.size(); lo += batch) {
        const auto hi = std::min(plan.size(), lo + batch);
        const auto span = static_cast<std::int64_t>(hi - lo);
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.workers) if (config.workers > 1)
        for (std::int64_t j = 0; j < span; ++j) {
            const auto i = lo + static_cast<std::size_t>(j);
            result.records[i] = run_one(plan[i]);
        }
        if (sink)
            for (auto i = lo; i < hi; ++i)
                sink(result.records[i]);
    }

    result.report = aggregate(result.records);
    auto& meta = result.report.metadata;
    meta["seed"] = config.seed;
    meta["experiments"] = config.experiments;
    meta["model_digest"] = hex64(graph.digest());
    meta["classifier"] = to_json(config.classifier);
    meta["fallback"] = config.fallback;
    json provenance = json::object(), dropped = json::object();
    std::set<std::string> kinds;
    for (auto& p : plan)
        kinds.insert(std::string(to_string(graph.node(p.site).kind)));
    for (auto& k : kinds)
        if (auto* e = db.find(k, config.fallback)) {
            const bool own = db.kinds.count(k) > 0;
            provenance[k] = {{"corpus", e->corpus}, {"samples", e->samples}, {"fallback", !own}};
            dropped[k] = 1.0 - e->generatable_mass();
        }
    meta["db_provenance"] = provenance;
    meta["dropped_random_mass"] = dropped;
    if (config.sampler.force_domain)
        meta["force_domain"] = std::string(to_string(*config.sampler.force_domain));
    result.cache_hits = cache.hits();
    result.cache_misses = cache.misses();
    result.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();
    return result;
}

CampaignResult run_campaign(const CampaignConfig& config, const Graph& graph, const ErrorModelDB& db,
                            const std::vector<InputMap>& inputs, const RecordSink& sink)
{
    auto policy = PolicyRegistry::global().create(config.classifier);
    return run_campaign(config, graph, db, inputs, *policy, sink);
}

} // namespace fes
