#include "fes/classify.hpp"

#include "fes/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace fes {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, outcome_kind_count> outcome_names{"Masked", "Usable", "Unusable",
                                                                         "EngineError"};

bool is_flat(const Shape& s)
{
    return s.size() == 1 || (s.size() == 2 && s[0] == 1) || (s.size() == 3 && s[0] == 1 && s[1] == 1);
}

void require_flat(const std::string& id, const Shape& s)
{
    if (!is_flat(s))
        throw DataError("policy '" + id + "' needs a flat classification output, got shape " + to_string(s));
}

bool has_nan(const Tensor& t)
{
    return std::any_of(t.data().begin(), t.data().end(), [](float v) { return std::isnan(v); });
}

std::size_t argmax(const Tensor& t)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[best])
            best = i;
    return best;
}

/// Indices of the k largest values, ties to the lower index.
std::vector<std::size_t> top_k(const Tensor& t, std::size_t k)
{
    std::vector<std::size_t> idx(t.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return t[a] > t[b] || (t[a] == t[b] && a < b); });
    idx.resize(k);
    return idx;
}

class Top1Policy final : public UsabilityPolicy {
public:
    std::string id() const override { return "top1"; }
    void check_shape(const Shape& s) const override { require_flat(id(), s); }
    bool usable(const Tensor& golden, const Tensor& faulty, json& detail) const override
    {
        const auto g = argmax(golden);
        detail["golden_label"] = g;
        if (has_nan(faulty)) {
            detail["nan"] = true;
            return false;
        }
        const auto f = argmax(faulty);
        detail["faulty_label"] = f;
        return f == g;
    }
};

class TopKPolicy final : public UsabilityPolicy {
public:
    explicit TopKPolicy(std::size_t k) : k_(k)
    {
        if (k_ < 1)
            throw DataError("policy 'topk' needs k >= 1");
    }
    std::string id() const override { return "topk"; }
    void check_shape(const Shape& s) const override { require_flat(id(), s); }
    bool usable(const Tensor& golden, const Tensor& faulty, json& detail) const override
    {
        const auto g = argmax(golden);
        detail["golden_label"] = g;
        if (has_nan(faulty)) {
            detail["nan"] = true;
            return false;
        }
        auto top = top_k(faulty, k_);
        detail["faulty_topk"] = top;
        return std::find(top.begin(), top.end(), g) != top.end();
    }

private:
    std::size_t k_;
};

class LabelSetPolicy final : public UsabilityPolicy {
public:
    explicit LabelSetPolicy(double threshold) : threshold_(threshold) {}
    std::string id() const override { return "label-set"; }
    void check_shape(const Shape& s) const override { require_flat(id(), s); }
    bool usable(const Tensor& golden, const Tensor& faulty, json& detail) const override
    {
        auto g = labels(golden), f = labels(faulty);
        detail["golden_labels"] = g;
        detail["faulty_labels"] = f;
        return g == f;
    }

private:
    std::vector<std::size_t> labels(const Tensor& t) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= threshold_)
                out.push_back(i);
        return out;
    }
    double threshold_;
};

class TolerancePolicy final : public UsabilityPolicy {
public:
    explicit TolerancePolicy(double epsilon) : epsilon_(epsilon)
    {
        if (!(epsilon_ >= 0.0))
            throw DataError("policy 'tolerance' needs epsilon >= 0");
    }
    std::string id() const override { return "tolerance"; }
    bool usable(const Tensor& golden, const Tensor& faulty, json& detail) const override
    {
        double worst = 0.0;
        std::size_t mismatches = 0;
        bool ok = true;
        for (std::size_t i = 0; i < golden.size(); ++i) {
            if (float_bits(golden[i]) == float_bits(faulty[i]))
                continue;
            ++mismatches;
            const double d = std::abs(static_cast<double>(faulty[i]) - static_cast<double>(golden[i]));
            // NaN and infinite deltas fail every tolerance; at epsilon 0 only exact bits pass.
            if (!(d <= epsilon_) || epsilon_ == 0.0)
                ok = false;
            if (!(d <= worst))
                worst = d;
        }
        detail["mismatches"] = mismatches;
        detail["max_abs_diff"] = std::isfinite(worst) ? json(worst) : json("inf");
        return ok;
    }

private:
    double epsilon_;
};

} // namespace

std::string_view to_string(OutcomeKind k) { return outcome_names[static_cast<std::size_t>(k)]; }

std::optional<OutcomeKind> parse_outcome_kind(std::string_view s)
{
    for (std::size_t i = 0; i < outcome_names.size(); ++i)
        if (outcome_names[i] == s)
            return static_cast<OutcomeKind>(i);
    return std::nullopt;
}

PolicySpec policy_spec_from_json(const json& j)
{
    PolicySpec spec;
    if (j.is_string()) {
        spec.id = j.get<std::string>();
        return spec;
    }
    if (!j.is_object() || !j.contains("id"))
        throw DataError("classifier must be a policy id or an object with an 'id'");
    spec.id = j.at("id").get<std::string>();
    for (auto& [k, v] : j.items())
        if (k != "id")
            spec.params[k] = v;
    return spec;
}

json to_json(const PolicySpec& spec)
{
    json j = spec.params;
    j["id"] = spec.id;
    return j;
}

PolicyRegistry::PolicyRegistry()
{
    add("top1", [](const json&) { return std::make_unique<Top1Policy>(); });
    add("topk", [](const json& p) { return std::make_unique<TopKPolicy>(p.value("k", std::size_t{5})); });
    add("label-set", [](const json& p) { return std::make_unique<LabelSetPolicy>(p.value("threshold", 0.5)); });
    add("tolerance", [](const json& p) { return std::make_unique<TolerancePolicy>(p.value("epsilon", 0.0)); });
}

PolicyRegistry& PolicyRegistry::global()
{
    static PolicyRegistry registry;
    return registry;
}

void PolicyRegistry::add(const std::string& id, PolicyFactory factory)
{
    factories_[id] = std::move(factory);
}

std::unique_ptr<UsabilityPolicy> PolicyRegistry::create(const PolicySpec& spec) const
{
    auto it = factories_.find(spec.id);
    if (it == factories_.end())
        throw DataError("unknown classifier policy '" + spec.id + "'");
    try {
        return it->second(spec.params);
    } catch (const json::exception& e) {
        throw DataError("bad parameters for policy '" + spec.id + "': " + e.what());
    }
}

Outcome classify_output(std::span<const Tensor> golden, std::span<const Tensor> faulty, const UsabilityPolicy& policy)
{
    if (golden.size() != faulty.size())
        throw DataError("golden and faulty output counts differ");
    for (std::size_t i = 0; i < golden.size(); ++i)
        if (golden[i].shape() != faulty[i].shape())
            throw ShapeError("output " + std::to_string(i) + ": golden shape " + to_string(golden[i].shape()) +
                             " vs faulty " + to_string(faulty[i].shape()));
    for (auto& g : golden)
        policy.check_shape(g.shape());
    Outcome out;
    bool identical = true;
    for (std::size_t i = 0; i < golden.size(); ++i)
        identical &= golden[i].bit_equal(faulty[i]);
    if (identical) {
        out.kind = OutcomeKind::Masked;
        return out;
    }
    bool usable = true;
    for (std::size_t i = 0; i < golden.size(); ++i) {
        json d = json::object();
        if (!golden[i].bit_equal(faulty[i]))
            usable &= policy.usable(golden[i], faulty[i], d);
        if (golden.size() == 1)
            out.detail = d;
        else if (!d.empty())
            out.detail[std::to_string(i)] = d;
    }
    out.kind = usable ? OutcomeKind::Usable : OutcomeKind::Unusable;
    return out;
}

Outcome classify_output(const Tensor& golden, const Tensor& faulty, const UsabilityPolicy& policy)
{
    return classify_output(std::span<const Tensor>(&golden, 1), std::span<const Tensor>(&faulty, 1), policy);
}

} // namespace fes
