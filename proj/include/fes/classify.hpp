#pragma once

#include "fes/tensor.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fes {

enum class OutcomeKind { Masked, Usable, Unusable, EngineError };
inline constexpr std::size_t outcome_kind_count = 4;

std::string_view to_string(OutcomeKind k);
std::optional<OutcomeKind> parse_outcome_kind(std::string_view s);

struct Outcome {
    OutcomeKind kind = OutcomeKind::Masked;
    nlohmann::json detail = nlohmann::json::object();
};

/// Decides whether a bit-differing output is still usable downstream.
/// Policies never see bit-identical outputs; those are Masked before the policy runs.
class UsabilityPolicy {
public:
    virtual ~UsabilityPolicy() = default;
    virtual std::string id() const = 0;
    /// Throws DataError when the policy cannot judge outputs of this shape.
    virtual void check_shape(const Shape&) const {}
    /// Usable or Unusable for one output tensor; `detail` collects policy metrics.
    virtual bool usable(const Tensor& golden, const Tensor& faulty, nlohmann::json& detail) const = 0;
};

/// Policy id plus its parameter record, as written in a campaign config.
struct PolicySpec {
    std::string id = "top1";
    nlohmann::json params = nlohmann::json::object();
};

PolicySpec policy_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolicySpec& spec);

using PolicyFactory = std::function<std::unique_ptr<UsabilityPolicy>(const nlohmann::json& params)>;

/// Maps policy ids to factories. Built-ins: top1, topk {k}, label-set {threshold}, tolerance {epsilon}.
class PolicyRegistry {
public:
    static PolicyRegistry& global();

    void add(const std::string& id, PolicyFactory factory);
    std::unique_ptr<UsabilityPolicy> create(const PolicySpec& spec) const;
    bool contains(const std::string& id) const { return factories_.count(id) > 0; }

private:
    PolicyRegistry();
    std::map<std::string, PolicyFactory> factories_;
};

/// Masked on bit equality of every output; otherwise the policy decides.
Outcome classify_output(std::span<const Tensor> golden, std::span<const Tensor> faulty, const UsabilityPolicy& policy);
Outcome classify_output(const Tensor& golden, const Tensor& faulty, const UsabilityPolicy& policy);

} // namespace fes
