#include "support.hpp"

#include "fes/classify.hpp"
#include "fes/error.hpp"

#include <doctest.h>

#include <limits>

using namespace fes;
using nlohmann::json;

namespace {

std::unique_ptr<UsabilityPolicy> make(const json& spec)
{
    return PolicyRegistry::global().create(policy_spec_from_json(spec));
}

Tensor probs(std::vector<float> v)
{
    const auto n = v.size();
    return Tensor({1, n}, std::move(v));
}

} // namespace

TEST_CASE("identical outputs are masked under every policy")
{
    auto g = probs({0.1f, 0.7f, 0.2f});
    for (auto spec : {json("top1"), json{{"id", "topk"}, {"k", 2}}, json{{"id", "label-set"}, {"threshold", 0.5}},
                      json{{"id", "tolerance"}, {"epsilon", 0.1}}})
        CHECK(classify_output(g, g, *make(spec)).kind == OutcomeKind::Masked);
}

TEST_CASE("top1 keeps the label under perturbed probabilities")
{
    auto g = probs({0.05f, 0.1f, 0.05f, 0.7f, 0.1f});
    auto f = probs({0.1f, 0.1f, 0.05f, 0.6f, 0.15f});
    auto out = classify_output(g, f, *make("top1"));
    CHECK(out.kind == OutcomeKind::Usable);
    CHECK(out.detail.at("golden_label") == 3);
    auto flipped = probs({0.1f, 0.1f, 0.05f, 0.2f, 0.55f});
    CHECK(classify_output(g, flipped, *make("top1")).kind == OutcomeKind::Unusable);
}

TEST_CASE("label-set loses an object")
{
    // Classes {car=0, person=1, dog=2}; golden detects car and person.
    auto g = probs({0.8f, 0.6f, 0.1f});
    auto f = probs({0.8f, 0.3f, 0.1f});
    auto out = classify_output(g, f, *make(json{{"id", "label-set"}, {"threshold", 0.5}}));
    CHECK(out.kind == OutcomeKind::Unusable);
    CHECK(out.detail.at("golden_labels") == json{0, 1});
    CHECK(out.detail.at("faulty_labels") == json{0});
    auto same = probs({0.9f, 0.55f, 0.1f});
    CHECK(classify_output(g, same, *make(json{{"id", "label-set"}, {"threshold", 0.5}})).kind == OutcomeKind::Usable);
}

TEST_CASE("NaN outputs are unusable for label policies")
{
    auto g = probs({0.2f, 0.8f});
    auto f = probs({0.2f, std::numeric_limits<float>::quiet_NaN()});
    CHECK(classify_output(g, f, *make("top1")).kind == OutcomeKind::Unusable);
    CHECK(classify_output(g, f, *make(json{{"id", "topk"}, {"k", 2}})).kind == OutcomeKind::Unusable);
    CHECK(classify_output(g, f, *make(json{{"id", "tolerance"}, {"epsilon", 1e9}})).kind == OutcomeKind::Unusable);
}

TEST_CASE("shape and registry errors")
{
    Tensor g({3, 2, 2}, 1.0f), f = g;
    f[0] = 2.0f;
    CHECK_THROWS_AS(classify_output(g, f, *make("top1")), DataError);
    CHECK_THROWS_AS(classify_output(g, f, *make("top1")), DataError);
    CHECK(classify_output(g, f, *make(json{{"id", "tolerance"}, {"epsilon", 1.0}})).kind == OutcomeKind::Usable);
    CHECK_THROWS_AS(classify_output(g, Tensor({3, 2, 1}), *make("tolerance")), ShapeError);
    CHECK_THROWS_WITH_AS(make("iou"), doctest::Contains("iou"), DataError);
    CHECK_THROWS_AS(make(json{{"id", "topk"}, {"k", 0}}), DataError);
    CHECK_THROWS_AS(make(json{{"id", "topk"}, {"k", "three"}}), DataError);
    CHECK_THROWS_AS(make(json{{"id", "tolerance"}, {"epsilon", -1}}), DataError);
    CHECK_THROWS_AS(policy_spec_from_json(json{{"k", 3}}), DataError);
}

TEST_CASE("custom policies register through the same interface")
{
    struct SumPolicy final : UsabilityPolicy {
        std::string id() const override { return "sum-close"; }
        bool usable(const Tensor& g, const Tensor& f, json&) const override
        {
            double a = 0, b = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                a += g[i];
                b += f[i];
            }
            return std::abs(a - b) < 0.5;
        }
    };
    PolicyRegistry::global().add("sum-close", [](const json&) { return std::make_unique<SumPolicy>(); });
    auto g = probs({1, 2, 3});
    CHECK(classify_output(g, probs({1, 2, 3.25f}), *make("sum-close")).kind == OutcomeKind::Usable);
    CHECK(classify_output(g, probs({1, 2, 4}), *make("sum-close")).kind == OutcomeKind::Unusable);
}

TEST_CASE("top-k is monotone in k and tolerance zero only passes masked outputs")
{
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
        const auto n = test::pick(rng, 2, 12);
        auto g = test::random_tensor({1, n}, rng, 0.0f, 1.0f);
        auto f = g;
        const auto hits = test::pick(rng, 0, 3);
        for (std::size_t h = 0; h < hits; ++h)
            f[uniform_index(rng, n)] = static_cast<float>(uniform_real(rng, 0.0, 1.0));
        auto t1 = classify_output(g, f, *make("top1")).kind;
        bool usable_before = t1 == OutcomeKind::Usable || t1 == OutcomeKind::Masked;
        for (std::size_t k = 1; k <= n; ++k) {
            auto tk = classify_output(g, f, *make(json{{"id", "topk"}, {"k", k}})).kind;
            const bool usable = tk == OutcomeKind::Usable || tk == OutcomeKind::Masked;
            if (usable_before)
                CHECK(usable);
            usable_before = usable;
        }
        auto tol = classify_output(g, f, *make(json{{"id", "tolerance"}, {"epsilon", 0.0}})).kind;
        CHECK((tol != OutcomeKind::Unusable) == g.bit_equal(f));
    }
}

TEST_CASE("multiple outputs: masked only when all are identical")
{
    std::vector<Tensor> g{probs({0.9f, 0.1f}), probs({0.3f, 0.7f})};
    auto f = g;
    CHECK(classify_output(g, f, *make("top1")).kind == OutcomeKind::Masked);
    f[1][0] = 0.31f;
    auto out = classify_output(g, f, *make("top1"));
    CHECK(out.kind == OutcomeKind::Usable);
    CHECK(out.detail.contains("1"));
    f[0][1] = 0.95f;
    CHECK(classify_output(g, f, *make("top1")).kind == OutcomeKind::Unusable);
}
