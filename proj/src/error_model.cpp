#include "fes/error_model.hpp"

#include "fes/error.hpp"
#include "fes/graph.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fes {

using nlohmann::json;

namespace {

constexpr double sum_tolerance = 1e-9;

template <std::size_t N>
void check_vector(const std::array<double, N>& v, const std::string& kind, const char* what)
{
    double sum = 0.0;
    for (auto f : v) {
        if (!(f >= 0.0) || !std::isfinite(f))
            throw DataError("error model '" + kind + "': " + what + " has a negative or non-finite entry");
        sum += f;
    }
    if (std::abs(sum - 1.0) > sum_tolerance)
        throw DataError("error model '" + kind + "': " + what + " sums to " + std::to_string(sum) + ", expected 1");
}

void check_entry(const ErrorModelEntry& e, const std::string& kind)
{
    check_vector(e.spatial_freq, kind, "spatial_freq");
    check_vector(e.domain_freq, kind, "domain_freq");
    if (!(e.generatable_mass() > 0.0))
        throw DataError("error model '" + kind + "': no mass on generatable spatial patterns");
}

template <std::size_t N, typename Name>
std::array<double, N> parse_freq(const json& j, const std::string& kind, const char* what, Name name_of)
{
    if (!j.is_object())
        throw DataError("error model '" + kind + "': " + what + " must be an object");
    std::array<double, N> v{};
    for (auto& [key, val] : j.items()) {
        auto idx = name_of(key);
        if (!idx)
            throw DataError("error model '" + kind + "': unknown " + what + " key '" + key + "'");
        if (!val.is_number())
            throw DataError("error model '" + kind + "': " + what + "." + key + " must be a number");
        v[static_cast<std::size_t>(*idx)] = val.template get<double>();
    }
    return v;
}

ErrorModelEntry entry_from_json(const json& j, const std::string& kind)
{
    if (!j.is_object())
        throw DataError("error model '" + kind + "' must be an object");
    ErrorModelEntry e;
    e.spatial_freq = parse_freq<spatial_variant_count>(j.at("spatial_freq"), kind, "spatial_freq",
                                                       [](const std::string& s) { return parse_spatial_variant(s); });
    e.domain_freq = parse_freq<domain_kind_count>(j.at("domain_freq"), kind, "domain_freq",
                                                  [](const std::string& s) { return parse_domain_kind(s); });
    if (j.contains("cardinality_hist"))
        for (auto& [key, val] : j.at("cardinality_hist").items()) {
            std::size_t n = 0;
            auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), n);
            if (ec != std::errc() || end != key.data() + key.size())
                throw DataError("error model '" + kind + "': bad cardinality_hist key '" + key + "'");
            e.cardinality_hist[n] = val.get<std::uint64_t>();
        }
    if (j.contains("provenance")) {
        auto& p = j.at("provenance");
        e.corpus = p.value("corpus", "");
        e.samples = p.value("samples", std::uint64_t{0});
    }
    e.known_kind = parse_op_kind(kind).has_value();
    check_entry(e, kind);
    return e;
}

json entry_to_json(const ErrorModelEntry& e)
{
    json sp = json::object(), dom = json::object(), hist = json::object();
    for (std::size_t i = 0; i < spatial_variant_count; ++i)
        sp[std::string(to_string(static_cast<SpatialVariant>(i)))] = e.spatial_freq[i];
    for (std::size_t i = 0; i < domain_kind_count; ++i)
        dom[std::string(to_string(static_cast<DomainKind>(i)))] = e.domain_freq[i];
    json j{{"spatial_freq", sp}, {"domain_freq", dom}, {"provenance", {{"corpus", e.corpus}, {"samples", e.samples}}}};
    if (!e.cardinality_hist.empty()) {
        for (auto& [k, v] : e.cardinality_hist)
            hist[std::to_string(k)] = v;
        j["cardinality_hist"] = hist;
    }
    return j;
}

} // namespace

double ErrorModelEntry::generatable_mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < spatial_variant_count; ++i)
        if (is_generatable(static_cast<SpatialVariant>(i)))
            m += spatial_freq[i];
    return m;
}

const ErrorModelEntry* ErrorModelDB::find(const std::string& kind, bool allow_fallback) const
{
    if (auto it = kinds.find(kind); it != kinds.end())
        return &it->second;
    if (allow_fallback && fallback)
        return &*fallback;
    return nullptr;
}

std::vector<std::string> ErrorModelDB::unknown_kinds() const
{
    std::vector<std::string> out;
    for (auto& [k, e] : kinds)
        if (!e.known_kind)
            out.push_back(k);
    return out;
}

ErrorModelEntry default_fallback_entry()
{
    // Sigmoid row: 89.7 / 1.4 / 9.0 (RandomMFM); the printed row totals 100.1 so it is rescaled.
    ErrorModelEntry e;
    const double total = 0.897 + 0.014 + 0.090;
    e.spatial_freq = {0.897 / total, 0.014 / total, 0.0, 0.0, 0.0, 0.090 / total};
    e.domain_freq = {0.01, 0.02, 0.02, 0.45, 0.50};
    e.corpus = "builtin linear-kernel fallback";
    return e;
}

void validate(const ErrorModelDB& db)
{
    if (db.schema_version != db_schema_version)
        throw DataError("unsupported error model schema_version " + std::to_string(db.schema_version));
    for (auto& [kind, e] : db.kinds)
        check_entry(e, kind);
    if (db.fallback)
        check_entry(*db.fallback, "fallback");
}

ErrorModelDB db_from_json(const json& doc)
{
    if (!doc.is_object())
        throw DataError("error model database must be a JSON object");
    ErrorModelDB db;
    try {
        db.schema_version = doc.at("schema_version").get<int>();
        if (db.schema_version != db_schema_version)
            throw DataError("unsupported error model schema_version " + std::to_string(db.schema_version));
        for (auto& [kind, j] : doc.at("kinds").items())
            db.kinds.emplace(kind, entry_from_json(j, kind));
        if (doc.contains("fallback") && !doc.at("fallback").is_null())
            db.fallback = entry_from_json(doc.at("fallback"), "fallback");
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed error model database: ") + e.what());
    }
    return db;
}

json to_json(const ErrorModelDB& db)
{
    json kinds = json::object();
    for (auto& [k, e] : db.kinds)
        kinds[k] = entry_to_json(e);
    json doc{{"schema_version", db.schema_version}, {"kinds", kinds}};
    if (db.fallback)
        doc["fallback"] = entry_to_json(*db.fallback);
    return doc;
}

ErrorModelDB load_db(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open error model database " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return db_from_json(doc);
}

void save_db(const ErrorModelDB& db, const std::filesystem::path& path)
{
    validate(db);
    std::ofstream out(path);
    out << to_json(db).dump(2) << '\n';
    if (!out)
        throw DataError("cannot write " + path.string());
}

std::array<double, spatial_variant_count> effective_spatial_freq(const ErrorModelEntry& entry, const Shape& view)
{
    std::array<double, spatial_variant_count> w{};
    double total = 0.0;
    for (std::size_t i = 0; i < spatial_variant_count; ++i) {
        auto v = static_cast<SpatialVariant>(i);
        if (is_generatable(v) && admits(v, view)) {
            w[i] = entry.spatial_freq[i];
            total += w[i];
        }
    }
    if (total <= 0.0) {
        w.fill(0.0);
        w[static_cast<std::size_t>(SpatialVariant::SinglePoint)] = 1.0;
        return w;
    }
    for (auto& f : w)
        f /= total;
    return w;
}

CorruptionEvent sample_error(const ErrorModelEntry& entry, const std::string& kind, const Shape& shape, Rng& rng,
                             const SamplerConfig& cfg)
{
    CorruptionEvent ev;
    ev.kind = kind;
    ev.view = canonical_view(shape);

    const auto weights = effective_spatial_freq(entry, ev.view);
    auto pick = [&rng](const auto& probs) {
        const double u = uniform01(rng);
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0)
                continue;
            last = i;
            acc += probs[i];
            if (u < acc)
                return i;
        }
        return last;
    };

    ev.spatial = sample_pattern(static_cast<SpatialVariant>(pick(weights)), ev.view, rng, cfg);
    ev.targets = generate_targets(ev.spatial, ev.view);

    double dom_total = std::accumulate(entry.domain_freq.begin(), entry.domain_freq.end(), 0.0);
    std::array<double, domain_kind_count> dom{};
    for (std::size_t i = 0; i < domain_kind_count; ++i)
        dom[i] = entry.domain_freq[i] / dom_total;
    for (std::size_t t = 0; t < ev.targets.size(); ++t) {
        DomainAssignment a;
        a.kind = static_cast<DomainKind>(pick(dom));
        // Every parameter is drawn for every target so the stream position does not
        // depend on the drawn kinds; domain-restricted replays then stay aligned.
        a.bit = static_cast<int>(uniform_index(rng, 32));
        a.delta = static_cast<float>(uniform_real(rng, -1.0, 1.0));
        a.replacement = static_cast<float>(uniform_real(rng, -cfg.random_scale, cfg.random_scale));
        if (cfg.force_domain)
            a.kind = *cfg.force_domain;
        if (a.kind != DomainKind::BitFlip)
            a.bit = 0;
        if (a.kind != DomainKind::InUnitBall)
            a.delta = 0.0f;
        if (a.kind != DomainKind::Random)
            a.replacement = 0.0f;
        ev.domains.push_back(a);
    }
    return ev;
}

CorruptionEvent sample_error(const ErrorModelDB& db, const std::string& kind, const Shape& shape, Rng& rng,
                             const SamplerConfig& cfg, bool allow_fallback)
{
    auto* entry = db.find(kind, allow_fallback);
    if (!entry)
        throw DataError("no error model for operator kind '" + kind + "'" +
                        (allow_fallback ? " and no fallback entry" : " (fallback disabled)"));
    return sample_error(*entry, kind, shape, rng, cfg);
}

} // namespace fes
