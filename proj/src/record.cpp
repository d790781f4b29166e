#include "fes/record.hpp"

#include "fes/error.hpp"

namespace fes {

using nlohmann::json;

json to_json(const SpatialPattern& p)
{
    json j{{"variant", std::string(to_string(p.variant))}};
    switch (p.variant) {
    case SpatialVariant::SinglePoint:
        j["c"] = p.c;
        j["y"] = p.y;
        j["x"] = p.x;
        break;
    case SpatialVariant::SameRow:
        j["c"] = p.c;
        j["y"] = p.y;
        j["x_start"] = p.x_start;
        j["x_end"] = p.x_end;
        j["skipped_points"] = p.skipped_points;
        break;
    case SpatialVariant::BulletWake:
        j["y"] = p.y;
        j["x"] = p.x;
        j["c_first"] = p.c_first;
        j["c_last"] = p.c_last;
        j["skipped_maps"] = p.skipped_maps;
        break;
    case SpatialVariant::ShatteredGlass:
        j["y"] = p.y;
        j["x"] = p.x;
        j["c_first"] = p.c_first;
        j["c_last"] = p.c_last;
        j["skipped_maps"] = p.skipped_maps;
        j["shattered_maps"] = p.shattered_maps;
        j["x_start"] = p.x_start;
        j["x_end"] = p.x_end;
        j["skipped_points"] = p.skipped_points;
        break;
    default:
        break;
    }
    return j;
}

SpatialPattern pattern_from_json(const json& j)
{
    SpatialPattern p;
    auto v = parse_spatial_variant(j.at("variant").get<std::string>());
    if (!v)
        throw DataError("unknown spatial variant '" + j.at("variant").get<std::string>() + "'");
    p.variant = *v;
    p.c = j.value("c", std::size_t{0});
    p.y = j.value("y", std::size_t{0});
    p.x = j.value("x", std::size_t{0});
    p.x_start = j.value("x_start", std::size_t{0});
    p.x_end = j.value("x_end", std::size_t{0});
    p.c_first = j.value("c_first", std::size_t{0});
    p.c_last = j.value("c_last", std::size_t{0});
    p.skipped_points = j.value("skipped_points", std::vector<std::size_t>{});
    p.skipped_maps = j.value("skipped_maps", std::vector<std::size_t>{});
    p.shattered_maps = j.value("shattered_maps", std::vector<std::size_t>{});
    return p;
}

json to_json(const CorruptionEvent& e)
{
    json targets = json::array(), domains = json::array();
    for (auto& t : e.targets)
        targets.push_back({t.c, t.y, t.x});
    for (auto& d : e.domains) {
        json jd{{"kind", std::string(to_string(d.kind))}};
        if (d.kind == DomainKind::BitFlip)
            jd["bit"] = d.bit;
        if (d.kind == DomainKind::InUnitBall)
            jd["delta"] = d.delta;
        if (d.kind == DomainKind::Random)
            jd["replacement"] = d.replacement;
        domains.push_back(jd);
    }
    return {{"site", e.site},  {"kind", e.kind},       {"view", e.view},       {"spatial", to_json(e.spatial)},
            {"targets", targets}, {"domains", domains}, {"seed", hex64(e.seed)}};
}

CorruptionEvent event_from_json(const json& j)
{
    CorruptionEvent e;
    e.site = j.at("site").get<std::string>();
    e.kind = j.at("kind").get<std::string>();
    e.view = j.at("view").get<Shape>();
    e.spatial = pattern_from_json(j.at("spatial"));
    for (auto& t : j.at("targets"))
        e.targets.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
    for (auto& jd : j.at("domains")) {
        DomainAssignment d;
        auto k = parse_domain_kind(jd.at("kind").get<std::string>());
        if (!k)
            throw DataError("unknown value domain '" + jd.at("kind").get<std::string>() + "'");
        d.kind = *k;
        d.bit = jd.value("bit", 0);
        d.delta = jd.value("delta", 0.0f);
        d.replacement = jd.value("replacement", 0.0f);
        e.domains.push_back(d);
    }
    e.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
    return e;
}

json to_json(const CampaignRecord& r)
{
    json j{{"index", r.index},
           {"input", r.input},
           {"master_seed", r.master_seed},
           {"site", r.event.site},
           {"kind", r.event.kind},
           {"outcome", std::string(to_string(r.outcome.kind))},
           {"detail", r.outcome.detail},
           {"digest", hex64(r.digest)},
           {"event", to_json(r.event)}};
    if (!r.error.empty())
        j["error"] = r.error;
    if (r.wall_ms)
        j["wall_ms"] = *r.wall_ms;
    return j;
}

CampaignRecord record_from_json(const json& j)
{
    CampaignRecord r;
    r.index = j.at("index").get<std::uint64_t>();
    r.input = j.at("input").get<std::size_t>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    auto k = parse_outcome_kind(j.at("outcome").get<std::string>());
    if (!k)
        throw DataError("unknown outcome '" + j.at("outcome").get<std::string>() + "'");
    r.outcome.kind = *k;
    r.outcome.detail = j.value("detail", json::object());
    r.digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
    r.event = event_from_json(j.at("event"));
    r.error = j.value("error", std::string{});
    if (j.contains("wall_ms"))
        r.wall_ms = j.at("wall_ms").get<double>();
    return r;
}

} // namespace fes
