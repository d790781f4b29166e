#include "fes/report.hpp"

#include "fes/error.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fes {

using nlohmann::json;

std::uint64_t Tally::total() const
{
    std::uint64_t t = 0;
    for (auto c : counts)
        t += c;
    return t;
}

double Tally::unusable_rate() const
{
    auto t = total();
    return t ? static_cast<double>((*this)[OutcomeKind::Unusable]) / static_cast<double>(t) : 0.0;
}

Tally& Tally::operator+=(const Tally& other)
{
    for (std::size_t i = 0; i < counts.size(); ++i)
        counts[i] += other.counts[i];
    return *this;
}

bool Report::operator==(const Report& o) const
{
    return totals == o.totals && by_site == o.by_site && by_kind == o.by_kind && by_spatial == o.by_spatial &&
           by_domain == o.by_domain && metadata == o.metadata;
}

namespace {

std::string domain_key(const CorruptionEvent& e)
{
    std::set<DomainKind> kinds;
    for (auto& d : e.domains)
        kinds.insert(d.kind);
    if (kinds.size() == 1)
        return std::string(to_string(*kinds.begin()));
    return kinds.empty() ? "None" : "Mixed";
}

json tally_json(const Tally& t)
{
    json j{{"count", t.total()}, {"unusable_rate", t.unusable_rate()}};
    for (std::size_t i = 0; i < outcome_kind_count; ++i)
        j[std::string(to_string(static_cast<OutcomeKind>(i)))] = t.counts[i];
    return j;
}

json tally_map_json(const std::map<std::string, Tally>& m)
{
    json j = json::object();
    for (auto& [k, t] : m)
        j[k] = tally_json(t);
    return j;
}

void merge_into(std::map<std::string, Tally>& dst, const std::map<std::string, Tally>& src)
{
    for (auto& [k, t] : src)
        dst[k] += t;
}

} // namespace

Report aggregate(std::span<const CampaignRecord> records)
{
    Report r;
    std::set<std::uint64_t> seeds;
    for (auto& rec : records) {
        const auto k = rec.outcome.kind;
        r.totals.add(k);
        r.by_site[rec.event.site].add(k);
        r.by_kind[rec.event.kind].add(k);
        r.by_spatial[std::string(to_string(rec.event.spatial.variant))].add(k);
        r.by_domain[domain_key(rec.event)].add(k);
        seeds.insert(rec.master_seed);
    }
    if (!seeds.empty())
        r.metadata["master_seeds"] = seeds;
    return r;
}

Report merge(const Report& a, const Report& b)
{
    Report r = a;
    r.totals += b.totals;
    merge_into(r.by_site, b.by_site);
    merge_into(r.by_kind, b.by_kind);
    merge_into(r.by_spatial, b.by_spatial);
    merge_into(r.by_domain, b.by_domain);
    std::set<std::uint64_t> seeds;
    for (auto* m : {&a.metadata, &b.metadata})
        if (m->contains("master_seeds"))
            for (auto& s : m->at("master_seeds"))
                seeds.insert(s.get<std::uint64_t>());
    for (auto& [k, v] : b.metadata.items())
        if (!r.metadata.contains(k))
            r.metadata[k] = v;
    if (!seeds.empty())
        r.metadata["master_seeds"] = seeds;
    return r;
}

json to_json(const Report& r)
{
    return {{"schema_version", report_schema_version},
            {"metadata", r.metadata},
            {"totals", tally_json(r.totals)},
            {"by_kind", tally_map_json(r.by_kind)},
            {"by_site", tally_map_json(r.by_site)},
            {"by_spatial", tally_map_json(r.by_spatial)},
            {"by_domain", tally_map_json(r.by_domain)}};
}

std::string render_text(const Report& r)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    const auto& t = r.totals;
    os << "experiments: " << t.total() << "  masked: " << t[OutcomeKind::Masked] << "  usable: "
       << t[OutcomeKind::Usable] << "  unusable: " << t[OutcomeKind::Unusable] << "  engine_error: "
       << t[OutcomeKind::EngineError] << "  unusable rate: " << 100.0 * t.unusable_rate() << "%\n";
    for (auto& [k, v] : r.metadata.items())
        os << "  " << k << ": " << v.dump() << '\n';

    auto table = [&](const char* title, const std::map<std::string, Tally>& m) {
        std::vector<std::pair<std::string, Tally>> rows(m.begin(), m.end());
        std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) {
            return a.second.unusable_rate() > b.second.unusable_rate();
        });
        os << '\n' << std::left << std::setw(18) << title << std::right << std::setw(8) << "count" << std::setw(9)
           << "masked" << std::setw(9) << "usable" << std::setw(10) << "unusable" << std::setw(8) << "error"
           << std::setw(12) << "unusable%" << '\n';
        for (auto& [name, tl] : rows)
            os << std::left << std::setw(18) << name << std::right << std::setw(8) << tl.total() << std::setw(9)
               << tl[OutcomeKind::Masked] << std::setw(9) << tl[OutcomeKind::Usable] << std::setw(10)
               << tl[OutcomeKind::Unusable] << std::setw(8) << tl[OutcomeKind::EngineError] << std::setw(11)
               << 100.0 * tl.unusable_rate() << "%\n";
    };
    table("operator kind", r.by_kind);
    table("site", r.by_site);
    table("spatial pattern", r.by_spatial);
    table("value domain", r.by_domain);
    return os.str();
}

std::vector<CampaignRecord> read_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open records file " + path.string());
    std::vector<CampaignRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record (" + e.what() + ")");
        }
    }
    return out;
}

} // namespace fes
