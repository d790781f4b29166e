#include "fes/analyzer.hpp"

#include "fes/error.hpp"
#include "fes/graph.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fes {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<DiffRecord> diff_tensors(const Tensor& golden, const Tensor& corrupted)
{
    if (golden.shape() != corrupted.shape())
        throw ShapeError("cannot diff tensors of shape " + to_string(golden.shape()) + " and " +
                         to_string(corrupted.shape()));
    DiffRecord d;
    for (std::size_t i = 0; i < golden.size(); ++i)
        if (float_bits(golden[i]) != float_bits(corrupted[i])) {
            d.indices.push_back(i);
            d.golden_vals.push_back(golden[i]);
            d.corrupted_vals.push_back(corrupted[i]);
        }
    if (d.indices.empty())
        return std::nullopt;
    return d;
}

DomainKind classify_value_domain(float golden, float corrupted)
{
    if (std::isnan(corrupted))
        return DomainKind::NaN;
    if (corrupted == 0.0f)
        return DomainKind::Zero;
    if (std::popcount(float_bits(golden) ^ float_bits(corrupted)) == 1)
        return DomainKind::BitFlip;
    if (std::abs(static_cast<double>(corrupted) - static_cast<double>(golden)) <= 1.0)
        return DomainKind::InUnitBall;
    return DomainKind::Random;
}

SpatialPattern classify_spatial(const DiffRecord& diff, const Shape& shape)
{
    if (diff.indices.empty())
        throw DataError("classify_spatial needs a non-empty diff");
    const auto view = canonical_view(shape);
    std::vector<Location> locs;
    locs.reserve(diff.indices.size());
    for (auto i : diff.indices)
        locs.push_back(location_of(view, i));

    SpatialPattern p;
    if (locs.size() == 1) {
        p.variant = SpatialVariant::SinglePoint;
        p.c = locs[0].c;
        p.y = locs[0].y;
        p.x = locs[0].x;
        return p;
    }

    // Locations are in flat order, so per-map x lists come out sorted.
    std::map<std::size_t, std::vector<std::size_t>> row_by_map;
    bool same_y = true;
    for (auto& l : locs) {
        same_y &= l.y == locs[0].y;
        row_by_map[l.c].push_back(l.x);
    }
    auto fill_row = [&](const std::vector<std::size_t>& xs) {
        p.x_start = xs.front();
        p.x_end = xs.back();
        for (auto x = p.x_start; x <= p.x_end; ++x)
            if (!std::binary_search(xs.begin(), xs.end(), x))
                p.skipped_points.push_back(x);
    };

    if (row_by_map.size() == 1) {
        if (!same_y) {
            p.variant = SpatialVariant::RandomSFM;
            return p;
        }
        p.variant = SpatialVariant::SameRow;
        p.c = locs[0].c;
        p.y = locs[0].y;
        fill_row(row_by_map.begin()->second);
        return p;
    }

    if (!same_y) {
        p.variant = SpatialVariant::RandomMFM;
        return p;
    }

    // Entry-point candidates: x positions present in every corrupted map.
    std::vector<std::size_t> common = row_by_map.begin()->second;
    for (auto& [c, xs] : row_by_map) {
        std::vector<std::size_t> next;
        std::set_intersection(common.begin(), common.end(), xs.begin(), xs.end(), std::back_inserter(next));
        common.swap(next);
    }
    if (common.empty()) {
        p.variant = SpatialVariant::RandomMFM;
        return p;
    }

    p.y = locs[0].y;
    p.x = common.front();
    p.c_first = row_by_map.begin()->first;
    p.c_last = row_by_map.rbegin()->first;
    for (auto c = p.c_first; c <= p.c_last; ++c)
        if (!row_by_map.count(c))
            p.skipped_maps.push_back(c);

    std::vector<std::size_t> row;
    for (auto& [c, xs] : row_by_map)
        if (xs.size() > 1) {
            p.shattered_maps.push_back(c);
            if (row.empty())
                row = xs;
        }
    if (p.shattered_maps.empty()) {
        p.variant = SpatialVariant::BulletWake;
        return p;
    }
    p.variant = SpatialVariant::ShatteredGlass;
    fill_row(row);
    for (auto& [c, xs] : row_by_map)
        if (xs.size() > 1) {
            p.x_start = std::min(p.x_start, xs.front());
            p.x_end = std::max(p.x_end, xs.back());
        }
    return p;
}

std::optional<PairClassification> analyze_pair(const Tensor& golden, const Tensor& corrupted)
{
    auto diff = diff_tensors(golden, corrupted);
    if (!diff)
        return std::nullopt;
    PairClassification pc;
    pc.spatial = classify_spatial(*diff, golden.shape());
    pc.cardinality = diff->cardinality();
    const auto view = canonical_view(golden.shape());
    std::set<std::size_t> maps;
    for (std::size_t i = 0; i < diff->cardinality(); ++i) {
        pc.domains.push_back(classify_value_domain(diff->golden_vals[i], diff->corrupted_vals[i]));
        maps.insert(location_of(view, diff->indices[i]).c);
    }
    pc.maps = maps.size();
    pc.single_map = maps.size() == 1;
    return pc;
}

// ---- corpus ----------------------------------------------------------------

namespace {

const std::set<std::string> known_meta_keys{"operator", "shape", "golden"};

void scan_batch(const fs::path& dir, CorpusScan& scan)
{
    const auto meta_path = dir / "meta.json";
    json meta;
    try {
        std::ifstream in(meta_path);
        meta = json::parse(in);
        auto kind = meta.at("operator").get<std::string>();
        Shape shape;
        for (auto& e : meta.at("shape"))
            shape.push_back(e.get<std::size_t>());
        auto golden = dir / meta.at("golden").get<std::string>();
        for (auto& [key, _] : meta.items())
            if (!known_meta_keys.count(key))
                scan.warnings.push_back(meta_path.string() + ": ignoring unknown field '" + key + "'");
        std::vector<fs::path> faulty;
        for (auto& f : fs::directory_iterator(dir)) {
            auto name = f.path().filename().string();
            if (f.is_regular_file() && name.rfind("faulty_", 0) == 0 && f.path().extension() == ".bin")
                faulty.push_back(f.path());
        }
        std::sort(faulty.begin(), faulty.end());
        for (auto& f : faulty)
            scan.entries.push_back({kind, shape, golden, f});
    } catch (const std::exception& e) {
        ++scan.unreadable;
        scan.warnings.push_back(meta_path.string() + ": skipped batch (" + e.what() + ")");
    }
}

} // namespace

CorpusScan scan_corpus(const fs::path& root)
{
    CorpusScan scan;
    if (!fs::is_directory(root))
        throw DataError("corpus directory " + root.string() + " does not exist");
    if (fs::exists(root / "meta.json")) {
        scan_batch(root, scan);
        return scan;
    }
    std::vector<fs::path> batches;
    for (auto& d : fs::directory_iterator(root))
        if (d.is_directory() && fs::exists(d.path() / "meta.json"))
            batches.push_back(d.path());
    std::sort(batches.begin(), batches.end());
    for (auto& b : batches)
        scan_batch(b, scan);
    return scan;
}

void write_corpus_batch(const fs::path& dir, const std::string& kind, const Tensor& golden,
                        const std::vector<Tensor>& faulty)
{
    fs::create_directories(dir);
    json meta{{"operator", kind}, {"shape", golden.shape()}, {"golden", "golden.bin"}};
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    write_raw(dir / "golden.bin", golden);
    for (std::size_t i = 0; i < faulty.size(); ++i) {
        std::ostringstream name;
        name << "faulty_" << std::setw(5) << std::setfill('0') << i << ".bin";
        write_raw(dir / name.str(), faulty[i]);
    }
}

double KindStats::residue_rate() const
{
    auto n = corrupted();
    return n ? static_cast<double>(residue.size()) / static_cast<double>(n) : 0.0;
}

std::uint64_t AnalysisReport::masked() const
{
    std::uint64_t m = 0;
    for (auto& [k, s] : kinds)
        m += s.masked;
    return m;
}

BuildResult build_error_db(const std::vector<CorpusEntry>& corpus, const BuildOptions& options)
{
    BuildResult result;
    auto& report = result.report;
    report.corpus = options.corpus_id;
    report.min_samples = options.min_samples;
    report.entries = corpus.size();

    // Goldens are shared by many pairs; load each once.
    std::map<fs::path, std::optional<Tensor>> goldens;
    for (auto& e : corpus)
        if (!goldens.count(e.golden)) {
            try {
                goldens[e.golden] = read_raw(e.golden, e.shape);
            } catch (const std::exception& ex) {
                goldens[e.golden] = std::nullopt;
                report.warnings.push_back(ex.what());
            }
        }

    struct Outcome {
        bool unreadable = false;
        std::string error;
        std::optional<PairClassification> pc;
    };
    std::vector<Outcome> outcomes(corpus.size());
    const auto n = static_cast<std::int64_t>(corpus.size());
    const int threads = options.workers > 0 ? options.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        auto& e = corpus[static_cast<std::size_t>(i)];
        auto& out = outcomes[static_cast<std::size_t>(i)];
        auto& golden = goldens.at(e.golden);
        if (!golden) {
            out.unreadable = true;
            out.error = "unreadable golden " + e.golden.string();
            continue;
        }
        try {
            out.pc = analyze_pair(*golden, read_raw(e.corrupted, e.shape));
        } catch (const std::exception& ex) {
            out.unreadable = true;
            out.error = ex.what();
        }
    }

    // Serial fold in corpus order keeps the report independent of scheduling.
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& e = corpus[i];
        auto& s = report.kinds[e.kind];
        auto& out = outcomes[i];
        if (out.unreadable) {
            ++s.unreadable;
            ++report.unreadable;
            report.warnings.push_back("skipped " + e.corrupted.string() + ": " + out.error);
            continue;
        }
        ++s.pairs;
        if (!out.pc) {
            ++s.masked;
            continue;
        }
        auto& pc = *out.pc;
        ++s.spatial[static_cast<std::size_t>(pc.spatial.variant)];
        for (auto d : pc.domains)
            ++s.domains[static_cast<std::size_t>(d)];
        ++s.cardinality_hist[pc.cardinality];
        if (pc.cardinality < 16) {
            ++s.below16;
            s.below16_single_map += pc.single_map ? 1 : 0;
        }
        if (!is_generatable(pc.spatial.variant))
            s.residue.push_back(e.corrupted.string());
    }

    for (auto& [kind, s] : report.kinds) {
        const auto corrupted = s.corrupted();
        if (corrupted < options.min_samples) {
            s.note = "excluded: " + std::to_string(corrupted) + " corrupted pairs, need " +
                     std::to_string(options.min_samples);
            continue;
        }
        if (corrupted == 0)
            continue;
        ErrorModelEntry entry;
        std::uint64_t values = 0;
        for (auto c : s.domains)
            values += c;
        for (std::size_t v = 0; v < spatial_variant_count; ++v)
            entry.spatial_freq[v] = static_cast<double>(s.spatial[v]) / static_cast<double>(corrupted);
        for (std::size_t d = 0; d < domain_kind_count; ++d)
            entry.domain_freq[d] = static_cast<double>(s.domains[d]) / static_cast<double>(values);
        entry.cardinality_hist = s.cardinality_hist;
        entry.corpus = options.corpus_id;
        entry.samples = corrupted;
        entry.known_kind = parse_op_kind(kind).has_value();
        if (!(entry.generatable_mass() > 0.0)) {
            s.note = "excluded: only unstructured corruption observed";
            continue;
        }
        s.included = true;
        result.db.kinds.emplace(kind, std::move(entry));
    }
    validate(result.db);
    return result;
}

json to_json(const AnalysisReport& r)
{
    json kinds = json::object();
    for (auto& [kind, s] : r.kinds) {
        json sp = json::object(), dom = json::object(), hist = json::object();
        for (std::size_t v = 0; v < spatial_variant_count; ++v)
            sp[std::string(to_string(static_cast<SpatialVariant>(v)))] = s.spatial[v];
        for (std::size_t d = 0; d < domain_kind_count; ++d)
            dom[std::string(to_string(static_cast<DomainKind>(d)))] = s.domains[d];
        for (auto& [k, v] : s.cardinality_hist)
            hist[std::to_string(k)] = v;
        kinds[kind] = {{"pairs", s.pairs},
                       {"masked", s.masked},
                       {"corrupted", s.corrupted()},
                       {"unreadable", s.unreadable},
                       {"spatial_counts", sp},
                       {"domain_counts", dom},
                       {"cardinality_hist", hist},
                       {"below16", s.below16},
                       {"below16_single_map", s.below16_single_map},
                       {"residue_rate", s.residue_rate()},
                       {"residue", s.residue},
                       {"included", s.included},
                       {"note", s.note}};
    }
    const auto pairs = [&] {
        std::uint64_t p = 0;
        for (auto& [k, s] : r.kinds)
            p += s.pairs;
        return p;
    }();
    return {{"schema_version", 1},
            {"corpus", r.corpus},
            {"min_samples", r.min_samples},
            {"entries", r.entries},
            {"unreadable", r.unreadable},
            {"masked", r.masked()},
            {"masked_rate", pairs ? static_cast<double>(r.masked()) / static_cast<double>(pairs) : 0.0},
            {"warnings", r.warnings},
            {"kinds", kinds}};
}

std::string render_text(const AnalysisReport& r)
{
    std::ostringstream os;
    auto pct = [](std::uint64_t num, std::uint64_t den) {
        std::ostringstream p;
        p << std::fixed << std::setprecision(1) << (den ? 100.0 * static_cast<double>(num) / static_cast<double>(den) : 0.0)
          << '%';
        return p.str();
    };
    os << "corpus: " << r.corpus << "  entries: " << r.entries << "  unreadable: " << r.unreadable
       << "  masked: " << r.masked() << '\n';
    os << std::left << std::setw(14) << "" << std::setw(30) << "| same feature map" << "|| multiple feature maps\n";
    os << std::setw(14) << "operator" << std::right << std::setw(9) << "single" << std::setw(9) << "row" << std::setw(9)
       << "random" << "  |" << std::setw(9) << "bullet" << std::setw(9) << "shatter" << std::setw(9) << "random"
       << std::setw(10) << "samples" << '\n';
    for (auto& [kind, s] : r.kinds) {
        const auto n = s.corrupted();
        os << std::left << std::setw(14) << kind << std::right;
        for (std::size_t v = 0; v < spatial_variant_count; ++v) {
            if (v == 3)
                os << "  |";
            os << std::setw(9) << pct(s.spatial[v], n);
        }
        os << std::setw(10) << n;
        if (!s.note.empty())
            os << "  (" << s.note << ')';
        os << '\n';
    }
    os << '\n' << std::left << std::setw(14) << "operator" << std::right;
    for (std::size_t d = 0; d < domain_kind_count; ++d)
        os << std::setw(12) << to_string(static_cast<DomainKind>(d));
    os << std::setw(16) << "<16 single-map" << '\n';
    for (auto& [kind, s] : r.kinds) {
        std::uint64_t values = 0;
        for (auto c : s.domains)
            values += c;
        os << std::left << std::setw(14) << kind << std::right;
        for (std::size_t d = 0; d < domain_kind_count; ++d)
            os << std::setw(12) << pct(s.domains[d], values);
        os << std::setw(16) << pct(s.below16_single_map, s.below16) << '\n';
    }
    std::size_t residue = 0;
    for (auto& [kind, s] : r.kinds)
        residue += s.residue.size();
    if (residue)
        os << '\n' << residue << " pair(s) with unstructured corruption listed in the JSON report for review\n";
    return os.str();
}

} // namespace fes
