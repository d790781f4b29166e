#include "support.hpp"

#include "fes/analyzer.hpp"
#include "fes/error.hpp"
#include "fes/saboteur.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

using namespace fes;

namespace {

DiffRecord diff_at(const Shape& view, std::vector<Location> locs)
{
    std::sort(locs.begin(), locs.end());
    DiffRecord d;
    for (auto& l : locs) {
        d.indices.push_back(flat_index(view, l));
        d.golden_vals.push_back(1.0f);
        d.corrupted_vals.push_back(2.0f);
    }
    return d;
}

// Independent element-wise oracle over the raw 32-bit encodings.
std::vector<std::size_t> oracle_diff(const Tensor& a, const Tensor& b)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint32_t x, y;
        std::memcpy(&x, &a.data()[i], 4);
        std::memcpy(&y, &b.data()[i], 4);
        if (x != y)
            out.push_back(i);
    }
    return out;
}

ErrorModelEntry conv1_entry()
{
    ErrorModelEntry e;
    e.spatial_freq = {.427, .187, 0, .206, .162, .018};
    e.domain_freq = {0, 0, 0, 1, 0};
    return e;
}

} // namespace

TEST_CASE("diff of identical tensors is empty")
{
    Tensor a({2, 3, 3}, 1.0f);
    CHECK_FALSE(diff_tensors(a, a));
    CHECK_THROWS_AS(diff_tensors(a, Tensor({2, 3, 2})), ShapeError);
}

TEST_CASE("one NaN is one difference")
{
    Tensor a({1, 1, 10}, 1.0f), b = a;
    b[7] = std::numeric_limits<float>::quiet_NaN();
    auto d = diff_tensors(a, b);
    REQUIRE(d);
    CHECK(d->cardinality() == 1);
    CHECK(d->indices[0] == 7);
}

TEST_CASE("scattered small perturbations match the element-wise oracle")
{
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = test::random_tensor({3, 5, 7}, rng);
        auto b = a;
        const auto n = test::pick(rng, 1, 10);
        for (std::size_t k = 0; k < n; ++k) {
            auto i = uniform_index(rng, a.size());
            b[i] = a[i] + static_cast<float>(uniform_real(rng, 0.01, 0.9));
        }
        auto d = diff_tensors(a, b);
        auto expect = oracle_diff(a, b);
        REQUIRE(d);
        CHECK(d->indices == expect);
        CHECK(diff_tensors(b, a)->cardinality() == d->cardinality());
        for (std::size_t i = 0; i < d->cardinality(); ++i)
            CHECK(float_bits(d->golden_vals[i]) != float_bits(d->corrupted_vals[i]));
    }
}

TEST_CASE("value domain precedence")
{
    CHECK(classify_value_domain(3.5f, std::numeric_limits<float>::quiet_NaN()) == DomainKind::NaN);
    CHECK(classify_value_domain(3.5f, 0.0f) == DomainKind::Zero);
    CHECK(classify_value_domain(3.5f, -0.0f) == DomainKind::Zero);
    const float one_ulp = bits_float(float_bits(1.0f) ^ 1u);
    CHECK(std::popcount(float_bits(1.0f) ^ float_bits(one_ulp)) == 1);
    CHECK(std::fabs(one_ulp - 1.0f) <= 1.0f);
    CHECK(classify_value_domain(1.0f, one_ulp) == DomainKind::BitFlip);
    CHECK(classify_value_domain(2.0f, 2.7f) == DomainKind::InUnitBall);
    CHECK(std::popcount(float_bits(2.0f) ^ float_bits(57.25f)) > 1);
    CHECK(classify_value_domain(2.0f, 57.25f) == DomainKind::Random);
    CHECK(classify_value_domain(1.0f, -1.0f) == DomainKind::BitFlip);
    CHECK(classify_value_domain(0.0f, 1.0f) == DomainKind::InUnitBall);
    CHECK(classify_value_domain(std::numeric_limits<float>::infinity(), 5.0f) == DomainKind::Random);
}

TEST_CASE("spatial classification of the reference renderings")
{
    const Shape v{8, 6, 10};
    CHECK(classify_spatial(diff_at(v, {{0, 2, 3}}), v).variant == SpatialVariant::SinglePoint);

    auto row = classify_spatial(diff_at(v, {{0, 2, 3}, {0, 2, 5}, {0, 2, 9}}), v);
    CHECK(row.variant == SpatialVariant::SameRow);
    CHECK(row.x_start == 3);
    CHECK(row.x_end == 9);
    CHECK(row.skipped_points == std::vector<std::size_t>{4, 6, 7, 8});

    auto wake = classify_spatial(diff_at(v, {{0, 4, 4}, {3, 4, 4}, {7, 4, 4}}), v);
    CHECK(wake.variant == SpatialVariant::BulletWake);
    CHECK(wake.c_first == 0);
    CHECK(wake.c_last == 7);
    CHECK(wake.skipped_maps == std::vector<std::size_t>{1, 2, 4, 5, 6});

    auto glass = classify_spatial(diff_at(v, {{0, 4, 4}, {3, 4, 2}, {3, 4, 4}, {3, 4, 6}, {7, 4, 4}}), v);
    CHECK(glass.variant == SpatialVariant::ShatteredGlass);
    CHECK(glass.shattered_maps == std::vector<std::size_t>{3});
    CHECK(glass.x == 4);

    CHECK(classify_spatial(diff_at(v, {{0, 1, 1}, {2, 5, 7}}), v).variant == SpatialVariant::RandomMFM);
    CHECK(classify_spatial(diff_at(v, {{0, 1, 1}, {0, 5, 7}}), v).variant == SpatialVariant::RandomSFM);
    // Shattered row that misses the wake's x falls to the residue bucket.
    CHECK(classify_spatial(diff_at(v, {{0, 4, 4}, {3, 4, 5}, {3, 4, 6}, {7, 4, 4}}), v).variant ==
          SpatialVariant::RandomMFM);
    // Flat tensors reshape to one map.
    CHECK(classify_spatial(diff_at({1, 1, 12}, {{0, 0, 1}, {0, 0, 11}}), {1, 12}).variant == SpatialVariant::SameRow);
}

TEST_CASE("analyze_pair on constructed tensors")
{
    Tensor g({8, 6, 6}, 1.0f);
    CHECK_FALSE(analyze_pair(g, g));

    // Five maps share the row y=2 over x in [0,3]: every map is shattered.
    auto c = g;
    for (std::size_t ch = 0; ch < 5; ++ch)
        for (std::size_t x : {0, 1, 2, 3})
            c[(ch * 6 + 2) * 6 + x] = 1.5f;
    auto pc = analyze_pair(g, c);
    REQUIRE(pc);
    CHECK(pc->cardinality == 20);
    CHECK(pc->maps == 5);
    CHECK_FALSE(pc->single_map);
    CHECK(pc->spatial.variant == SpatialVariant::ShatteredGlass);

    auto w = g;
    for (std::size_t ch = 0; ch < 5; ++ch)
        w[(ch * 6 + 2) * 6 + 4] = 1.5f;
    auto pw = analyze_pair(g, w);
    REQUIRE(pw);
    CHECK(pw->spatial.variant == SpatialVariant::BulletWake);
    CHECK(pw->cardinality == 5);
}

TEST_CASE("bullet wake of twenty values across twenty maps")
{
    Tensor g({24, 4, 4}, 0.5f), c = g;
    for (std::size_t ch = 2; ch < 22; ++ch)
        c[(ch * 4 + 1) * 4 + 3] = 0.8f;
    auto pc = analyze_pair(g, c);
    REQUIRE(pc);
    CHECK(pc->spatial.variant == SpatialVariant::BulletWake);
    CHECK(pc->cardinality == 20);
    for (auto d : pc->domains)
        CHECK(d == DomainKind::InUnitBall);
}

TEST_CASE("generator and analyzer are inverses on structured patterns")
{
    Rng rng(404);
    const SpatialVariant structured[] = {SpatialVariant::SinglePoint, SpatialVariant::SameRow,
                                         SpatialVariant::BulletWake, SpatialVariant::ShatteredGlass};
    for (int i = 0; i < 3000; ++i) {
        const Shape shape{test::pick(rng, 2, 12), test::pick(rng, 2, 12), test::pick(rng, 2, 12)};
        const auto v = structured[uniform_index(rng, 4)];
        auto golden = test::random_tensor(shape, rng);
        auto p = sample_pattern(v, shape, rng);
        auto targets = generate_targets(p, shape);
        std::vector<DomainAssignment> doms(targets.size(), DomainAssignment{DomainKind::Zero});
        auto corrupted = corrupt_values(golden, targets, doms, rng);
        auto pc = analyze_pair(golden, corrupted);
        REQUIRE(pc);
        CHECK(pc->spatial.variant == v);
        if (v == SpatialVariant::SameRow || v == SpatialVariant::BulletWake)
            CHECK(pc->spatial == p);
    }
}

TEST_CASE("single point zero round trip recovers both axes")
{
    Rng rng(2);
    auto golden = test::random_tensor({4, 5, 5}, rng, 0.5f, 1.0f);
    std::vector<Location> t{{2, 3, 1}};
    std::vector<DomainAssignment> d{{DomainKind::Zero}};
    auto pc = analyze_pair(golden, corrupt_values(golden, t, d, rng));
    REQUIRE(pc);
    CHECK(pc->spatial.variant == SpatialVariant::SinglePoint);
    CHECK(pc->spatial.c == 2);
    CHECK(pc->domains == std::vector<DomainKind>{DomainKind::Zero});
}

TEST_CASE("corpus scanning and database building")
{
    test::TempDir dir("corpus");
    Rng rng(6);
    auto entry = conv1_entry();

    // Two kinds with independent statistics plus a batch below the sample threshold.
    auto make_batch = [&](const std::string& name, const std::string& kind, const Shape& shape, int n,
                          bool corrupt) {
        auto golden = test::random_tensor(shape, rng);
        std::vector<Tensor> faulty;
        for (int i = 0; i < n; ++i) {
            if (!corrupt) {
                faulty.push_back(golden);
                continue;
            }
            auto ev = sample_error(entry, kind, shape, rng);
            faulty.push_back(corrupt_values(golden, ev.targets, ev.domains, rng));
        }
        write_corpus_batch(dir / name, kind, golden, faulty);
    };
    make_batch("a", "Conv2D", {6, 6, 6}, 300, true);
    make_batch("b", "Mul", {1, 40}, 150, true);
    make_batch("c", "Exp", {1, 16}, 20, true);
    make_batch("d", "Add", {1, 16}, 50, false);

    std::ofstream(dir / "b" / "meta.json") << R"({"operator":"Mul","shape":[1,40],"golden":"golden.bin","device":"gpu0"})";
    std::ofstream(dir / "a" / "faulty_99999.bin") << "short";

    auto scan = scan_corpus(dir.path());
    CHECK(scan.entries.size() == 300 + 1 + 150 + 20 + 50);
    bool warned = false;
    for (auto& w : scan.warnings)
        warned |= w.find("device") != std::string::npos;
    CHECK(warned);

    auto result = build_error_db(scan.entries, {.min_samples = 100, .corpus_id = "unit", .workers = 2});
    CHECK(result.db.kinds.size() == 2);
    CHECK(result.db.kinds.count("Conv2D") == 1);
    CHECK(result.db.kinds.count("Mul") == 1);
    CHECK(result.report.kinds.at("Exp").note.find("excluded") != std::string::npos);
    CHECK(result.report.kinds.at("Add").masked == 50);
    CHECK(result.report.kinds.at("Conv2D").unreadable == 1);
    CHECK(result.report.unreadable == 1);
    CHECK(result.db.kinds.at("Mul").spatial_freq[3] == 0.0);
    CHECK(result.db.kinds.at("Conv2D").samples == 300);
    CHECK(result.db.kinds.at("Conv2D").corpus == "unit");

    // Same answer regardless of worker count.
    auto serial = build_error_db(scan.entries, {.min_samples = 100, .corpus_id = "unit", .workers = 1});
    CHECK(to_json(serial.db) == to_json(result.db));
    CHECK(to_json(serial.report) == to_json(result.report));

    validate(result.db);
    CHECK(render_text(result.report).find("Conv2D") != std::string::npos);
}

TEST_CASE("all-masked corpus gives an empty database")
{
    test::TempDir dir("corpus");
    Tensor g({2, 3, 3}, 1.0f);
    write_corpus_batch(dir.path(), "Add", g, std::vector<Tensor>(10, g));
    auto scan = scan_corpus(dir.path());
    auto result = build_error_db(scan.entries, {.min_samples = 1});
    CHECK(result.db.kinds.empty());
    auto j = to_json(result.report);
    CHECK(j.at("masked_rate").get<double>() == 1.0);
    CHECK_THROWS_AS(scan_corpus(dir / "missing"), DataError);
}

TEST_CASE("recovered frequencies from a synthetic corpus stay within three points")
{
    Rng rng(12);
    auto entry = conv1_entry();
    test::TempDir dir("corpus");
    const Shape shape{8, 8, 8};
    auto golden = test::random_tensor(shape, rng);
    std::vector<Tensor> faulty;
    for (int i = 0; i < 1000; ++i) {
        auto ev = sample_error(entry, "Conv2D", shape, rng);
        faulty.push_back(corrupt_values(golden, ev.targets, ev.domains, rng));
    }
    write_corpus_batch(dir.path(), "Conv2D", golden, faulty);
    auto result = build_error_db(scan_corpus(dir.path()).entries);
    auto& f = result.db.kinds.at("Conv2D").spatial_freq;
    const double mass = 0.982;
    const double expect[] = {.427 / mass, .187 / mass, 0, .206 / mass, .162 / mass, 0};
    for (std::size_t i = 0; i < spatial_variant_count; ++i)
        CHECK(std::fabs(f[i] - expect[i]) <= 0.03);
}
