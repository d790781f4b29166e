// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include "fes/analyzer.hpp"
#include "fes/campaign.hpp"
#include "fes/error_model.hpp"
#include "fes/graph.hpp"
#include "fes/kernels.hpp"
#include "fes/saboteur.hpp"
#include "fes/zoo.hpp"

#include "../support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

using namespace fes;
using nlohmann::json;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

const fs::path shipped_db = fs::path(FES_DATA_DIR) / "default_db.json";

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int shell(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

ErrorModelEntry entry(std::array<double, spatial_variant_count> spatial, std::array<double, domain_kind_count> domain)
{
    ErrorModelEntry e;
    e.spatial_freq = spatial;
    e.domain_freq = domain;
    return e;
}

// Source row for the frequency round trip, Random mass already removed.
constexpr std::array<double, 4> conv1_row{42.7, 18.7, 20.6, 16.2};
constexpr SpatialVariant structured[4] = {SpatialVariant::SinglePoint, SpatialVariant::SameRow,
                                          SpatialVariant::BulletWake, SpatialVariant::ShatteredGlass};

Verdict spatial_closure()
{
    const auto t0 = clock_type::now();
    auto e = entry({1, 1, 0, 1, 1, 0}, {0.2, 0.2, 0.2, 0.2, 0.2});
    Rng rng(1001);
    int ok = 0;
    const int n = 10000;
    std::string first_miss;
    for (int i = 0; i < n; ++i) {
        const Shape shape{test::pick(rng, 2, 32), test::pick(rng, 2, 32), test::pick(rng, 2, 32)};
        auto golden = test::random_tensor(shape, rng);
        auto ev = sample_error(e, "Conv2D", shape, rng);
        auto pc = analyze_pair(golden, corrupt_values(golden, ev.targets, ev.domains, rng));
        if (pc && pc->spatial.variant == ev.spatial.variant)
            ++ok;
        else if (first_miss.empty())
            first_miss = std::string(to_string(ev.spatial.variant)) + " -> " +
                         (pc ? std::string(to_string(pc->spatial.variant)) : "masked");
    }
    const double secs = seconds_since(t0);
    auto d = fmt("%d/%d recovered in %.1f s", ok, n, secs);
    if (!first_miss.empty())
        d += " (first miss " + first_miss + ")";
    return {ok == n && secs < 60.0, d};
}

Verdict frequency_round_trip(const fs::path& cli)
{
    test::TempDir dir("acc_freq");
    double sum = 0;
    for (double v : conv1_row)
        sum += v;
    auto e = entry({conv1_row[0] / sum, conv1_row[1] / sum, 0, conv1_row[2] / sum, conv1_row[3] / sum, 0},
                   {0.005, 0.01, 0.01, 0.85, 0.125});
    Rng rng(2002);
    const Shape shape{4, 12, 12};
    for (int b = 0; b < 10; ++b) {
        auto golden = test::random_tensor(shape, rng);
        std::vector<Tensor> faulty;
        for (int i = 0; i < 1000; ++i) {
            auto ev = sample_error(e, "Conv2D", shape, rng);
            faulty.push_back(corrupt_values(golden, ev.targets, ev.domains, rng));
        }
        write_corpus_batch(dir / ("batch" + std::to_string(b)), "Conv2D", golden, faulty);
    }
    const auto db_path = dir / "mined.json";
    if (int rc = shell(quoted(cli) + " analyze --corpus " + quoted(dir.path()) + " --out " + quoted(db_path)); rc != 0)
        return {false, fmt("fes analyze exited with %d", rc)};
    auto db = load_db(db_path);
    auto& mined = db.kinds.at("Conv2D");
    double worst = 0;
    std::string d;
    for (int k = 0; k < 4; ++k) {
        const double want = 100 * conv1_row[k] / sum;
        const double got = 100 * mined.spatial_freq[static_cast<int>(structured[k])];
        worst = std::max(worst, std::abs(got - want));
        d += fmt("%s %.2f/%.2f ", std::string(to_string(structured[k])).c_str(), got, want);
    }
    d += fmt("(max deviation %.2f pts over %llu pairs)", worst, static_cast<unsigned long long>(mined.samples));
    return {worst <= 2.0 && mined.samples == 10000, d};
}

Verdict domain_closure()
{
    Rng rng(3003);
    const Shape shape{3, 6, 6};
    const int n = 10000;
    auto golden_value = [&] {
        if (bernoulli(rng, 0.05))
            return bernoulli(rng, 0.5) ? 0.0f : -0.0f;
        const double mag = std::pow(10.0, uniform_real(rng, -3.0, 3.0));
        return static_cast<float>(bernoulli(rng, 0.5) ? mag : -mag);
    };
    auto single = entry({1, 0, 0, 0, 0, 0}, {0.2, 0.2, 0.2, 0.2, 0.2});
    auto run = [&](DomainKind kind) {
        SamplerConfig cfg;
        cfg.force_domain = kind;
        std::array<int, domain_kind_count> got{};
        for (int i = 0; i < n; ++i) {
            Tensor golden(shape);
            for (auto& v : golden.data())
                v = golden_value();
            auto ev = sample_error(single, "Conv2D", shape, rng, cfg);
            auto pc = analyze_pair(golden, corrupt_values(golden, ev.targets, ev.domains, rng, cfg));
            if (pc && pc->domains.size() == 1)
                ++got[static_cast<int>(pc->domains[0])];
        }
        return got;
    };
    auto nan = run(DomainKind::NaN), zero = run(DomainKind::Zero), ball = run(DomainKind::InUnitBall),
         rnd = run(DomainKind::Random);
    auto idx = [](DomainKind k) { return static_cast<int>(k); };
    const int bad_random = rnd[idx(DomainKind::InUnitBall)] + rnd[idx(DomainKind::Zero)] + rnd[idx(DomainKind::NaN)];
    const bool pass = nan[idx(DomainKind::NaN)] == n && zero[idx(DomainKind::Zero)] == n &&
                      ball[idx(DomainKind::InUnitBall)] >= 0.99 * n && bad_random == 0;
    return {pass, fmt("NaN %d/%d, Zero %d/%d, InUnitBall %d/%d, Random as ball/zero/nan %d", nan[idx(DomainKind::NaN)],
                      n, zero[idx(DomainKind::Zero)], n, ball[idx(DomainKind::InUnitBall)], n, bad_random)};
}

struct Workspace {
    test::TempDir dir{"acc_sim"};
    fs::path config;

    Workspace(std::uint64_t experiments, int inputs)
    {
        auto g = zoo::lenet5(7);
        save_model(g, dir.path());
        json ins = json::array();
        for (int i = 0; i < inputs; ++i) {
            auto name = "in" + std::to_string(i) + ".bin";
            write_raw(dir / name, zoo::random_input(g, 50 + i));
            ins.push_back(name);
        }
        config = dir / "campaign.json";
        std::ofstream(config) << json{{"experiments", experiments}, {"seed", 31337},        {"model", "model.json"},
                                      {"db", shipped_db.string()},  {"fallback", true},     {"inputs", ins}}
                                     .dump(2);
    }
};

Verdict simulate_determinism(const fs::path& cli)
{
    Workspace ws(1500, 3);
    auto run = [&](const std::string& out, const std::string& extra) {
        return shell(quoted(cli) + " simulate --config " + quoted(ws.config) + " --out " + quoted(ws.dir / out) + " " +
                     extra);
    };
    int rc = run("a.jsonl", "--workers 1") | run("b.jsonl", "--workers 1") | run("c.jsonl", "--workers 8") |
             run("d.jsonl", "--workers 8 --no-cache");
    if (rc != 0)
        return {false, "fes simulate failed"};
    const auto a = slurp(ws.dir / "a.jsonl");
    const bool same = a == slurp(ws.dir / "b.jsonl") && a == slurp(ws.dir / "c.jsonl") && a == slurp(ws.dir / "d.jsonl");
    const auto lines = std::count(a.begin(), a.end(), '\n');
    return {same && lines == 1500,
            fmt("%ld records, %zu bytes; workers 1 x2, 8, 8 without cache %s", static_cast<long>(lines), a.size(),
                same ? "byte-identical" : "differ")};
}

std::vector<InputMap> lenet_inputs(const Graph& g, int n)
{
    std::vector<InputMap> out;
    for (int i = 0; i < n; ++i)
        out.push_back({{g.inputs()[0].name, zoo::random_input(g, 50 + i)}});
    return out;
}

CampaignConfig lenet_config(std::uint64_t experiments, std::uint64_t seed, int inputs)
{
    CampaignConfig c;
    c.experiments = experiments;
    c.seed = seed;
    c.fallback = true;
    for (int i = 0; i < inputs; ++i)
        c.input_files.push_back({{"", "in.bin"}});
    return c;
}

std::vector<json> dump(const CampaignResult& r)
{
    std::vector<json> out;
    for (auto& rec : r.records)
        out.push_back(to_json(rec));
    return out;
}

Verdict cache_benefit()
{
    auto g = zoo::lenet5(7);
    auto db = load_db(shipped_db);
    auto inputs = lenet_inputs(g, 2);
    auto cfg = lenet_config(100 * g.nodes().size() + 200, 4242, 2);
    cfg.site_weights.clear();
    auto cached_cfg = cfg, uncached_cfg = cfg;
    uncached_cfg.cache = false;
    run_campaign(cached_cfg, g, db, inputs); // warm up
    double cached = 1e30, uncached = 1e30;
    std::vector<json> a, b;
    std::size_t min_per_site = SIZE_MAX;
    for (int rep = 0; rep < 3; ++rep) {
        auto rc = run_campaign(cached_cfg, g, db, inputs);
        auto ru = run_campaign(uncached_cfg, g, db, inputs);
        cached = std::min(cached, rc.wall_seconds);
        uncached = std::min(uncached, ru.wall_seconds);
        a = dump(rc);
        b = dump(ru);
        for (auto& [site, t] : rc.report.by_site)
            min_per_site = std::min<std::size_t>(min_per_site, t.total());
    }
    const double ratio = cached / uncached;
    const bool same = a == b;
    return {same && ratio <= 0.67 && min_per_site >= 100 && g.nodes().size() >= 10,
            fmt("%zu nodes, >= %zu experiments per site, records %s, cached %.3f s vs uncached %.3f s (ratio %.2f)",
                g.nodes().size(), min_per_site, same ? "identical" : "differ", cached, uncached, ratio)};
}

Verdict conv_oracle()
{
    Rng rng(6006);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = test::pick(rng, 1, 4), h = test::pick(rng, 3, 10), w = test::pick(rng, 3, 10);
        const auto k = test::pick(rng, 1, std::min<std::size_t>({h, w, 5}));
        const auto stride = test::pick(rng, 1, 3), pad = test::pick(rng, 0, 2), oc = test::pick(rng, 1, 5);
        auto in = test::random_tensor({c, h, w}, rng);
        auto filt = test::random_tensor({oc, c, k, k}, rng);
        auto bias = test::random_tensor({oc}, rng);
        auto got = kernels::reference::conv2d(in, filt, &bias, stride, pad);
        const auto oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
        for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    double acc = bias[o], mag = std::abs(static_cast<double>(bias[o]));
                    for (std::size_t ci = 0; ci < c; ++ci)
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const auto iy = static_cast<long>(y * stride + ky) - static_cast<long>(pad);
                                const auto ix = static_cast<long>(x * stride + kx) - static_cast<long>(pad);
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w))
                                    continue;
                                const double p = static_cast<double>(filt[((o * c + ci) * k + ky) * k + kx]) *
                                                 in[(ci * h + iy) * w + ix];
                                acc += p;
                                mag += std::abs(p);
                            }
                    const double err = std::abs(got[(o * oh + y) * ow + x] - acc) / std::max(mag, 1e-30);
                    worst = std::max(worst, err);
                }
    }
    return {worst <= 1e-5, fmt("max error %.3g relative to the summed term magnitudes over 1000 instances", worst)};
}

Verdict desk_campaign()
{
    auto g = zoo::lenet5(7);
    auto db = load_db(shipped_db);
    auto cfg = lenet_config(10000, 777, 4);
    const auto t0 = clock_type::now();
    auto r = run_campaign(cfg, g, db, lenet_inputs(g, 4));
    const double secs = seconds_since(t0);
    auto& t = r.report.totals;
    const auto sum = t[OutcomeKind::Masked] + t[OutcomeKind::Usable] + t[OutcomeKind::Unusable] +
                     t[OutcomeKind::EngineError];
    return {secs < 300 && sum == 10000 && t[OutcomeKind::EngineError] == 0,
            fmt("%.1f s; masked %llu, usable %llu, unusable %llu, engine_error %llu", secs,
                static_cast<unsigned long long>(t[OutcomeKind::Masked]),
                static_cast<unsigned long long>(t[OutcomeKind::Usable]),
                static_cast<unsigned long long>(t[OutcomeKind::Unusable]),
                static_cast<unsigned long long>(t[OutcomeKind::EngineError]))};
}

Verdict nan_vs_unit_ball()
{
    auto g = zoo::lenet5(7);
    auto db = load_db(shipped_db);
    auto inputs = lenet_inputs(g, 4);
    auto run = [&](DomainKind d) {
        auto cfg = lenet_config(2000, 8008, 4);
        cfg.sampler.force_domain = d;
        return run_campaign(cfg, g, db, inputs);
    };
    auto nan = run(DomainKind::NaN), ball = run(DomainKind::InUnitBall);
    bool aligned = true;
    for (std::size_t i = 0; i < 2000; ++i)
        aligned = aligned && nan.records[i].event.site == ball.records[i].event.site &&
                  nan.records[i].event.targets == ball.records[i].event.targets;
    const double n = 2000;
    const double p1 = nan.report.totals[OutcomeKind::Unusable] / n;
    const double p2 = ball.report.totals[OutcomeKind::Unusable] / n;
    const double pooled = (p1 + p2) / 2;
    const double se = std::sqrt(pooled * (1 - pooled) * 2 / n);
    const double z = se > 0 ? (p1 - p2) / se : (p1 > p2 ? INFINITY : 0.0);
    const double p = 0.5 * std::erfc(z / std::sqrt(2.0));
    return {aligned && p1 > p2 && p < 0.01,
            fmt("unusable NaN %.4f vs InUnitBall %.4f, z %.2f, one-sided p %.3g, sites and targets %s", p1, p2, z, p,
                aligned ? "aligned" : "misaligned")};
}

} // namespace

int main()
{
    const fs::path cli = FES_CLI_PATH;
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"spatial closure", spatial_closure},
        {"frequency round trip", [&] { return frequency_round_trip(cli); }},
        {"value-domain closure", domain_closure},
        {"simulate determinism", [&] { return simulate_determinism(cli); }},
        {"prefix cache", cache_benefit},
        {"conv oracle", conv_oracle},
        {"desk campaign", desk_campaign},
        {"NaN vs unit-ball severity", nan_vs_unit_ball},
    };
    int failed = 0, id = 0;
    for (auto& [name, fn] : criteria) {
        ++id;
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
