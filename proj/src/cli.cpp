#include "fes/cli.hpp"

#include "fes/analyzer.hpp"
#include "fes/campaign.hpp"
#include "fes/error.hpp"
#include "fes/executor.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace fes {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity()
{
    const char* v = std::getenv("FES_LOG");
    if (!v)
        return Verbosity::Info;
    std::string s(v);
    if (s == "quiet" || s == "0")
        return Verbosity::Quiet;
    if (s == "debug" || s == "2")
        return Verbosity::Debug;
    return Verbosity::Info;
}

void write_json(const fs::path& path, const json& doc)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

fs::path sidecar(const fs::path& records) { return fs::path(records.string() + ".meta.json"); }

struct AnalyzeArgs {
    std::string corpus, out, report, corpus_id;
    std::size_t min_samples = 100;
    int workers = 0;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err)
{
    auto scan = scan_corpus(a.corpus);
    if (verbosity() != Verbosity::Quiet)
        for (auto& w : scan.warnings)
            err << "warning: " << w << '\n';
    if (scan.entries.empty())
        throw DataError("no corpus entries under " + a.corpus);

    BuildOptions opts;
    opts.min_samples = a.min_samples;
    opts.corpus_id = a.corpus_id.empty() ? fs::path(a.corpus).lexically_normal().filename().string() : a.corpus_id;
    if (opts.corpus_id.empty())
        opts.corpus_id = "corpus";
    opts.workers = a.workers;
    auto result = build_error_db(scan.entries, opts);
    result.report.unreadable += scan.unreadable;
    result.report.warnings.insert(result.report.warnings.begin(), scan.warnings.begin(), scan.warnings.end());

    const fs::path report_path = a.report.empty() ? fs::path(a.out + ".analysis.json") : fs::path(a.report);
    write_json(report_path, to_json(result.report));
    out << render_text(result.report);

    std::string short_kinds;
    for (auto& [kind, stats] : result.report.kinds)
        if (!stats.included) {
            short_kinds += (short_kinds.empty() ? "" : ", ") + kind + " (" + std::to_string(stats.corrupted()) + ")";
        }
    if (!short_kinds.empty())
        err << "insufficient samples (< " << a.min_samples << " corrupted pairs): " << short_kinds << '\n';
    if (result.db.kinds.empty())
        throw DataError("no operator kind reached the minimum sample count; database not written");
    save_db(result.db, a.out);
    if (verbosity() != Verbosity::Quiet)
        err << "wrote " << a.out << " (" << result.db.kinds.size() << " kinds) and " << report_path.string() << '\n';
    return exit_ok;
}

struct ValidateArgs {
    std::string db, model;
    bool fallback = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream&)
{
    auto db = load_db(a.db);
    out << "schema_version " << db.schema_version << '\n';
    for (auto& [kind, e] : db.kinds)
        out << kind << ": samples " << e.samples << ", corpus " << e.corpus << ", generatable mass "
            << e.generatable_mass() << '\n';
    out << "fallback: " << (db.fallback ? "present" : "absent") << '\n';
    for (auto& k : db.unknown_kinds())
        out << "note: entry '" << k << "' names no known operator kind\n";
    if (!a.model.empty()) {
        auto graph = load_model(a.model);
        std::set<std::string> missing;
        for (auto& n : graph.nodes()) {
            auto kind = std::string(to_string(n.kind));
            if (!db.find(kind, a.fallback))
                missing.insert(kind);
        }
        if (!missing.empty()) {
            std::string list;
            for (auto& k : missing)
                list += (list.empty() ? "" : ", ") + k;
            throw DataError("database does not cover operator kind(s): " + list);
        }
        out << "covers every node of " << a.model << '\n';
    }
    out << "ok\n";
    return exit_ok;
}

struct SimulateArgs {
    std::string model, db, config, out;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    bool no_cache = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err)
{
    auto config = load_campaign_config(a.config);
    if (!a.model.empty())
        config.model_path = a.model;
    if (!a.db.empty())
        config.db_path = a.db;
    if (a.workers)
        config.workers = *a.workers;
    if (a.seed)
        config.seed = *a.seed;
    if (a.no_cache)
        config.cache = false;
    config.validate();
    if (config.model_path.empty())
        throw DataError("no model given (--model or config 'model')");
    if (config.db_path.empty())
        throw DataError("no error-model database given (--db or config 'db')");

    auto graph = load_model(config.model_path);
    auto db = load_db(config.db_path);
    auto inputs = load_inputs(config, graph);
    auto policy = PolicyRegistry::global().create(config.classifier);

    const fs::path out_path(a.out);
    if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
    std::ofstream records(out_path, std::ios::binary);
    if (!records)
        throw DataError("cannot write " + a.out);
    auto result = run_campaign(config, graph, db, inputs, *policy, [&](const CampaignRecord& r) {
        records << to_json(r).dump() << '\n';
    });
    records.close();
    write_json(sidecar(out_path), result.report.metadata);

    const auto& t = result.report.totals;
    out << "experiments " << t.total() << ": masked " << t[OutcomeKind::Masked] << ", usable "
        << t[OutcomeKind::Usable] << ", unusable " << t[OutcomeKind::Unusable] << ", engine_error "
        << t[OutcomeKind::EngineError] << "; wall " << result.wall_seconds << " s\n";
    if (verbosity() == Verbosity::Debug)
        err << "prefix cache hits " << result.cache_hits << ", misses " << result.cache_misses << '\n';
    return exit_ok;
}

struct ReportArgs {
    std::string records, format = "text", out;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&)
{
    auto records = read_records(a.records);
    auto report = aggregate(records);
    if (auto meta = sidecar(a.records); fs::exists(meta)) {
        std::ifstream in(meta);
        try {
            report.metadata = json::parse(in);
        } catch (const json::exception& e) {
            throw DataError("malformed metadata " + meta.string() + ": " + e.what());
        }
    }
    std::string text = a.format == "json" ? to_json(report).dump(2) + "\n" : render_text(report);
    if (a.out.empty()) {
        out << text;
    } else {
        std::ofstream f(a.out);
        if (!f)
            throw DataError("cannot write " + a.out);
        f << text;
    }
    return exit_ok;
}

struct TraceArgs {
    std::string model, out;
    std::vector<std::string> inputs;
};

int cmd_trace(const TraceArgs& a, std::ostream& out, std::ostream&)
{
    auto graph = load_model(a.model);
    InputMap inputs;
    for (auto& spec : a.inputs) {
        std::string name, path = spec;
        if (auto eq = spec.find('='); eq != std::string::npos) {
            name = spec.substr(0, eq);
            path = spec.substr(eq + 1);
        } else if (graph.inputs().size() == 1) {
            name = graph.inputs()[0].name;
        } else {
            throw DataError("model has several inputs; use --input name=path");
        }
        auto idx = graph.input_index(name);
        if (!idx)
            throw DataError("model has no input named '" + name + "'");
        inputs.insert_or_assign(name, read_raw(path, graph.inputs()[*idx].shape));
    }
    for (auto& in : graph.inputs())
        if (!inputs.count(in.name))
            throw DataError("missing --input for '" + in.name + "'");

    auto trace = execute(graph, inputs);
    fs::create_directories(a.out);
    json sites = json::array();
    for (auto& node : graph.nodes()) {
        const auto& t = trace.at(node.id);
        const auto file = node.id + ".bin";
        write_raw(fs::path(a.out) / file, t);
        sites.push_back({{"id", node.id},
                         {"kind", std::string(to_string(node.kind))},
                         {"shape", t.shape()},
                         {"inputs", node.inputs},
                         {"file", file},
                         {"digest", hex64(digest(t))}});
    }
    json manifest{{"model", fs::path(a.model).filename().string()},
                  {"model_digest", hex64(graph.digest())},
                  {"outputs", graph.outputs()},
                  {"sites", sites}};
    write_json(fs::path(a.out) / "sites.json", manifest);
    out << "traced " << sites.size() << " sites into " << a.out << '\n';
    return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Error simulation for CNN dataflow graphs", "fes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "fes 1.0");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Mine a golden/faulty corpus into an error-model database");
    analyze->add_option("--corpus", an.corpus, "Corpus directory")->required();
    analyze->add_option("--out", an.out, "Database JSON to write")->required();
    analyze->add_option("--min-samples", an.min_samples, "Corrupted pairs needed per operator kind")
        ->capture_default_str();
    analyze->add_option("--report", an.report, "Analysis report JSON (default <out>.analysis.json)");
    analyze->add_option("--corpus-id", an.corpus_id, "Provenance label stored in the database");
    analyze->add_option("--workers", an.workers, "Analysis threads (0: all cores)")->check(CLI::NonNegativeNumber);

    ValidateArgs va;
    auto* validate_db = app.add_subcommand("validate-db", "Check an error-model database");
    validate_db->add_option("--db", va.db, "Database JSON")->required();
    validate_db->add_option("--model", va.model, "Also check coverage of this model's operator kinds");
    validate_db->add_flag("--fallback", va.fallback, "Count the fallback entry as coverage");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run an error-simulation campaign");
    simulate->add_option("--model", sa.model, "Model manifest (overrides config)");
    simulate->add_option("--db", sa.db, "Error-model database (overrides config)");
    simulate->add_option("--config", sa.config, "Campaign config, TOML or JSON")->required();
    simulate->add_option("--out", sa.out, "Records file (JSON lines)")->required();
    simulate->add_option("--workers", sa.workers, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sa.seed, "Master seed (overrides config)");
    simulate->add_flag("--no-cache", sa.no_cache, "Disable the prefix cache");

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "Aggregate campaign records");
    report->add_option("--records", ra.records, "Records file")->required();
    report->add_option("--format", ra.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    report->add_option("--out", ra.out, "Write here instead of stdout");

    TraceArgs ta;
    auto* trace = app.add_subcommand("trace", "Dump every node output and the injection-site list");
    trace->add_option("--model", ta.model, "Model manifest")->required();
    trace->add_option("--input", ta.inputs, "[name=]path of a raw float32 input")->required();
    trace->add_option("--out", ta.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*analyze)
            return cmd_analyze(an, out, err);
        if (*validate_db)
            return cmd_validate(va, out, err);
        if (*simulate)
            return cmd_simulate(sa, out, err);
        if (*report)
            return cmd_report(ra, out, err);
        if (*trace)
            return cmd_trace(ta, out, err);
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const EngineError& e) {
        err << "engine error: " << e.what() << '\n';
        return exit_engine;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "engine error: " << e.what() << '\n';
        return exit_engine;
    }
    return exit_usage;
}

} // namespace fes
