#pragma once

#include "fes/error_model.hpp"
#include "fes/patterns.hpp"
#include "fes/tensor.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fes {

/// Element-wise differences between a golden tensor and a corrupted one.
struct DiffRecord {
    std::vector<std::size_t> indices; // flat, strictly increasing
    std::vector<float> golden_vals;
    std::vector<float> corrupted_vals;

    std::size_t cardinality() const { return indices.size(); }
};

/// Bitwise comparison; nullopt means the tensors are identical (a masked experiment).
std::optional<DiffRecord> diff_tensors(const Tensor& golden, const Tensor& corrupted);

/// First matching class in the order NaN, Zero, BitFlip, InUnitBall, Random.
DomainKind classify_value_domain(float golden, float corrupted);

/// Structural pattern recognition with parameter recovery. `diff` must be non-empty.
SpatialPattern classify_spatial(const DiffRecord& diff, const Shape& shape);

struct PairClassification {
    SpatialPattern spatial;
    std::vector<DomainKind> domains;
    std::size_t cardinality = 0;
    std::size_t maps = 0;
    bool single_map = true;
};

/// nullopt when the pair is masked.
std::optional<PairClassification> analyze_pair(const Tensor& golden, const Tensor& corrupted);

// ---- corpus mining ---------------------------------------------------------

/// One golden/corrupted pair from the on-disk corpus.
struct CorpusEntry {
    std::string kind;
    Shape shape;
    std::filesystem::path golden;
    std::filesystem::path corrupted;
};

struct CorpusScan {
    std::vector<CorpusEntry> entries;
    std::vector<std::string> warnings;
    std::size_t unreadable = 0;
};

/// Walks a corpus root: either a batch directory itself or a directory of batches.
/// Each batch holds meta.json ({"operator", "shape", "golden"}), the golden file and faulty_*.bin.
CorpusScan scan_corpus(const std::filesystem::path& root);

/// Writes one corpus batch (meta.json, golden.bin, faulty_NNNNN.bin).
void write_corpus_batch(const std::filesystem::path& dir, const std::string& kind, const Tensor& golden,
                        const std::vector<Tensor>& faulty);

struct KindStats {
    std::uint64_t pairs = 0;
    std::uint64_t masked = 0;
    std::uint64_t unreadable = 0;
    std::array<std::uint64_t, spatial_variant_count> spatial{};
    std::array<std::uint64_t, domain_kind_count> domains{};
    std::map<std::size_t, std::uint64_t> cardinality_hist;
    /// Corrupted tensors with fewer than 16 erroneous values, and how many of those touch one map.
    std::uint64_t below16 = 0;
    std::uint64_t below16_single_map = 0;
    /// Pairs that fell into a Random bucket, for manual review.
    std::vector<std::string> residue;
    bool included = false;
    std::string note;

    std::uint64_t corrupted() const { return pairs - masked; }
    double residue_rate() const;
};

struct AnalysisReport {
    std::string corpus;
    std::size_t min_samples = 0;
    std::uint64_t entries = 0;
    std::uint64_t unreadable = 0;
    std::vector<std::string> warnings;
    std::map<std::string, KindStats> kinds;

    std::uint64_t masked() const;
};

struct BuildOptions {
    std::size_t min_samples = 100;
    std::string corpus_id = "corpus";
    int workers = 0; // 0: OpenMP default
};

struct BuildResult {
    ErrorModelDB db;
    AnalysisReport report;
};

BuildResult build_error_db(const std::vector<CorpusEntry>& corpus, const BuildOptions& options = {});

nlohmann::json to_json(const AnalysisReport& report);
/// Percent table laid out like the published spatial-pattern frequency table.
std::string render_text(const AnalysisReport& report);

} // namespace fes
