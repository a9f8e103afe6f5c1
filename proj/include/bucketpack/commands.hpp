#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bucketpack/corpus.hpp"
#include "bucketpack/metrics.hpp"
#include "bucketpack/packing.hpp"
#include "bucketpack/scheduler.hpp"

namespace bucketpack {

inline constexpr const char* kToolName = "bucketpack";
inline constexpr const char* kToolVersion = "0.1.0";

// Overrides the directory used for outputs that were not named explicitly.
inline constexpr const char* kOutputDirEnv = "BUCKETPACK_OUTPUT_DIR";

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(const std::string& name);

std::filesystem::path resolve_output(const std::optional<std::filesystem::path>& given, const std::string& default_name);
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

// Adds "digest" (sha256 over the body) and the "run" block holding the
// timestamp. Everything outside "run" is reproducible.
nlohmann::json finalize_manifest(nlohmann::json body);

struct SynthOptions {
    DistributionSpec spec = DistributionSpec::default_web(10000, 0);
    std::optional<std::filesystem::path> output;
};

// Writes a lengths-jsonl corpus and its manifest; returns the manifest.
nlohmann::json cmd_synth(const SynthOptions& options);

struct PackOptions {
    std::filesystem::path input;
    LoadOptions load;
    std::string strategy = "greedy";
    std::optional<std::uint64_t> length;
    std::optional<std::vector<std::uint64_t>> buckets;
    std::optional<double> pad_threshold;
    std::uint64_t seed = 0;
    bool emit_tokens = false;
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> manifest;
};

PackedDataset pack_with(const DocumentSet& docs, const PackOptions& options);
nlohmann::json cmd_pack(const PackOptions& options);

struct CompareConfig {
    std::vector<std::uint64_t> fixed_lengths{2048, 4096, 8192, 16384};
    BucketConfig buckets = BucketConfig::standard(0.01);
    std::uint64_t seeds = 1;
    std::uint64_t base_seed = 0;
    bool parallel = true;
};

struct CompareRun {
    std::optional<std::uint64_t> seed;
    MetricsReport metrics;
};

struct CompareRow {
    std::string label;  // Fixed-<L>, Multi-Bucket, Greedy-Bucket
    StrategyDescriptor strategy;
    std::vector<CompareRun> runs;

    double mean_r_pad() const;
    double mean_r_tru() const;
    double mean_r_cat() const;
    double mean_samples() const;
    double mean_total_pad() const;
};

// One row per fixed length, then the naive baseline, then the greedy packer.
// Seeded strategies run once per seed in [base_seed, base_seed + seeds).
std::vector<CompareRow> run_compare(const DocumentSet& docs, const CompareConfig& config);
std::string compare_csv(const std::vector<CompareRow>& rows);
nlohmann::json compare_json(const std::vector<CompareRow>& rows);

struct CompareOptions {
    std::filesystem::path input;
    LoadOptions load;
    CompareConfig config;
    ReportFormat format = ReportFormat::Csv;
    std::optional<std::filesystem::path> output;
};

// Returns the rendered report; also written to `output` (plus manifest) when set.
std::string cmd_compare(const CompareOptions& options);

struct ScheduleOptions {
    std::filesystem::path manifest;
    std::filesystem::path speed_table;
    std::optional<std::filesystem::path> samples;
    ScheduleConfig config;
    std::optional<std::uint64_t> speed_reference;
    ReportFormat format = ReportFormat::Json;
    std::optional<std::filesystem::path> output;
};

struct ScheduleResult {
    SchedulePlan plan;
    ThroughputReport throughput;
    std::filesystem::path plan_path;
};

ScheduleResult cmd_schedule(const ScheduleOptions& options);
std::string render_throughput(const ThroughputReport& report, ReportFormat format);

struct StatsOptions {
    std::filesystem::path input;
    LoadOptions load;
    std::vector<std::uint64_t> edges{0, 512, 1024, 2048, 4096, 8192, 16384, 32768};
    ReportFormat format = ReportFormat::Csv;
};

std::string cmd_stats(const StatsOptions& options);

}  // namespace bucketpack
