#include "bucketpack/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "bucketpack/error.hpp"
#include "bucketpack/serialize.hpp"

namespace bucketpack {

using nlohmann::json;
namespace fs = std::filesystem;

ReportFormat parse_report_format(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw ValidationError("unknown report format '" + name + "'");
}

fs::path resolve_output(const std::optional<fs::path>& given, const std::string& default_name) {
    if (given) {
        return *given;
    }
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
        return fs::path(dir) / default_name;
    }
    return fs::path(default_name);
}

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    p += ".manifest.json";
    return p;
}

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Path of `target` as seen from the directory holding `manifest`.
std::string relative_to_manifest(const fs::path& target, const fs::path& manifest) {
    const fs::path base = fs::absolute(manifest).parent_path();
    return fs::absolute(target).lexically_proximate(base).generic_string();
}

void ensure_parent_dir(const fs::path& p) {
    const fs::path parent = p.parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
        if (ec) {
            throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
        }
    }
}

json manifest_header(const std::string& command, json params) {
    return {
        {"tool", kToolName},
        {"version", kToolVersion},
        {"command", command},
        {"params", std::move(params)},
    };
}

json load_params(const LoadOptions& load) {
    return {
        {"input_format", load.format == CorpusFormat::TokensJsonl ? "tokens-jsonl" : "lengths-jsonl"},
        {"append_eos", load.append_eos},
        {"eos_id", load.eos_id},
        {"pad_id", load.pad_id},
        {"validate_tokens", load.validate_tokens},
    };
}

json write_manifest(const fs::path& path, json body) {
    ensure_parent_dir(path);
    json finalized = finalize_manifest(std::move(body));
    write_text_file(path, finalized.dump(2) + "\n");
    return finalized;
}

}  // namespace

json finalize_manifest(json body) {
    body.erase("digest");
    body.erase("run");
    const std::string digest = sha256_hex(body.dump());
    body["digest"] = digest;
    body["run"] = {{"created_at", utc_timestamp()}};
    return body;
}

// ---------------------------------------------------------------------------
// synth

json cmd_synth(const SynthOptions& options) {
    const DocumentSet docs = generate_synthetic(options.spec);
    const fs::path out = resolve_output(options.output, "corpus.jsonl");
    ensure_parent_dir(out);

    std::ostringstream text;
    write_lengths_jsonl(text, docs);
    write_text_file(out, text.str());

    json components = json::array();
    for (const auto& c : options.spec.components) {
        components.push_back({{"log_mean", c.log_mean}, {"log_sigma", c.log_sigma}, {"weight", c.weight}});
    }
    json params = {
        {"family", to_string(options.spec.family)},
        {"components", std::move(components)},
        {"min_len", options.spec.min_len},
        {"max_len", options.spec.max_len},
        {"count", options.spec.count},
        {"seed", options.spec.seed},
        {"output", out.generic_string()},
    };
    const fs::path manifest = manifest_path_for(out);
    json body = manifest_header("synth", std::move(params));
    body["M"] = docs.size();
    body["total_tokens"] = docs.total_tokens();
    body["outputs"] = {{"corpus", relative_to_manifest(out, manifest)}, {"sha256", sha256_hex(text.str())}};
    return write_manifest(manifest, std::move(body));
}

// ---------------------------------------------------------------------------
// pack

PackedDataset pack_with(const DocumentSet& docs, const PackOptions& options) {
    const Strategy strategy = parse_strategy(options.strategy);
    switch (strategy) {
        case Strategy::Fixed:
            if (!options.length) {
                throw ValidationError("strategy 'fixed' needs --length");
            }
            return pack_fixed(docs, *options.length, options.seed);
        case Strategy::Naive:
        case Strategy::Greedy: {
            if (!options.buckets) {
                throw ValidationError("strategy '" + options.strategy + "' needs --buckets");
            }
            BucketConfig config{*options.buckets, 0.0};
            if (strategy == Strategy::Naive) {
                return pack_naive_buckets(docs, config, options.seed);
            }
            if (!options.pad_threshold) {
                throw ValidationError("strategy 'greedy' needs --pad-threshold");
            }
            config.padding_threshold = *options.pad_threshold;
            return pack_greedy_buckets(docs, config);
        }
    }
    throw ValidationError("unknown strategy");
}

json cmd_pack(const PackOptions& options) {
    // Flag checks come before any I/O so bad invocations fail fast.
    const Strategy strategy = parse_strategy(options.strategy);
    if (options.buckets) {
        BucketConfig{*options.buckets, options.pad_threshold.value_or(0.0)}.validate();
    }
    if (options.emit_tokens && options.load.format != CorpusFormat::TokensJsonl) {
        throw ValidationError("--emit-tokens needs a tokens-jsonl corpus");
    }

    const DocumentSet docs = load_documents(options.input, options.load);
    const PackedDataset packed = pack_with(docs, options);

    const fs::path out = resolve_output(options.output, "samples.jsonl");
    const fs::path manifest = options.manifest.value_or(manifest_path_for(out));
    ensure_parent_dir(out);
    {
        std::ofstream file(out, std::ios::binary | std::ios::trunc);
        if (!file) {
            throw IoError("cannot open " + out.string() + " for writing");
        }
        write_samples_jsonl(file, packed, docs, options.emit_tokens && docs.has_tokens());
        if (!file) {
            throw IoError("write failed for " + out.string());
        }
    }

    json params = load_params(options.load);
    params["input"] = options.input.generic_string();
    params["strategy"] = options.strategy;
    if (options.length) params["length"] = *options.length;
    if (options.buckets) params["buckets"] = *options.buckets;
    if (options.pad_threshold) params["pad_threshold"] = *options.pad_threshold;
    params["seed"] = options.seed;
    params["emit_tokens"] = options.emit_tokens;
    params["output"] = out.generic_string();
    params["manifest"] = manifest.generic_string();

    json config;
    if (strategy == Strategy::Fixed) {
        config = {{"length", packed.strategy.length}};
    } else {
        config = {{"capacities", packed.strategy.capacities}};
        if (strategy == Strategy::Greedy) {
            config["padding_threshold"] = packed.strategy.padding_threshold;
        }
    }
    json per_bucket = json::object();
    for (const auto& [capacity, count] : packed.bucket_counts()) {
        per_bucket[std::to_string(capacity)] = count;
    }

    json body = manifest_header("pack", std::move(params));
    body["input"] = {{"path", options.input.generic_string()}, {"sha256", sha256_file(options.input)}};
    body["strategy"] = to_json(packed.strategy);
    body["seed"] = options.seed;
    body["config"] = std::move(config);
    body["M"] = packed.source.doc_count;
    body["C"] = packed.samples.size();
    body["total_tokens"] = packed.source.total_tokens;
    body["per_bucket"] = std::move(per_bucket);
    body["metrics"] = packed.samples.empty() ? json(nullptr) : to_json(evaluate(packed));
    body["outputs"] = {{"samples", relative_to_manifest(out, manifest)}};
    return write_manifest(manifest, std::move(body));
}

// ---------------------------------------------------------------------------
// compare

namespace {

template <typename Field>
double mean_of(const std::vector<CompareRun>& runs, Field field) {
    if (runs.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& run : runs) {
        total += field(run.metrics);
    }
    return total / static_cast<double>(runs.size());
}

}  // namespace

double CompareRow::mean_r_pad() const {
    return mean_of(runs, [](const MetricsReport& m) { return m.r_pad.value(); });
}
double CompareRow::mean_r_tru() const {
    return mean_of(runs, [](const MetricsReport& m) { return m.r_tru.value(); });
}
double CompareRow::mean_r_cat() const {
    return mean_of(runs, [](const MetricsReport& m) { return m.r_cat.value(); });
}
double CompareRow::mean_samples() const {
    return mean_of(runs, [](const MetricsReport& m) { return static_cast<double>(m.sample_count); });
}
double CompareRow::mean_total_pad() const {
    return mean_of(runs, [](const MetricsReport& m) { return static_cast<double>(m.total_pad); });
}

std::vector<CompareRow> run_compare(const DocumentSet& docs, const CompareConfig& config) {
    config.buckets.validate();
    if (config.seeds < 1) {
        throw ValidationError("--seeds must be >= 1");
    }
    if (docs.empty()) {
        throw ValidationError("cannot compare strategies on an empty corpus");
    }

    std::vector<CompareRow> rows;
    for (const auto length : config.fixed_lengths) {
        CompareRow row;
        row.label = "Fixed-" + std::to_string(length);
        row.strategy = StrategyDescriptor{Strategy::Fixed, length, {}, 0.0, std::nullopt};
        rows.push_back(std::move(row));
    }
    rows.push_back(CompareRow{"Multi-Bucket", StrategyDescriptor{Strategy::Naive, 0, config.buckets.capacities, 0.0,
                                                                 std::nullopt},
                              {}});
    rows.push_back(CompareRow{"Greedy-Bucket",
                              StrategyDescriptor{Strategy::Greedy, 0, config.buckets.capacities,
                                                 config.buckets.padding_threshold, std::nullopt},
                              {}});

    // Jobs are keyed by (row, seed slot); results land in fixed positions, so
    // the assembled table does not depend on completion order.
    struct Job {
        std::size_t row;
        std::size_t slot;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const bool seeded = rows[r].strategy.kind != Strategy::Greedy;
        const std::uint64_t n = seeded ? config.seeds : 1;
        rows[r].runs.resize(n);
        for (std::uint64_t k = 0; k < n; ++k) {
            jobs.push_back(Job{r, static_cast<std::size_t>(k), config.base_seed + k});
        }
    }

    auto run_job = [&](const Job& job) {
        const auto& strategy = rows[job.row].strategy;
        CompareRun run;
        PackedDataset packed;
        switch (strategy.kind) {
            case Strategy::Fixed:
                packed = pack_fixed(docs, strategy.length, job.seed);
                run.seed = job.seed;
                break;
            case Strategy::Naive:
                packed = pack_naive_buckets(docs, config.buckets, job.seed);
                run.seed = job.seed;
                break;
            case Strategy::Greedy:
                packed = pack_greedy_buckets(docs, config.buckets);
                break;
        }
        run.metrics = evaluate(packed);
        return run;
    };

    if (config.parallel) {
        std::vector<std::future<CompareRun>> futures;
        futures.reserve(jobs.size());
        for (const auto& job : jobs) {
            futures.push_back(std::async(std::launch::async, run_job, job));
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            rows[jobs[i].row].runs[jobs[i].slot] = futures[i].get();
        }
    } else {
        for (const auto& job : jobs) {
            rows[job.row].runs[job.slot] = run_job(job);
        }
    }
    return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "strategy,r_pad,r_tru,r_cat,M,C,total_pad\n";
    for (const auto& row : rows) {
        const std::uint64_t m = row.runs.empty() ? 0 : row.runs.front().metrics.doc_count;
        out << row.label << ',' << format_sig4(row.mean_r_pad()) << ',' << format_sig4(row.mean_r_tru()) << ','
            << format_sig4(row.mean_r_cat()) << ',' << m << ',' << row.mean_samples() << ','
            << row.mean_total_pad() << '\n';
    }
    return out.str();
}

json compare_json(const std::vector<CompareRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json runs = json::array();
        for (const auto& run : row.runs) {
            json entry = to_json(run.metrics);
            entry["seed"] = run.seed ? json(*run.seed) : json(nullptr);
            runs.push_back(std::move(entry));
        }
        out.push_back({
            {"strategy", row.label},
            {"descriptor", to_json(row.strategy)},
            {"r_pad", row.mean_r_pad()},
            {"r_tru", row.mean_r_tru()},
            {"r_cat", row.mean_r_cat()},
            {"M", row.runs.empty() ? 0 : row.runs.front().metrics.doc_count},
            {"C", row.mean_samples()},
            {"total_pad", row.mean_total_pad()},
            {"runs", std::move(runs)},
        });
    }
    return {{"rows", std::move(out)}};
}

std::string cmd_compare(const CompareOptions& options) {
    options.config.buckets.validate();
    const DocumentSet docs = load_documents(options.input, options.load);
    const auto rows = run_compare(docs, options.config);
    const std::string rendered =
        options.format == ReportFormat::Csv ? compare_csv(rows) : compare_json(rows).dump(2) + "\n";

    if (options.output) {
        ensure_parent_dir(*options.output);
        write_text_file(*options.output, rendered);

        json params = load_params(options.load);
        params["input"] = options.input.generic_string();
        params["fixed_lengths"] = options.config.fixed_lengths;
        params["buckets"] = options.config.buckets.capacities;
        params["pad_threshold"] = options.config.buckets.padding_threshold;
        params["seeds"] = options.config.seeds;
        params["base_seed"] = options.config.base_seed;
        params["format"] = options.format == ReportFormat::Csv ? "csv" : "json";
        params["output"] = options.output->generic_string();

        const fs::path manifest = manifest_path_for(*options.output);
        json body = manifest_header("compare", std::move(params));
        body["input"] = {{"path", options.input.generic_string()}, {"sha256", sha256_file(options.input)}};
        body["report"] = compare_json(rows);
        body["outputs"] = {{"report", relative_to_manifest(*options.output, manifest)}};
        write_manifest(manifest, std::move(body));
    }
    return rendered;
}

// ---------------------------------------------------------------------------
// schedule

ScheduleResult cmd_schedule(const ScheduleOptions& options) {
    options.config.validate();
    const json manifest = read_json_file(options.manifest);
    const std::string strategy = manifest.at("strategy").at("name").get<std::string>();
    if (strategy != "naive" && strategy != "greedy") {
        throw ValidationError("schedule needs a manifest from a bucketed packing (naive or greedy), got '" +
                              strategy + "'");
    }
    const auto capacities = manifest.at("strategy").at("capacities").get<std::vector<std::uint64_t>>();
    if (std::find(capacities.begin(), capacities.end(), options.config.reference_capacity) == capacities.end()) {
        throw ValidationError("reference capacity " + std::to_string(options.config.reference_capacity) +
                              " is not one of the packing's buckets");
    }

    fs::path samples_path;
    if (options.samples) {
        samples_path = *options.samples;
    } else {
        samples_path = options.manifest.parent_path() / manifest.at("outputs").at("samples").get<std::string>();
    }
    std::ifstream samples_in(samples_path);
    if (!samples_in) {
        throw IoError("cannot open samples file " + samples_path.string());
    }
    const auto buckets = read_sample_buckets(samples_in);

    std::map<std::uint64_t, std::vector<std::size_t>> bucket_samples;
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        bucket_samples[buckets[i]].push_back(i);
        ++counts[buckets[i]];
    }
    for (const auto& [key, value] : manifest.at("per_bucket").items()) {
        const auto capacity = std::stoull(key);
        if (counts[capacity] != value.get<std::uint64_t>()) {
            throw ValidationError("samples file does not match the manifest's per-bucket counts");
        }
    }

    const SpeedTable speeds = parse_speed_table(read_json_file(options.speed_table));
    for (const auto& [capacity, count] : counts) {
        if (count > 0 && speeds.find(capacity) == speeds.end()) {
            throw ValidationError("missing speed for bucket " + std::to_string(capacity));
        }
    }

    ScheduleResult result;
    result.plan = plan_steps(bucket_samples, options.config);
    result.throughput = estimate_throughput(token_shares(counts), speeds,
                                            options.speed_reference.value_or(options.config.reference_capacity));

    result.plan_path = resolve_output(options.output, "plan.json");
    json plan = to_json(result.plan);
    plan["throughput"] = to_json(result.throughput);
    ensure_parent_dir(result.plan_path);
    write_text_file(result.plan_path, plan.dump(2) + "\n");

    json params = {
        {"manifest", options.manifest.generic_string()},
        {"speed_table", options.speed_table.generic_string()},
        {"samples", samples_path.generic_string()},
        {"reference_capacity", options.config.reference_capacity},
        {"reference_batch", options.config.reference_batch},
        {"world_size", options.config.world_size},
        {"seed", options.config.seed},
        {"leftover", to_string(options.config.leftover_policy)},
        {"speed_reference", options.speed_reference.value_or(options.config.reference_capacity)},
        {"output", result.plan_path.generic_string()},
    };
    const fs::path plan_manifest = manifest_path_for(result.plan_path);
    json body = manifest_header("schedule", std::move(params));
    body["input"] = {{"manifest_sha256", sha256_file(options.manifest)},
                     {"speed_table_sha256", sha256_file(options.speed_table)}};
    body["steps"] = result.plan.steps.size();
    body["throughput"] = to_json(result.throughput);
    body["outputs"] = {{"plan", relative_to_manifest(result.plan_path, plan_manifest)}};
    write_manifest(plan_manifest, std::move(body));
    return result;
}

std::string render_throughput(const ThroughputReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return to_json(report).dump(2) + "\n";
    }
    std::ostringstream out;
    out << "bucket,share,speed,relative_to_reference\n";
    for (const auto& b : report.buckets) {
        out << b.capacity << ',' << format_sig4(b.share) << ',' << b.speed << ','
            << format_sig4(b.relative_to_reference) << '\n';
    }
    out << "aggregate,1," << format_sig4(report.aggregate_speed) << ',' << format_sig4(report.speedup) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// stats

std::string cmd_stats(const StatsOptions& options) {
    const DocumentSet docs = load_documents(options.input, options.load);
    const Histogram h = length_histogram(docs, options.edges);
    if (options.format == ReportFormat::Json) {
        json j = to_json(h);
        j["total_tokens"] = docs.total_tokens();
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "lo,hi,count,fraction_below_hi\n";
    out << "-," << h.bin_edges.front() << ',' << h.underflow << ',' << format_sig4(h.fraction_below.front()) << '\n';
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        out << h.bin_edges[k] << ',' << h.bin_edges[k + 1] << ',' << h.counts[k] << ','
            << format_sig4(h.fraction_below[k + 1]) << '\n';
    }
    out << h.bin_edges.back() << ",-," << h.overflow << ",1\n";
    return out.str();
}

}  // namespace bucketpack
