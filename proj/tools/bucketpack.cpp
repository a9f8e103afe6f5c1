// bucketpack: compose tokenized corpora into bucketed training samples.
//
//   bucketpack synth    --count 10000 --seed 7 -o corpus.jsonl
//   bucketpack stats    corpus.jsonl --edges 0,512,1024,2048,4096
//   bucketpack pack     corpus.jsonl --strategy greedy --buckets 2048,4096,8192,16384 --pad-threshold 0.01
//   bucketpack compare  corpus.jsonl --seeds 5 --format csv
//   bucketpack schedule samples.jsonl.manifest.json --speed-table speeds.json --world-size 128
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bucketpack/commands.hpp"
#include "bucketpack/error.hpp"

namespace {

using namespace bucketpack;

struct CorpusFlags {
    std::string input_format = "lengths";
    bool append_eos = true;
    TokenId eos_id = kDefaultEosId;
    TokenId pad_id = kDefaultPadId;
    bool validate_tokens = true;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input-format", input_format, "Corpus format: tokens or lengths")
            ->check(CLI::IsMember({"tokens", "lengths", "tokens-jsonl", "lengths-jsonl"}))
            ->capture_default_str();
        cmd->add_flag("--append-eos,!--no-append-eos", append_eos, "Append an EOS token to every document");
        cmd->add_option("--eos-id", eos_id, "Reserved end-of-document token id")->capture_default_str();
        cmd->add_option("--pad-id", pad_id, "Reserved padding token id")->capture_default_str();
        cmd->add_flag("--validate-tokens,!--no-validate-tokens", validate_tokens,
                      "Reject reserved ids inside document bodies");
    }

    LoadOptions options() const {
        LoadOptions o;
        o.format = parse_corpus_format(input_format);
        o.append_eos = append_eos;
        o.eos_id = eos_id;
        o.pad_id = pad_id;
        o.validate_tokens = validate_tokens;
        return o;
    }
};

// "mu:sigma:weight;mu:sigma:weight"
std::vector<LognormalComponent> parse_components(const std::string& text) {
    std::vector<LognormalComponent> out;
    std::stringstream all(text);
    std::string item;
    while (std::getline(all, item, ';')) {
        LognormalComponent c;
        char sep1 = 0;
        char sep2 = 0;
        std::stringstream one(item);
        if (!(one >> c.log_mean >> sep1 >> c.log_sigma >> sep2 >> c.weight) || sep1 != ':' || sep2 != ':') {
            throw ValidationError("bad component '" + item + "', expected log_mean:log_sigma:weight");
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compose tokenized documents into bucketed training samples"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic lengths-jsonl corpus");
    std::string family = "lognormal";
    double log_mean = std::log(400.0);
    double log_sigma = 1.0;
    std::string components;
    SynthOptions synth_opts;
    std::string synth_out;
    synth->add_option("--family", family, "lognormal or mixture")->check(CLI::IsMember({"lognormal", "mixture"}));
    synth->add_option("--log-mean", log_mean, "Log-mean of the lognormal")->capture_default_str();
    synth->add_option("--log-sigma", log_sigma, "Log-sigma of the lognormal")->capture_default_str();
    synth->add_option("--components", components, "Mixture components as mu:sigma:weight;...");
    synth->add_option("--min-len", synth_opts.spec.min_len, "Lower length clamp")->capture_default_str();
    synth->add_option("--max-len", synth_opts.spec.max_len, "Upper length clamp")->capture_default_str();
    synth->add_option("--count", synth_opts.spec.count, "Number of documents")->capture_default_str();
    synth->add_option("--seed", synth_opts.spec.seed, "Generator seed")->capture_default_str();
    synth->add_option("-o,--output", synth_out, "Output lengths-jsonl path");

    // stats
    auto* stats = app.add_subcommand("stats", "Document length histogram");
    StatsOptions stats_opts;
    CorpusFlags stats_corpus;
    std::string stats_input;
    std::string stats_format = "csv";
    stats->add_option("input", stats_input, "Corpus file")->required();
    stats_corpus.attach(stats);
    stats->add_option("--edges", stats_opts.edges, "Ascending bin edges")->delimiter(',');
    stats->add_option("--format", stats_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // pack
    auto* pack = app.add_subcommand("pack", "Pack a corpus into training samples");
    PackOptions pack_opts;
    CorpusFlags pack_corpus;
    std::string pack_input;
    std::uint64_t length = 0;
    std::vector<std::uint64_t> buckets;
    double pad_threshold = 0.0;
    std::string pack_out;
    std::string pack_manifest;
    pack->add_option("input", pack_input, "Corpus file")->required();
    pack_corpus.attach(pack);
    pack->add_option("--strategy", pack_opts.strategy, "fixed, naive or greedy")->required();
    auto* length_opt = pack->add_option("--length", length, "Sample length for the fixed strategy");
    auto* buckets_opt = pack->add_option("--buckets", buckets, "Ascending bucket capacities")->delimiter(',');
    auto* threshold_opt = pack->add_option("--pad-threshold", pad_threshold, "Greedy padding threshold in [0,1]");
    pack->add_option("--seed", pack_opts.seed, "Shuffle seed")->capture_default_str();
    pack->add_flag("--emit-tokens", pack_opts.emit_tokens, "Write token payloads (tokens-jsonl input only)");
    pack->add_option("-o,--output", pack_out, "Output samples-jsonl path");
    pack->add_option("--manifest", pack_manifest, "Manifest path (default <output>.manifest.json)");

    // compare
    auto* compare = app.add_subcommand("compare", "Score every strategy on one corpus");
    CompareOptions compare_opts;
    CorpusFlags compare_corpus;
    std::string compare_input;
    std::string compare_format = "csv";
    std::string compare_out;
    bool serial = false;
    compare->add_option("input", compare_input, "Corpus file")->required();
    compare_corpus.attach(compare);
    compare->add_option("--lengths", compare_opts.config.fixed_lengths, "Fixed-length baselines")->delimiter(',');
    compare->add_option("--buckets", compare_opts.config.buckets.capacities, "Bucket capacities")->delimiter(',');
    compare->add_option("--pad-threshold", compare_opts.config.buckets.padding_threshold, "Greedy padding threshold")
        ->capture_default_str();
    compare->add_option("--seeds", compare_opts.config.seeds, "Seeds per seeded strategy")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    compare->add_option("--seed", compare_opts.config.base_seed, "First seed")->capture_default_str();
    compare->add_option("--format", compare_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    compare->add_option("-o,--output", compare_out, "Write the report here (plus a manifest)");
    compare->add_flag("--serial", serial, "Run strategies one at a time");

    // schedule
    auto* schedule = app.add_subcommand("schedule", "Plan same-bucket training steps and estimate throughput");
    ScheduleOptions schedule_opts;
    std::string schedule_manifest;
    std::string speed_table;
    std::string samples_path;
    std::string leftover = "drop";
    std::uint64_t speed_reference = 0;
    std::string schedule_format = "json";
    std::string schedule_out;
    schedule->add_option("manifest", schedule_manifest, "Manifest written by pack")->required();
    schedule->add_option("--speed-table", speed_table, "JSON map capacity -> tokens/s")->required();
    schedule->add_option("--samples", samples_path, "Samples file (default: from the manifest)");
    schedule->add_option("--reference-capacity", schedule_opts.config.reference_capacity, "Reference bucket L0")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    schedule->add_option("--reference-batch", schedule_opts.config.reference_batch, "Per-rank batch at L0")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    schedule->add_option("--world-size", schedule_opts.config.world_size, "Number of ranks")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    schedule->add_option("--seed", schedule_opts.config.seed, "Step interleaving seed")->capture_default_str();
    schedule->add_option("--leftover", leftover, "drop or pad-batch")->check(CLI::IsMember({"drop", "pad-batch"}));
    auto* speed_ref_opt =
        schedule->add_option("--speed-reference", speed_reference, "Bucket the speedups are measured against");
    schedule->add_option("--format", schedule_format, "Throughput report format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    schedule->add_option("-o,--output", schedule_out, "Plan JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            synth_opts.spec.family = parse_length_family(family);
            if (synth_opts.spec.family == LengthFamily::MixtureOfLognormals) {
                if (components.empty()) {
                    throw ValidationError("--family mixture needs --components");
                }
                synth_opts.spec.components = parse_components(components);
            } else {
                synth_opts.spec.components = {{log_mean, log_sigma, 1.0}};
            }
            if (!synth_out.empty()) synth_opts.output = synth_out;
            const auto manifest = cmd_synth(synth_opts);
            std::cerr << "wrote " << manifest["M"] << " documents\n";
        } else if (stats->parsed()) {
            stats_opts.input = stats_input;
            stats_opts.load = stats_corpus.options();
            stats_opts.format = parse_report_format(stats_format);
            std::cout << cmd_stats(stats_opts);
        } else if (pack->parsed()) {
            pack_opts.input = pack_input;
            pack_opts.load = pack_corpus.options();
            if (length_opt->count() > 0) pack_opts.length = length;
            if (buckets_opt->count() > 0) pack_opts.buckets = buckets;
            if (threshold_opt->count() > 0) pack_opts.pad_threshold = pad_threshold;
            if (!pack_out.empty()) pack_opts.output = pack_out;
            if (!pack_manifest.empty()) pack_opts.manifest = pack_manifest;
            const auto manifest = cmd_pack(pack_opts);
            std::cout << manifest["metrics"].dump(2) << '\n';
        } else if (compare->parsed()) {
            compare_opts.input = compare_input;
            compare_opts.load = compare_corpus.options();
            compare_opts.format = parse_report_format(compare_format);
            compare_opts.config.parallel = !serial;
            if (!compare_out.empty()) compare_opts.output = compare_out;
            std::cout << cmd_compare(compare_opts);
        } else if (schedule->parsed()) {
            schedule_opts.manifest = schedule_manifest;
            schedule_opts.speed_table = speed_table;
            if (!samples_path.empty()) schedule_opts.samples = samples_path;
            schedule_opts.config.leftover_policy = parse_leftover_policy(leftover);
            if (speed_ref_opt->count() > 0) schedule_opts.speed_reference = speed_reference;
            schedule_opts.format = parse_report_format(schedule_format);
            if (!schedule_out.empty()) schedule_opts.output = schedule_out;
            const auto result = cmd_schedule(schedule_opts);
            std::cout << render_throughput(result.throughput, schedule_opts.format);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
