#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bucketpack/corpus.hpp"
#include "bucketpack/metrics.hpp"
#include "bucketpack/packing.hpp"
#include "bucketpack/scheduler.hpp"

namespace bucketpack {

// samples-jsonl: {"bucket": int, "segments": [{"doc", "start", "end"}], "pad": int}
// plus a "tokens" array when with_tokens is set.
void write_samples_jsonl(std::ostream& out, const PackedDataset& packed, const DocumentSet& docs,
                         bool with_tokens);

// Resolves "doc" ids against `docs`; "tokens" is ignored.
std::vector<PackedSample> read_samples_jsonl(std::istream& in, const DocumentSet& docs);

// Bucket capacity of every line, in file order.
std::vector<std::uint64_t> read_sample_buckets(std::istream& in);

void write_lengths_jsonl(std::ostream& out, const DocumentSet& docs);

nlohmann::json to_json(const Ratio& r);  // {"num", "den", "value"}
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const StrategyDescriptor& strategy);
nlohmann::json to_json(const Histogram& histogram);
nlohmann::json to_json(const SchedulePlan& plan);
nlohmann::json to_json(const ThroughputReport& report);

// JSON object mapping capacity (as a string key) to tokens/second.
SpeedTable parse_speed_table(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// 4 significant digits, the CSV rendering for ratios.
std::string format_sig4(double value);

}  // namespace bucketpack
