#include "bucketpack/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "bucketpack/error.hpp"

namespace bucketpack {

using nlohmann::json;

void write_samples_jsonl(std::ostream& out, const PackedDataset& packed, const DocumentSet& docs,
                         bool with_tokens) {
    for (const auto& sample : packed.samples) {
        json segments = json::array();
        for (const auto& seg : sample.segments) {
            segments.push_back({{"doc", docs[seg.doc].id}, {"start", seg.start}, {"end", seg.end}});
        }
        json line = {{"bucket", sample.capacity}, {"segments", std::move(segments)}, {"pad", sample.pad_count}};
        if (with_tokens) {
            line["tokens"] = materialize_tokens(sample, docs);
        }
        out << line.dump() << '\n';
    }
}

std::vector<PackedSample> read_samples_jsonl(std::istream& in, const DocumentSet& docs) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        index.emplace(docs[i].id, i);
    }
    std::vector<PackedSample> samples;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) {
            continue;
        }
        try {
            const json j = json::parse(text);
            PackedSample s;
            s.capacity = j.at("bucket").get<std::uint64_t>();
            s.pad_count = j.at("pad").get<std::uint64_t>();
            for (const auto& seg : j.at("segments")) {
                const auto it = index.find(seg.at("doc").get<std::string>());
                if (it == index.end()) {
                    throw ValidationError("unknown document id");
                }
                s.segments.push_back(
                    Segment{it->second, seg.at("start").get<std::uint64_t>(), seg.at("end").get<std::uint64_t>()});
            }
            samples.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw ValidationError("samples line " + std::to_string(line) + ": " + e.what());
        }
    }
    return samples;
}

std::vector<std::uint64_t> read_sample_buckets(std::istream& in) {
    std::vector<std::uint64_t> buckets;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) {
            continue;
        }
        try {
            buckets.push_back(json::parse(text).at("bucket").get<std::uint64_t>());
        } catch (const std::exception& e) {
            throw ValidationError("samples line " + std::to_string(line) + ": " + e.what());
        }
    }
    return buckets;
}

void write_lengths_jsonl(std::ostream& out, const DocumentSet& docs) {
    for (const auto& doc : docs.docs()) {
        out << json{{"id", doc.id}, {"len", doc.length}}.dump() << '\n';
    }
}

json to_json(const Ratio& r) {
    return {{"num", r.num}, {"den", r.den}, {"value", r.value()}};
}

json to_json(const MetricsReport& report) {
    return {
        {"r_pad", to_json(report.r_pad)},
        {"r_tru", to_json(report.r_tru)},
        {"r_cat", to_json(report.r_cat)},
        {"M", report.doc_count},
        {"C", report.sample_count},
        {"total_pad", report.total_pad},
        {"total_len", report.total_len},
        {"truncated_docs", report.truncated_docs},
    };
}

json to_json(const StrategyDescriptor& strategy) {
    json j = {{"name", to_string(strategy.kind)}};
    switch (strategy.kind) {
        case Strategy::Fixed:
            j["length"] = strategy.length;
            break;
        case Strategy::Naive:
            j["capacities"] = strategy.capacities;
            break;
        case Strategy::Greedy:
            j["capacities"] = strategy.capacities;
            j["padding_threshold"] = strategy.padding_threshold;
            break;
    }
    if (strategy.seed) {
        j["seed"] = *strategy.seed;
    }
    return j;
}

json to_json(const Histogram& h) {
    return {
        {"bin_edges", h.bin_edges},
        {"counts", h.counts},
        {"fraction_below", h.fraction_below},
        {"underflow", h.underflow},
        {"overflow", h.overflow},
        {"total", h.total},
    };
}

json to_json(const SchedulePlan& plan) {
    json steps = json::array();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& step = plan.steps[i];
        json entry = {{"step", i}, {"bucket", step.bucket}, {"per_rank", step.per_rank}};
        if (step.padded) {
            entry["padded"] = true;
        }
        steps.push_back(std::move(entry));
    }
    json buckets = json::array();
    for (const auto& b : plan.buckets) {
        buckets.push_back({
            {"bucket", b.capacity},
            {"batch_per_rank", b.batch_per_rank},
            {"samples", b.samples},
            {"steps", b.steps},
            {"consumed", b.consumed},
            {"dropped", b.dropped},
            {"duplicated", b.duplicated},
        });
    }
    return {
        {"config",
         {
             {"reference_capacity", plan.config.reference_capacity},
             {"reference_batch", plan.config.reference_batch},
             {"world_size", plan.config.world_size},
             {"seed", plan.config.seed},
             {"leftover_policy", to_string(plan.config.leftover_policy)},
         }},
        {"tokens_per_step", plan.tokens_per_step},
        {"summary", std::move(buckets)},
        {"steps", std::move(steps)},
    };
}

json to_json(const ThroughputReport& report) {
    json buckets = json::array();
    for (const auto& b : report.buckets) {
        buckets.push_back({
            {"bucket", b.capacity},
            {"share", b.share},
            {"speed", b.speed},
            {"relative_to_reference", b.relative_to_reference},
        });
    }
    return {
        {"reference", report.reference},
        {"reference_speed", report.reference_speed},
        {"aggregate_speed", report.aggregate_speed},
        {"speedup", report.speedup},
        {"buckets", std::move(buckets)},
    };
}

SpeedTable parse_speed_table(const json& j) {
    if (!j.is_object()) {
        throw ValidationError("speed table must be a JSON object of capacity -> tokens/s");
    }
    SpeedTable table;
    for (const auto& [key, value] : j.items()) {
        std::uint64_t capacity = 0;
        try {
            std::size_t pos = 0;
            capacity = std::stoull(key, &pos);
            if (pos != key.size()) {
                throw std::invalid_argument(key);
            }
        } catch (const std::exception&) {
            throw ValidationError("speed table key '" + key + "' is not a capacity");
        }
        if (!value.is_number()) {
            throw ValidationError("speed for bucket " + key + " is not a number");
        }
        table[capacity] = value.get<double>();
    }
    return table;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 init failed");
        }
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const char* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }

    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int size = 0;
        EVP_DigestFinal_ex(ctx_, digest, &size);
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(size * 2);
        for (unsigned int i = 0; i < size; ++i) {
            out.push_back(kHex[digest[i] >> 4]);
            out.push_back(kHex[digest[i] & 0xf]);
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string format_sig4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", value);
    return buf;
}

}  // namespace bucketpack
