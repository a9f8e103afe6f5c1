#include "bucketpack/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "bucketpack/error.hpp"
#include "bucketpack/random.hpp"

namespace bucketpack {

using nlohmann::json;

DocumentSet::DocumentSet(std::vector<Document> docs, TokenId eos_id, TokenId pad_id)
    : docs_(std::move(docs)), eos_id_(eos_id), pad_id_(pad_id) {
    if (eos_id_ == pad_id_) {
        throw ValidationError("eos_id and pad_id must differ");
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(docs_.size());
    for (const auto& doc : docs_) {
        if (doc.length == 0) {
            throw ValidationError("zero-length document '" + doc.id + "'");
        }
        if (doc.tokens && doc.tokens->size() != doc.length) {
            throw ValidationError("document '" + doc.id + "' length does not match its tokens");
        }
        if (!seen.insert(doc.id).second) {
            throw ValidationError("duplicate document id '" + doc.id + "'");
        }
        total_tokens_ += doc.length;
    }
}

bool DocumentSet::has_tokens() const {
    return !docs_.empty() &&
           std::all_of(docs_.begin(), docs_.end(), [](const Document& d) { return d.tokens.has_value(); });
}

std::vector<std::uint64_t> DocumentSet::lengths() const {
    std::vector<std::uint64_t> out;
    out.reserve(docs_.size());
    for (const auto& doc : docs_) {
        out.push_back(doc.length);
    }
    return out;
}

CorpusFormat parse_corpus_format(const std::string& name) {
    if (name == "tokens" || name == "tokens-jsonl") {
        return CorpusFormat::TokensJsonl;
    }
    if (name == "lengths" || name == "lengths-jsonl") {
        return CorpusFormat::LengthsJsonl;
    }
    throw ValidationError("unknown corpus format '" + name + "'");
}

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
    throw ValidationError("line " + std::to_string(line) + ": " + what);
}

std::uint64_t read_unsigned(const json& value, std::size_t line, const char* field) {
    if (value.is_number_unsigned()) {
        return value.get<std::uint64_t>();
    }
    if (value.is_number_integer()) {
        const auto v = value.get<std::int64_t>();
        if (v >= 0) {
            return static_cast<std::uint64_t>(v);
        }
    }
    fail_at(line, std::string("field '") + field + "' must be a non-negative integer");
}

}  // namespace

DocumentSet read_documents(std::istream& in, const LoadOptions& options) {
    if (options.eos_id == options.pad_id) {
        throw ValidationError("eos_id and pad_id must differ");
    }
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        json record;
        try {
            record = json::parse(text);
        } catch (const json::parse_error& e) {
            fail_at(line, std::string("malformed record: ") + e.what());
        }
        if (!record.is_object()) {
            fail_at(line, "malformed record: expected a JSON object");
        }
        const auto id_it = record.find("id");
        if (id_it == record.end() || !id_it->is_string()) {
            fail_at(line, "malformed record: missing string field 'id'");
        }

        Document doc;
        doc.id = id_it->get<std::string>();
        if (options.format == CorpusFormat::TokensJsonl) {
            const auto tok_it = record.find("tokens");
            if (tok_it == record.end() || !tok_it->is_array()) {
                fail_at(line, "malformed record: missing array field 'tokens'");
            }
            std::vector<TokenId> tokens;
            tokens.reserve(tok_it->size() + 1);
            for (const auto& t : *tok_it) {
                const auto v = read_unsigned(t, line, "tokens");
                if (v > std::numeric_limits<TokenId>::max()) {
                    fail_at(line, "token id out of range");
                }
                const auto token = static_cast<TokenId>(v);
                if (options.validate_tokens && (token == options.pad_id || token == options.eos_id)) {
                    fail_at(line, "token id " + std::to_string(token) + " collides with reserved pad/eos id");
                }
                tokens.push_back(token);
            }
            if (tokens.empty()) {
                fail_at(line, "zero-length document");
            }
            if (options.append_eos) {
                tokens.push_back(options.eos_id);
            }
            doc.length = tokens.size();
            doc.tokens = std::move(tokens);
        } else {
            const auto len_it = record.find("len");
            if (len_it == record.end()) {
                fail_at(line, "malformed record: missing field 'len'");
            }
            doc.length = read_unsigned(*len_it, line, "len");
            if (doc.length == 0) {
                fail_at(line, "zero-length document");
            }
            if (options.append_eos) {
                ++doc.length;
            }
        }
        if (!ids.insert(doc.id).second) {
            fail_at(line, "duplicate document id '" + doc.id + "'");
        }
        docs.push_back(std::move(doc));
    }
    if (in.bad()) {
        throw IoError("read error after line " + std::to_string(line));
    }
    return DocumentSet(std::move(docs), options.eos_id, options.pad_id);
}

DocumentSet load_documents(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file " + path.string());
    }
    try {
        return read_documents(in, options);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

LengthFamily parse_length_family(const std::string& name) {
    if (name == "lognormal") {
        return LengthFamily::Lognormal;
    }
    if (name == "mixture" || name == "mixture-of-lognormals") {
        return LengthFamily::MixtureOfLognormals;
    }
    throw ValidationError("unknown length family '" + name + "'");
}

std::string to_string(LengthFamily family) {
    return family == LengthFamily::Lognormal ? "lognormal" : "mixture";
}

void DistributionSpec::validate() const {
    if (components.empty()) {
        throw ValidationError("distribution needs at least one component");
    }
    if (family == LengthFamily::Lognormal && components.size() != 1) {
        throw ValidationError("lognormal family takes exactly one component");
    }
    double weight_sum = 0.0;
    for (const auto& c : components) {
        if (!std::isfinite(c.log_mean) || !(c.log_sigma >= 0.0) || !std::isfinite(c.log_sigma)) {
            throw ValidationError("component parameters must be finite with log_sigma >= 0");
        }
        if (!(c.weight >= 0.0)) {
            throw ValidationError("component weights must be non-negative");
        }
        weight_sum += c.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw ValidationError("component weights must sum to 1");
    }
    if (min_len < 1) {
        throw ValidationError("min_len must be >= 1");
    }
    if (max_len < min_len) {
        throw ValidationError("max_len must be >= min_len");
    }
}

DistributionSpec DistributionSpec::default_web(std::uint64_t count, std::uint64_t seed) {
    DistributionSpec spec;
    spec.family = LengthFamily::Lognormal;
    spec.components = {{std::log(400.0), 1.0, 1.0}};
    spec.min_len = 1;
    spec.max_len = 65536;
    spec.count = count;
    spec.seed = seed;
    return spec;
}

DocumentSet generate_synthetic(const DistributionSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t width = std::to_string(spec.count).size();
    const double lo = static_cast<double>(spec.min_len);
    const double hi = static_cast<double>(spec.max_len);

    std::vector<Document> docs;
    docs.reserve(spec.count);
    for (std::uint64_t i = 0; i < spec.count; ++i) {
        const LognormalComponent* component = &spec.components.front();
        if (spec.components.size() > 1) {
            double u = rng.uniform01();
            for (const auto& c : spec.components) {
                component = &c;
                if (u < c.weight) {
                    break;
                }
                u -= c.weight;
            }
        }
        const double z = rng.normal();
        const double raw = std::exp(component->log_mean + component->log_sigma * z);
        const double clamped = std::clamp(std::round(raw), lo, hi);

        std::string id = std::to_string(i);
        id.insert(0, width - id.size(), '0');
        docs.push_back(Document{std::move(id), std::nullopt, static_cast<std::uint64_t>(clamped)});
    }
    return DocumentSet(std::move(docs));
}

Histogram length_histogram(const DocumentSet& docs, std::span<const std::uint64_t> bin_edges) {
    if (bin_edges.size() < 2) {
        throw ValidationError("histogram needs at least two bin edges");
    }
    if (std::adjacent_find(bin_edges.begin(), bin_edges.end(), std::greater_equal<>()) != bin_edges.end()) {
        throw ValidationError("bin edges must be strictly ascending");
    }
    Histogram h;
    h.bin_edges.assign(bin_edges.begin(), bin_edges.end());
    h.counts.assign(bin_edges.size() - 1, 0);
    h.total = docs.size();

    // below[k]: documents with length < edges[k]
    std::vector<std::uint64_t> below(bin_edges.size(), 0);
    for (const auto& doc : docs.docs()) {
        const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), doc.length);
        const auto k = static_cast<std::size_t>(it - bin_edges.begin());
        if (k == 0) {
            ++h.underflow;
        } else if (k == bin_edges.size()) {
            ++h.overflow;
        } else {
            ++h.counts[k - 1];
        }
        if (k < below.size()) {
            ++below[k];
        }
    }
    h.fraction_below.resize(bin_edges.size());
    std::uint64_t running = 0;
    for (std::size_t k = 0; k < bin_edges.size(); ++k) {
        running += below[k];
        h.fraction_below[k] = h.total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(h.total);
    }
    return h;
}

}  // namespace bucketpack
