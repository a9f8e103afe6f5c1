#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bucketpack {

using TokenId = std::uint32_t;

inline constexpr TokenId kDefaultPadId = 0;
inline constexpr TokenId kDefaultEosId = 2;

// One original corpus item. Length-only documents leave `tokens` empty.
struct Document {
    std::string id;
    std::optional<std::vector<TokenId>> tokens;
    std::uint64_t length = 0;

    bool operator==(const Document&) const = default;
};

// An ordered corpus with its reserved token ids. Immutable once built;
// construction validates length >= 1, id uniqueness, and (for token-mode
// documents) length == tokens.size().
class DocumentSet {
public:
    DocumentSet() = default;
    DocumentSet(std::vector<Document> docs, TokenId eos_id = kDefaultEosId,
                TokenId pad_id = kDefaultPadId);

    std::span<const Document> docs() const { return docs_; }
    const Document& operator[](std::size_t i) const { return docs_[i]; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    std::uint64_t total_tokens() const { return total_tokens_; }
    TokenId eos_id() const { return eos_id_; }
    TokenId pad_id() const { return pad_id_; }

    // True when every document carries a token payload (and the set is non-empty).
    bool has_tokens() const;

    std::vector<std::uint64_t> lengths() const;

    bool operator==(const DocumentSet&) const = default;

private:
    std::vector<Document> docs_;
    std::uint64_t total_tokens_ = 0;
    TokenId eos_id_ = kDefaultEosId;
    TokenId pad_id_ = kDefaultPadId;
};

enum class CorpusFormat { TokensJsonl, LengthsJsonl };

struct LoadOptions {
    CorpusFormat format = CorpusFormat::LengthsJsonl;
    bool append_eos = true;
    TokenId eos_id = kDefaultEosId;
    TokenId pad_id = kDefaultPadId;
    // Reject token ids equal to eos_id/pad_id inside document bodies.
    bool validate_tokens = true;
};

// Errors are reported as ValidationError with the 1-based line number, or
// IoError when the file cannot be read.
DocumentSet load_documents(const std::filesystem::path& path, const LoadOptions& options);
DocumentSet read_documents(std::istream& in, const LoadOptions& options);

CorpusFormat parse_corpus_format(const std::string& name);

enum class LengthFamily { Lognormal, MixtureOfLognormals };

struct LognormalComponent {
    double log_mean = 0.0;
    double log_sigma = 1.0;
    double weight = 1.0;
};

struct DistributionSpec {
    LengthFamily family = LengthFamily::Lognormal;
    std::vector<LognormalComponent> components;
    std::uint64_t min_len = 1;
    std::uint64_t max_len = 65536;
    std::uint64_t count = 0;
    std::uint64_t seed = 0;

    void validate() const;

    // Single lognormal with median 400 tokens, sigma 1.0, clamped to [1, 65536].
    // Puts the bulk of the mass below 2048 tokens, like common web corpora.
    static DistributionSpec default_web(std::uint64_t count, std::uint64_t seed);
};

LengthFamily parse_length_family(const std::string& name);
std::string to_string(LengthFamily family);

// Length-only corpus, a pure function of `spec`. Ids are zero-padded
// sequence numbers so lexical and numeric order agree.
DocumentSet generate_synthetic(const DistributionSpec& spec);

struct Histogram {
    std::vector<std::uint64_t> bin_edges;
    std::vector<std::uint64_t> counts;        // counts[k]: edges[k] <= len < edges[k+1]
    std::vector<double> fraction_below;       // per edge: fraction of all docs with len < edge
    std::uint64_t underflow = 0;              // len < edges.front()
    std::uint64_t overflow = 0;               // len >= edges.back()
    std::uint64_t total = 0;
};

Histogram length_histogram(const DocumentSet& docs, std::span<const std::uint64_t> bin_edges);

}  // namespace bucketpack
