#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bucketpack/corpus.hpp"

namespace bucketpack {

// Ordered bucket capacities plus the per-sample padding budget used by the
// greedy packer: a sample whose free space exceeds padding_threshold * capacity
// is topped up with a chunk of the shortest pending document instead of pads.
struct BucketConfig {
    std::vector<std::uint64_t> capacities;
    double padding_threshold = 0.01;

    // Throws ValidationError unless capacities are non-empty, strictly
    // ascending and >= 2, and 0 <= padding_threshold <= 1.
    void validate() const;

    std::uint64_t largest() const { return capacities.back(); }

    static BucketConfig standard(double padding_threshold = 0.01);
};

// Half-open token range [start, end) of one document. `doc` indexes the
// DocumentSet the packing was built from.
struct Segment {
    std::size_t doc = 0;
    std::uint64_t start = 0;
    std::uint64_t end = 0;

    std::uint64_t length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

// One training sample. Segment lengths plus pad_count always equal capacity.
struct PackedSample {
    std::uint64_t capacity = 0;
    std::vector<Segment> segments;
    std::uint64_t pad_count = 0;

    std::uint64_t body_tokens() const;
    bool operator==(const PackedSample&) const = default;
};

enum class Strategy { Fixed, Naive, Greedy };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& name);

struct StrategyDescriptor {
    Strategy kind = Strategy::Greedy;
    std::uint64_t length = 0;                 // fixed only
    std::vector<std::uint64_t> capacities;    // naive and greedy
    double padding_threshold = 0.0;           // greedy only
    std::optional<std::uint64_t> seed;        // fixed and naive

    bool operator==(const StrategyDescriptor&) const = default;
};

struct SourceIdentity {
    std::uint64_t doc_count = 0;
    std::uint64_t total_tokens = 0;

    bool operator==(const SourceIdentity&) const = default;
};

SourceIdentity identity_of(const DocumentSet& docs);

// Samples are kept in production order.
struct PackedDataset {
    std::vector<PackedSample> samples;
    SourceIdentity source;
    StrategyDescriptor strategy;

    std::map<std::uint64_t, std::uint64_t> bucket_counts() const;
    bool operator==(const PackedDataset&) const = default;
};

// Smallest capacity >= doc_length, or the largest capacity if none fits.
std::uint64_t select_bucket(std::uint64_t doc_length, const BucketConfig& config);

// Shuffle documents by seed, concatenate, split every `length` tokens; only the
// final sample is padded.
PackedDataset pack_fixed(const DocumentSet& docs, std::uint64_t length, std::uint64_t seed);

// Partition documents by select_bucket, then concat-and-split each partition at
// its own capacity. Partitions are emitted in ascending capacity order.
PackedDataset pack_naive_buckets(const DocumentSet& docs, const BucketConfig& config, std::uint64_t seed);

// Greedy multi-bucket composition. Deterministic; ties in length are broken by
// ascending document id.
PackedDataset pack_greedy_buckets(const DocumentSet& docs, const BucketConfig& config);

// Token payload of one sample (document spans followed by pad_id). Requires a
// token-mode DocumentSet.
std::vector<TokenId> materialize_tokens(const PackedSample& sample, const DocumentSet& docs);

// Rebuild the corpus from a packing. In token mode the documents are
// reassembled from materialized sample payloads. Throws ValidationError on a
// source mismatch, a malformed sample, or any gap/overlap in a document's
// segment coverage.
DocumentSet unpack(const PackedDataset& packed, const DocumentSet& docs);

}  // namespace bucketpack
