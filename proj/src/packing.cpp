#include "bucketpack/packing.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <set>

#include "bucketpack/error.hpp"
#include "bucketpack/random.hpp"

namespace bucketpack {

void BucketConfig::validate() const {
    if (capacities.empty()) {
        throw ValidationError("bucket capacities must not be empty");
    }
    for (std::size_t i = 0; i < capacities.size(); ++i) {
        if (capacities[i] < 2) {
            throw ValidationError("bucket capacities must be >= 2");
        }
        if (i > 0 && capacities[i] <= capacities[i - 1]) {
            throw ValidationError("capacities must be ascending");
        }
    }
    if (!(padding_threshold >= 0.0 && padding_threshold <= 1.0)) {
        throw ValidationError("padding threshold must lie in [0, 1]");
    }
}

BucketConfig BucketConfig::standard(double padding_threshold) {
    return BucketConfig{{2048, 4096, 8192, 16384}, padding_threshold};
}

std::uint64_t PackedSample::body_tokens() const {
    std::uint64_t n = 0;
    for (const auto& s : segments) {
        n += s.length();
    }
    return n;
}

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Fixed: return "fixed";
        case Strategy::Naive: return "naive";
        case Strategy::Greedy: return "greedy";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "fixed") return Strategy::Fixed;
    if (name == "naive") return Strategy::Naive;
    if (name == "greedy") return Strategy::Greedy;
    throw ValidationError("unknown strategy '" + name + "'");
}

SourceIdentity identity_of(const DocumentSet& docs) {
    return SourceIdentity{docs.size(), docs.total_tokens()};
}

std::map<std::uint64_t, std::uint64_t> PackedDataset::bucket_counts() const {
    std::map<std::uint64_t, std::uint64_t> counts;
    for (const auto& s : samples) {
        ++counts[s.capacity];
    }
    return counts;
}

std::uint64_t select_bucket(std::uint64_t doc_length, const BucketConfig& config) {
    const auto it = std::lower_bound(config.capacities.begin(), config.capacities.end(), doc_length);
    return it == config.capacities.end() ? config.capacities.back() : *it;
}

namespace {

// Concatenate `order` into one stream and cut it every `length` tokens.
void concat_and_split(const DocumentSet& docs, const std::vector<std::size_t>& order, std::uint64_t length,
                      std::vector<PackedSample>& out) {
    PackedSample current{length, {}, 0};
    std::uint64_t used = 0;
    for (const std::size_t doc : order) {
        std::uint64_t offset = 0;
        const std::uint64_t doc_len = docs[doc].length;
        while (offset < doc_len) {
            const std::uint64_t take = std::min(doc_len - offset, length - used);
            current.segments.push_back(Segment{doc, offset, offset + take});
            offset += take;
            used += take;
            if (used == length) {
                out.push_back(std::move(current));
                current = PackedSample{length, {}, 0};
                used = 0;
            }
        }
    }
    if (used > 0) {
        current.pad_count = length - used;
        out.push_back(std::move(current));
    }
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

PackedDataset pack_fixed(const DocumentSet& docs, std::uint64_t length, std::uint64_t seed) {
    if (length < 2) {
        throw ValidationError("fixed sample length must be >= 2");
    }
    PackedDataset packed;
    packed.source = identity_of(docs);
    packed.strategy = StrategyDescriptor{Strategy::Fixed, length, {}, 0.0, seed};

    auto order = iota_indices(docs.size());
    Rng rng(seed);
    shuffle(order, rng);
    concat_and_split(docs, order, length, packed.samples);
    return packed;
}

PackedDataset pack_naive_buckets(const DocumentSet& docs, const BucketConfig& config, std::uint64_t seed) {
    config.validate();
    PackedDataset packed;
    packed.source = identity_of(docs);
    packed.strategy = StrategyDescriptor{Strategy::Naive, 0, config.capacities, 0.0, seed};

    std::map<std::uint64_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        groups[select_bucket(docs[i].length, config)].push_back(i);
    }
    Rng rng(seed);
    for (auto& [capacity, members] : groups) {
        shuffle(members, rng);
        concat_and_split(docs, members, capacity, packed.samples);
    }
    return packed;
}

namespace {

// A pending document (or the unplaced remainder of one) in the greedy pool.
struct PoolEntry {
    std::uint64_t remaining;
    std::uint32_t rank;  // position of the document id in ascending id order
};

// Descending remaining length, then ascending id.
struct PoolOrder {
    bool operator()(const PoolEntry& a, const PoolEntry& b) const {
        if (a.remaining != b.remaining) {
            return a.remaining > b.remaining;
        }
        return a.rank < b.rank;
    }
};

}  // namespace

PackedDataset pack_greedy_buckets(const DocumentSet& docs, const BucketConfig& config) {
    config.validate();
    PackedDataset packed;
    packed.source = identity_of(docs);
    packed.strategy = StrategyDescriptor{Strategy::Greedy, 0, config.capacities, config.padding_threshold, std::nullopt};

    const std::size_t n = docs.size();
    auto by_id = iota_indices(n);
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });

    std::set<PoolEntry, PoolOrder> pool;
    for (std::size_t rank = 0; rank < n; ++rank) {
        pool.insert(PoolEntry{docs[by_id[rank]].length, static_cast<std::uint32_t>(rank)});
    }
    std::vector<std::uint64_t> consumed(n, 0);

    // Moves `take` tokens of the entry's document into the sample and returns
    // the entry to the pool if anything is left.
    auto place = [&](PackedSample& sample, PoolEntry entry, std::uint64_t take) {
        const std::size_t doc = by_id[entry.rank];
        sample.segments.push_back(Segment{doc, consumed[doc], consumed[doc] + take});
        consumed[doc] += take;
        if (take < entry.remaining) {
            pool.insert(PoolEntry{entry.remaining - take, entry.rank});
        }
    };

    while (!pool.empty()) {
        const PoolEntry longest = *pool.begin();
        pool.erase(pool.begin());

        PackedSample sample;
        sample.capacity = select_bucket(longest.remaining, config);
        std::uint64_t free = sample.capacity;

        // Only the longest document can be split here: it is the first item
        // of an empty bucket and longer than every capacity.
        const std::uint64_t first_take = std::min(longest.remaining, free);
        place(sample, longest, first_take);
        free -= first_take;

        // Descending first-fit sweep. Every document skipped so far is longer
        // than the current free space, so the next one placed is the longest
        // pending document that fits.
        while (free > 0 && !pool.empty()) {
            const auto fit = pool.lower_bound(PoolEntry{free, 0});
            if (fit == pool.end()) {
                break;
            }
            const PoolEntry entry = *fit;
            pool.erase(fit);
            place(sample, entry, entry.remaining);
            free -= entry.remaining;
        }

        if (free > 0) {
            const double free_fraction = static_cast<double>(free) / static_cast<double>(sample.capacity);
            if (free_fraction > config.padding_threshold && !pool.empty()) {
                // The shortest pending document is longer than `free` (it
                // survived the sweep), so this is always a proper prefix.
                const auto shortest = std::prev(pool.end());
                const PoolEntry entry = *shortest;
                pool.erase(shortest);
                place(sample, entry, free);
                free = 0;
            } else {
                sample.pad_count = free;
            }
        }
        packed.samples.push_back(std::move(sample));
    }
    return packed;
}

std::vector<TokenId> materialize_tokens(const PackedSample& sample, const DocumentSet& docs) {
    std::vector<TokenId> out;
    out.reserve(sample.capacity);
    for (const auto& seg : sample.segments) {
        const auto& tokens = docs[seg.doc].tokens;
        if (!tokens) {
            throw ValidationError("document '" + docs[seg.doc].id + "' has no token payload");
        }
        out.insert(out.end(), tokens->begin() + static_cast<std::ptrdiff_t>(seg.start),
                   tokens->begin() + static_cast<std::ptrdiff_t>(seg.end));
    }
    out.insert(out.end(), sample.pad_count, docs.pad_id());
    return out;
}

DocumentSet unpack(const PackedDataset& packed, const DocumentSet& docs) {
    if (packed.source != identity_of(docs)) {
        throw ValidationError("packed dataset was built from a different corpus");
    }
    struct Piece {
        std::uint64_t start;
        std::uint64_t end;
    };
    std::vector<std::vector<Piece>> pieces(docs.size());
    for (std::size_t i = 0; i < packed.samples.size(); ++i) {
        const auto& sample = packed.samples[i];
        std::uint64_t body = 0;
        for (const auto& seg : sample.segments) {
            if (seg.doc >= docs.size() || seg.start >= seg.end || seg.end > docs[seg.doc].length) {
                throw ValidationError("sample " + std::to_string(i) + " has an out-of-range segment");
            }
            pieces[seg.doc].push_back(Piece{seg.start, seg.end});
            body += seg.length();
        }
        if (body + sample.pad_count != sample.capacity) {
            throw ValidationError("sample " + std::to_string(i) + " does not fill its capacity");
        }
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& list = pieces[d];
        std::sort(list.begin(), list.end(), [](const Piece& a, const Piece& b) { return a.start < b.start; });
        std::uint64_t cursor = 0;
        for (const auto& p : list) {
            if (p.start > cursor) {
                throw ValidationError("gap in document '" + docs[d].id + "' at offset " + std::to_string(cursor));
            }
            if (p.start < cursor) {
                throw ValidationError("overlap in document '" + docs[d].id + "' at offset " +
                                      std::to_string(p.start));
            }
            cursor = p.end;
        }
        if (cursor != docs[d].length) {
            throw ValidationError("gap in document '" + docs[d].id + "' at offset " + std::to_string(cursor));
        }
    }

    std::vector<Document> rebuilt(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        rebuilt[d].id = docs[d].id;
        rebuilt[d].length = docs[d].length;
    }
    if (docs.has_tokens()) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            rebuilt[d].tokens.emplace(docs[d].length);
        }
        for (const auto& sample : packed.samples) {
            const auto payload = materialize_tokens(sample, docs);
            std::uint64_t offset = 0;
            for (const auto& seg : sample.segments) {
                std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(offset), seg.length(),
                            rebuilt[seg.doc].tokens->begin() + static_cast<std::ptrdiff_t>(seg.start));
                offset += seg.length();
            }
        }
    }
    return DocumentSet(std::move(rebuilt), docs.eos_id(), docs.pad_id());
}

}  // namespace bucketpack
