#pragma once

#include <cstdint>
#include <string>

#include "bucketpack/packing.hpp"

namespace bucketpack {

// Exact non-negative rational kept in lowest terms.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    Ratio() = default;
    Ratio(std::uint64_t numerator, std::uint64_t denominator);

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;  // "num/den"

    bool operator==(const Ratio&) const = default;
};

// Composition quality of one packing. Ratios are derived from the counters.
struct MetricsReport {
    Ratio r_pad;                       // total_pad / total_len
    Ratio r_tru;                       // truncated_docs / doc_count
    Ratio r_cat;                       // doc_count / sample_count
    std::uint64_t doc_count = 0;       // M
    std::uint64_t sample_count = 0;    // C
    std::uint64_t total_pad = 0;
    std::uint64_t total_len = 0;       // sum of sample capacities
    std::uint64_t truncated_docs = 0;  // documents represented by >= 2 segments

    bool operator==(const MetricsReport&) const = default;
};

// Each throws ValidationError on an empty dataset (or M = 0 for truncation).
Ratio padding_ratio(const PackedDataset& packed);
Ratio truncation_ratio(const PackedDataset& packed);
Ratio concatenation_ratio(const PackedDataset& packed);

MetricsReport evaluate(const PackedDataset& packed);

// Merge reports of disjoint shards (documents and samples not shared).
MetricsReport combine(const MetricsReport& a, const MetricsReport& b);

}  // namespace bucketpack
