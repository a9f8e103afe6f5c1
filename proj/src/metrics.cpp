#include "bucketpack/metrics.hpp"

#include <numeric>
#include <vector>

#include "bucketpack/error.hpp"

namespace bucketpack {

Ratio::Ratio(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) {
        throw ValidationError("ratio with zero denominator");
    }
    const std::uint64_t g = std::gcd(numerator, denominator);
    num = numerator / g;
    den = denominator / g;
}

std::string Ratio::str() const {
    return std::to_string(num) + "/" + std::to_string(den);
}

namespace {

std::uint64_t count_truncated(const PackedDataset& packed) {
    std::vector<std::uint32_t> pieces(packed.source.doc_count, 0);
    std::uint64_t truncated = 0;
    for (const auto& sample : packed.samples) {
        for (const auto& seg : sample.segments) {
            if (seg.doc >= pieces.size()) {
                throw ValidationError("segment references a document outside the source corpus");
            }
            // counted once, on the second piece
            if (++pieces[seg.doc] == 2) {
                ++truncated;
            }
        }
    }
    return truncated;
}

void require_samples(const PackedDataset& packed) {
    if (packed.samples.empty()) {
        throw ValidationError("metrics need a non-empty packed dataset");
    }
}

}  // namespace

Ratio padding_ratio(const PackedDataset& packed) {
    require_samples(packed);
    std::uint64_t pad = 0;
    std::uint64_t len = 0;
    for (const auto& s : packed.samples) {
        pad += s.pad_count;
        len += s.capacity;
    }
    return Ratio(pad, len);
}

Ratio truncation_ratio(const PackedDataset& packed) {
    if (packed.source.doc_count == 0) {
        throw ValidationError("truncation ratio needs at least one source document");
    }
    return Ratio(count_truncated(packed), packed.source.doc_count);
}

Ratio concatenation_ratio(const PackedDataset& packed) {
    require_samples(packed);
    return Ratio(packed.source.doc_count, packed.samples.size());
}

MetricsReport evaluate(const PackedDataset& packed) {
    require_samples(packed);
    if (packed.source.doc_count == 0) {
        throw ValidationError("truncation ratio needs at least one source document");
    }
    MetricsReport r;
    r.doc_count = packed.source.doc_count;
    r.sample_count = packed.samples.size();
    for (const auto& s : packed.samples) {
        r.total_pad += s.pad_count;
        r.total_len += s.capacity;
    }
    r.truncated_docs = count_truncated(packed);
    r.r_pad = Ratio(r.total_pad, r.total_len);
    r.r_tru = Ratio(r.truncated_docs, r.doc_count);
    r.r_cat = Ratio(r.doc_count, r.sample_count);
    return r;
}

MetricsReport combine(const MetricsReport& a, const MetricsReport& b) {
    MetricsReport r;
    r.doc_count = a.doc_count + b.doc_count;
    r.sample_count = a.sample_count + b.sample_count;
    r.total_pad = a.total_pad + b.total_pad;
    r.total_len = a.total_len + b.total_len;
    r.truncated_docs = a.truncated_docs + b.truncated_docs;
    r.r_pad = Ratio(r.total_pad, r.total_len);
    r.r_tru = Ratio(r.truncated_docs, r.doc_count);
    r.r_cat = Ratio(r.doc_count, r.sample_count);
    return r;
}

}  // namespace bucketpack
