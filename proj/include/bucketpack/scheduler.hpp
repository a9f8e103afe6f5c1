#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bucketpack/packing.hpp"

namespace bucketpack {

enum class LeftoverPolicy { Drop, PadBatch };

std::string to_string(LeftoverPolicy policy);
LeftoverPolicy parse_leftover_policy(const std::string& name);

// Constant global token budget: reference_capacity * reference_batch tokens per
// rank per step, on world_size ranks.
struct ScheduleConfig {
    std::uint64_t reference_capacity = 2048;
    std::uint64_t reference_batch = 24;
    std::uint64_t world_size = 1;
    std::uint64_t seed = 0;
    LeftoverPolicy leftover_policy = LeftoverPolicy::Drop;

    void validate() const;
    std::uint64_t tokens_per_rank() const { return reference_capacity * reference_batch; }
};

struct ScheduledStep {
    std::uint64_t bucket = 0;
    std::vector<std::vector<std::size_t>> per_rank;  // sample indices
    bool padded = false;                             // holds duplicated samples

    bool operator==(const ScheduledStep&) const = default;
};

struct BucketSummary {
    std::uint64_t capacity = 0;
    std::uint64_t batch_per_rank = 0;
    std::uint64_t samples = 0;
    std::uint64_t steps = 0;
    std::uint64_t consumed = 0;
    std::uint64_t dropped = 0;
    std::uint64_t duplicated = 0;

    bool operator==(const BucketSummary&) const = default;
};

struct SchedulePlan {
    ScheduleConfig config;
    std::vector<ScheduledStep> steps;
    std::vector<BucketSummary> buckets;  // ascending capacity
    std::uint64_t tokens_per_step = 0;

    bool operator==(const SchedulePlan& other) const {
        return steps == other.steps && buckets == other.buckets && tokens_per_step == other.tokens_per_step;
    }
};

// reference_capacity * reference_batch / capacity. Throws ValidationError when
// the division is not exact.
std::uint64_t batch_size_for(std::uint64_t capacity, const ScheduleConfig& config);

// Every step draws all ranks' batches from one bucket. Full global batches
// per bucket are interleaved by a seeded shuffle; within a bucket, samples are
// consumed in the listed order.
SchedulePlan plan_steps(const std::map<std::uint64_t, std::vector<std::size_t>>& bucket_samples,
                        const ScheduleConfig& config);

// Counts-only form: bucket samples get consecutive indices in ascending
// capacity order.
SchedulePlan plan_steps(const std::map<std::uint64_t, std::uint64_t>& per_bucket_counts,
                        const ScheduleConfig& config);

// Uses each sample's position in the packed dataset as its index.
SchedulePlan plan_steps(const PackedDataset& packed, const ScheduleConfig& config);

// capacity -> tokens/second. Measured elsewhere.
using SpeedTable = std::map<std::uint64_t, double>;

struct BucketThroughput {
    std::uint64_t capacity = 0;
    double share = 0.0;
    double speed = 0.0;
    double relative_to_reference = 0.0;  // speed / reference_speed - 1
};

struct ThroughputReport {
    std::uint64_t reference = 0;
    double reference_speed = 0.0;
    double aggregate_speed = 0.0;        // 1 / sum(share / speed)
    double speedup = 0.0;                // aggregate_speed / reference_speed - 1
    std::vector<BucketThroughput> buckets;  // every capacity in the speed table
};

// Token shares must sum to 1 within 1e-9.
ThroughputReport estimate_throughput(const std::map<std::uint64_t, double>& token_shares,
                                     const SpeedTable& speeds, std::uint64_t reference);

// Rescale non-negative shares to sum to exactly 1 (e.g. rounded percentages).
std::map<std::uint64_t, double> normalize_shares(const std::map<std::uint64_t, double>& shares);

// Fraction of processed tokens (capacity * samples) per bucket.
std::map<std::uint64_t, double> token_shares(const std::map<std::uint64_t, std::uint64_t>& per_bucket_counts);

}  // namespace bucketpack
