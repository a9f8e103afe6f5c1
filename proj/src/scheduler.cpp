#include "bucketpack/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "bucketpack/error.hpp"
#include "bucketpack/random.hpp"

namespace bucketpack {

std::string to_string(LeftoverPolicy policy) {
    return policy == LeftoverPolicy::Drop ? "drop" : "pad-batch";
}

LeftoverPolicy parse_leftover_policy(const std::string& name) {
    if (name == "drop") return LeftoverPolicy::Drop;
    if (name == "pad-batch") return LeftoverPolicy::PadBatch;
    throw ValidationError("unknown leftover policy '" + name + "'");
}

void ScheduleConfig::validate() const {
    if (reference_capacity == 0) {
        throw ValidationError("reference capacity must be positive");
    }
    if (reference_batch < 1) {
        throw ValidationError("reference batch must be >= 1");
    }
    if (world_size < 1) {
        throw ValidationError("world size must be >= 1");
    }
}

std::uint64_t batch_size_for(std::uint64_t capacity, const ScheduleConfig& config) {
    config.validate();
    const std::uint64_t budget = config.tokens_per_rank();
    if (capacity == 0 || budget % capacity != 0) {
        throw ValidationError("token budget " + std::to_string(budget) + " is not divisible by bucket capacity " +
                              std::to_string(capacity));
    }
    return budget / capacity;
}

SchedulePlan plan_steps(const std::map<std::uint64_t, std::vector<std::size_t>>& bucket_samples,
                        const ScheduleConfig& config) {
    config.validate();
    SchedulePlan plan;
    plan.config = config;
    plan.tokens_per_step = config.tokens_per_rank() * config.world_size;

    for (const auto& [capacity, samples] : bucket_samples) {
        const std::uint64_t batch = batch_size_for(capacity, config);
        const std::uint64_t global = batch * config.world_size;

        BucketSummary summary;
        summary.capacity = capacity;
        summary.batch_per_rank = batch;
        summary.samples = samples.size();

        auto make_step = [&](std::vector<std::size_t> flat, bool padded) {
            ScheduledStep step;
            step.bucket = capacity;
            step.padded = padded;
            step.per_rank.resize(config.world_size);
            for (std::uint64_t r = 0; r < config.world_size; ++r) {
                step.per_rank[r].assign(flat.begin() + static_cast<std::ptrdiff_t>(r * batch),
                                        flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * batch));
            }
            plan.steps.push_back(std::move(step));
            ++summary.steps;
        };

        const std::uint64_t full = samples.size() / global;
        for (std::uint64_t s = 0; s < full; ++s) {
            const auto first = samples.begin() + static_cast<std::ptrdiff_t>(s * global);
            make_step(std::vector<std::size_t>(first, first + static_cast<std::ptrdiff_t>(global)), false);
        }
        summary.consumed = full * global;

        const std::uint64_t leftover = samples.size() - summary.consumed;
        if (leftover > 0) {
            if (config.leftover_policy == LeftoverPolicy::Drop) {
                summary.dropped = leftover;
            } else {
                std::vector<std::size_t> flat(samples.begin() + static_cast<std::ptrdiff_t>(summary.consumed),
                                              samples.end());
                // Top up from the bucket's earliest samples, cycling if the
                // bucket is smaller than one global batch.
                for (std::uint64_t k = 0; flat.size() < global; ++k) {
                    flat.push_back(samples[k % samples.size()]);
                }
                summary.duplicated = global - leftover;
                summary.consumed += leftover;
                make_step(std::move(flat), true);
            }
        }
        plan.buckets.push_back(summary);
    }

    Rng rng(config.seed);
    shuffle(plan.steps, rng);
    return plan;
}

SchedulePlan plan_steps(const std::map<std::uint64_t, std::uint64_t>& per_bucket_counts,
                        const ScheduleConfig& config) {
    std::map<std::uint64_t, std::vector<std::size_t>> bucket_samples;
    std::size_t next = 0;
    for (const auto& [capacity, count] : per_bucket_counts) {
        auto& list = bucket_samples[capacity];
        list.resize(count);
        for (auto& idx : list) {
            idx = next++;
        }
    }
    return plan_steps(bucket_samples, config);
}

SchedulePlan plan_steps(const PackedDataset& packed, const ScheduleConfig& config) {
    std::map<std::uint64_t, std::vector<std::size_t>> bucket_samples;
    for (std::size_t i = 0; i < packed.samples.size(); ++i) {
        bucket_samples[packed.samples[i].capacity].push_back(i);
    }
    return plan_steps(bucket_samples, config);
}

ThroughputReport estimate_throughput(const std::map<std::uint64_t, double>& token_shares, const SpeedTable& speeds,
                                     std::uint64_t reference) {
    for (const auto& [capacity, speed] : speeds) {
        if (!(speed > 0.0) || !std::isfinite(speed)) {
            throw ValidationError("speed for bucket " + std::to_string(capacity) + " must be positive");
        }
    }
    const auto ref_it = speeds.find(reference);
    if (ref_it == speeds.end()) {
        throw ValidationError("missing speed for reference bucket " + std::to_string(reference));
    }
    double share_sum = 0.0;
    double seconds_per_token = 0.0;
    for (const auto& [capacity, share] : token_shares) {
        if (!(share >= 0.0)) {
            throw ValidationError("token shares must be non-negative");
        }
        const auto it = speeds.find(capacity);
        if (it == speeds.end()) {
            throw ValidationError("missing speed for bucket " + std::to_string(capacity));
        }
        share_sum += share;
        seconds_per_token += share / it->second;
    }
    if (std::abs(share_sum - 1.0) > 1e-9) {
        throw ValidationError("token shares must sum to 1");
    }

    ThroughputReport report;
    report.reference = reference;
    report.reference_speed = ref_it->second;
    report.aggregate_speed = 1.0 / seconds_per_token;
    report.speedup = report.aggregate_speed / report.reference_speed - 1.0;
    for (const auto& [capacity, speed] : speeds) {
        BucketThroughput b;
        b.capacity = capacity;
        const auto share_it = token_shares.find(capacity);
        b.share = share_it == token_shares.end() ? 0.0 : share_it->second;
        b.speed = speed;
        b.relative_to_reference = speed / report.reference_speed - 1.0;
        report.buckets.push_back(b);
    }
    return report;
}

std::map<std::uint64_t, double> normalize_shares(const std::map<std::uint64_t, double>& shares) {
    double total = 0.0;
    for (const auto& [capacity, share] : shares) {
        if (!(share >= 0.0)) {
            throw ValidationError("token shares must be non-negative");
        }
        total += share;
    }
    if (!(total > 0.0)) {
        throw ValidationError("token shares must not all be zero");
    }
    std::map<std::uint64_t, double> out;
    for (const auto& [capacity, share] : shares) {
        out[capacity] = share / total;
    }
    return out;
}

std::map<std::uint64_t, double> token_shares(const std::map<std::uint64_t, std::uint64_t>& per_bucket_counts) {
    std::map<std::uint64_t, std::uint64_t> tokens;
    std::uint64_t total = 0;
    for (const auto& [capacity, count] : per_bucket_counts) {
        tokens[capacity] = capacity * count;
        total += capacity * count;
    }
    if (total == 0) {
        throw ValidationError("no samples to compute token shares from");
    }
    std::map<std::uint64_t, double> out;
    for (const auto& [capacity, t] : tokens) {
        out[capacity] = static_cast<double>(t) / static_cast<double>(total);
    }
    return out;
}

}  // namespace bucketpack
