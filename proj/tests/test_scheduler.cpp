#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "bucketpack/error.hpp"
#include "bucketpack/scheduler.hpp"

namespace bucketpack {
namespace {

ScheduleConfig config_for(std::uint64_t world, std::uint64_t seed = 0,
                          LeftoverPolicy policy = LeftoverPolicy::Drop) {
    ScheduleConfig c;
    c.world_size = world;
    c.seed = seed;
    c.leftover_policy = policy;
    return c;
}

const SpeedTable kSpeeds{{2048, 2045.0}, {4096, 1814.0}, {8192, 1641.0}, {16384, 1450.0}};

TEST(BatchSizeFor, ReferenceBudget) {
    const ScheduleConfig c;
    EXPECT_EQ(batch_size_for(2048, c), 24u);
    EXPECT_EQ(batch_size_for(4096, c), 12u);
    EXPECT_EQ(batch_size_for(8192, c), 6u);
    EXPECT_EQ(batch_size_for(16384, c), 3u);
    EXPECT_THROW(batch_size_for(5000, c), ValidationError);
    EXPECT_THROW(batch_size_for(65536, c), ValidationError);
}

TEST(ScheduleConfig, Validation) {
    EXPECT_THROW(config_for(0).validate(), ValidationError);
    ScheduleConfig c;
    c.reference_batch = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_EQ(to_string(parse_leftover_policy("pad-batch")), "pad-batch");
    EXPECT_THROW(parse_leftover_policy("keep"), ValidationError);
}

TEST(PlanSteps, FullBatches) {
    const auto plan = plan_steps(std::map<std::uint64_t, std::uint64_t>{{2048, 96}}, config_for(2));
    ASSERT_EQ(plan.steps.size(), 2u);
    for (const auto& step : plan.steps) {
        EXPECT_EQ(step.bucket, 2048u);
        ASSERT_EQ(step.per_rank.size(), 2u);
        EXPECT_EQ(step.per_rank[0].size() + step.per_rank[1].size(), 48u);
    }
    EXPECT_EQ(plan.tokens_per_step, 2048u * 24 * 2);
}

TEST(PlanSteps, DropsRemainder) {
    const auto plan = plan_steps(std::map<std::uint64_t, std::uint64_t>{{2048, 100}}, config_for(2));
    EXPECT_EQ(plan.steps.size(), 2u);
    ASSERT_EQ(plan.buckets.size(), 1u);
    EXPECT_EQ(plan.buckets[0].consumed, 96u);
    EXPECT_EQ(plan.buckets[0].dropped, 4u);
}

TEST(PlanSteps, UndersizedBucketYieldsNoSteps) {
    const auto plan = plan_steps(std::map<std::uint64_t, std::uint64_t>{{2048, 47}, {4096, 24}}, config_for(2));
    ASSERT_EQ(plan.steps.size(), 1u);
    EXPECT_EQ(plan.steps[0].bucket, 4096u);
    EXPECT_EQ(plan.buckets[0].steps, 0u);
    EXPECT_EQ(plan.buckets[0].dropped, 47u);
}

TEST(PlanSteps, SeededOrderIsOneOfTheTwoPermutations) {
    const std::map<std::uint64_t, std::uint64_t> counts{{2048, 48}, {4096, 24}};
    std::set<std::vector<std::uint64_t>> seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const auto plan = plan_steps(counts, config_for(2, seed));
        ASSERT_EQ(plan.steps.size(), 2u);
        std::vector<std::uint64_t> order{plan.steps[0].bucket, plan.steps[1].bucket};
        EXPECT_TRUE(order == (std::vector<std::uint64_t>{2048, 4096}) ||
                    order == (std::vector<std::uint64_t>{4096, 2048}));
        EXPECT_EQ(plan, plan_steps(counts, config_for(2, seed)));
        seen.insert(order);
    }
    EXPECT_EQ(seen.size(), 2u);
}

TEST(PlanSteps, PadBatchDuplicatesEarliestSamples) {
    const std::map<std::uint64_t, std::vector<std::size_t>> buckets{{8192, {10, 11, 12, 13, 14, 15, 16, 17}}};
    const auto plan = plan_steps(buckets, config_for(1, 0, LeftoverPolicy::PadBatch));
    ASSERT_EQ(plan.steps.size(), 2u);
    const auto& padded = plan.steps[0].padded ? plan.steps[0] : plan.steps[1];
    const auto& full = plan.steps[0].padded ? plan.steps[1] : plan.steps[0];
    EXPECT_TRUE(padded.padded);
    EXPECT_FALSE(full.padded);
    EXPECT_EQ(full.per_rank[0], (std::vector<std::size_t>{10, 11, 12, 13, 14, 15}));
    EXPECT_EQ(padded.per_rank[0], (std::vector<std::size_t>{16, 17, 10, 11, 12, 13}));
    EXPECT_EQ(plan.buckets[0].consumed, 8u);
    EXPECT_EQ(plan.buckets[0].dropped, 0u);
    EXPECT_EQ(plan.buckets[0].duplicated, 4u);
}

TEST(PlanSteps, RejectsNonDivisibleBucket) {
    EXPECT_THROW(plan_steps(std::map<std::uint64_t, std::uint64_t>{{5000, 10}}, config_for(1)), ValidationError);
}

TEST(PlanSteps, RandomPlansKeepInvariants) {
    std::mt19937_64 gen(99);
    const std::vector<std::uint64_t> caps{2048, 4096, 8192, 16384};
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::uint64_t, std::uint64_t> counts;
        for (const auto c : caps) {
            if (gen() % 4) {
                counts[c] = gen() % 400;
            }
        }
        const auto cfg = config_for(1 + gen() % 8, gen());
        const auto plan = plan_steps(counts, cfg);
        std::set<std::size_t> used;
        std::map<std::uint64_t, std::uint64_t> consumed;
        for (const auto& step : plan.steps) {
            ASSERT_EQ(step.per_rank.size(), cfg.world_size);
            for (const auto& rank : step.per_rank) {
                EXPECT_EQ(step.bucket * rank.size(), cfg.tokens_per_rank());
                for (const auto idx : rank) {
                    EXPECT_TRUE(used.insert(idx).second);
                }
                consumed[step.bucket] += rank.size();
            }
        }
        for (const auto& b : plan.buckets) {
            EXPECT_EQ(b.consumed + b.dropped, counts[b.capacity]);
            EXPECT_EQ(b.consumed, consumed[b.capacity]);
        }
        EXPECT_EQ(plan, plan_steps(counts, cfg));
    }
}

TEST(PlanSteps, PackedDatasetUsesSamplePositions) {
    PackedDataset packed;
    for (std::uint64_t i = 0; i < 30; ++i) {
        packed.samples.push_back(PackedSample{i % 2 ? 4096u : 2048u, {{i, 0, 1}}, (i % 2 ? 4096u : 2048u) - 1});
    }
    const auto plan = plan_steps(packed, config_for(1));
    for (const auto& step : plan.steps) {
        for (const auto idx : step.per_rank[0]) {
            EXPECT_EQ(packed.samples[idx].capacity, step.bucket);
        }
    }
    EXPECT_EQ(plan.steps.size(), 1u);  // 15 samples of 4096 fill one batch of 12; 15 of 2048 fill none
}

TEST(EstimateThroughput, RelativeSpeedsAgainstReference) {
    const auto report = estimate_throughput({{2048, 0.5}, {8192, 0.5}}, kSpeeds, 8192);
    std::map<std::uint64_t, double> rel;
    for (const auto& b : report.buckets) {
        rel[b.capacity] = b.relative_to_reference;
    }
    EXPECT_NEAR(rel[2048], 0.246, 5e-4);
    EXPECT_NEAR(rel[4096], 0.105, 5e-4);
    EXPECT_NEAR(rel[8192], 0.0, 1e-12);
    EXPECT_NEAR(rel[16384], -0.116, 5e-4);
}

TEST(EstimateThroughput, HarmonicAggregateOverMeasuredShares) {
    const auto shares = normalize_shares({{2048, 0.7461}, {4096, 0.1752}, {8192, 0.0537}, {16384, 0.0249}});
    const auto report = estimate_throughput(shares, kSpeeds, 8192);
    double time = 0.0;
    for (const auto& [cap, share] : shares) {
        time += share / kSpeeds.at(cap);
    }
    EXPECT_NEAR(report.aggregate_speed, 1.0 / time, 1e-9);
    EXPECT_NEAR(report.aggregate_speed, 1956.0, 1.0);
    EXPECT_NEAR(report.speedup, 0.192, 5e-4);
}

TEST(EstimateThroughput, AggregateBetweenExtremes) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::uint64_t, double> raw;
        for (const auto& [cap, speed] : kSpeeds) {
            raw[cap] = u(gen) + 1e-6;
        }
        const auto report = estimate_throughput(normalize_shares(raw), kSpeeds, 8192);
        EXPECT_GE(report.aggregate_speed, 1450.0 - 1e-9);
        EXPECT_LE(report.aggregate_speed, 2045.0 + 1e-9);
    }
}

TEST(EstimateThroughput, Errors) {
    EXPECT_THROW(estimate_throughput({{2048, 0.5}, {4096, 0.4}}, kSpeeds, 8192), ValidationError);
    EXPECT_THROW(estimate_throughput({{2048, 0.5}, {1024, 0.5}}, kSpeeds, 8192), ValidationError);
    EXPECT_THROW(estimate_throughput({{2048, 1.0}}, kSpeeds, 1024), ValidationError);
    EXPECT_THROW(estimate_throughput({{2048, 1.0}}, SpeedTable{{2048, 0.0}}, 2048), ValidationError);
}

TEST(TokenShares, WeightedByCapacity) {
    const auto shares = token_shares({{2048, 2}, {4096, 1}});
    EXPECT_DOUBLE_EQ(shares.at(2048), 0.5);
    EXPECT_DOUBLE_EQ(shares.at(4096), 0.5);
}

}  // namespace
}  // namespace bucketpack
