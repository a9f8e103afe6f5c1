#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bucketpack/corpus.hpp"
#include "bucketpack/error.hpp"

namespace bucketpack {
namespace {

LoadOptions lengths_mode(bool append_eos) {
    LoadOptions o;
    o.format = CorpusFormat::LengthsJsonl;
    o.append_eos = append_eos;
    return o;
}

LoadOptions tokens_mode(bool append_eos) {
    LoadOptions o;
    o.format = CorpusFormat::TokensJsonl;
    o.append_eos = append_eos;
    return o;
}

DocumentSet parse(const std::string& text, const LoadOptions& options) {
    std::istringstream in(text);
    return read_documents(in, options);
}

std::string error_of(const std::string& text, const LoadOptions& options) {
    try {
        parse(text, options);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

const char* kThreeDocs =
    "{\"id\":\"a\",\"len\":5}\n"
    "{\"id\":\"b\",\"len\":10}\n"
    "{\"id\":\"c\",\"len\":3}\n";

TEST(LoadDocuments, LengthsWithoutEos) {
    const auto docs = parse(kThreeDocs, lengths_mode(false));
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(docs.total_tokens(), 18u);
    EXPECT_EQ(docs[1].id, "b");
    EXPECT_FALSE(docs[1].tokens.has_value());
}

TEST(LoadDocuments, LengthsWithEos) {
    const auto docs = parse(kThreeDocs, lengths_mode(true));
    EXPECT_EQ(docs.total_tokens(), 21u);
    EXPECT_EQ(docs[2].length, 4u);
}

TEST(LoadDocuments, ZeroLengthRejected) {
    const auto msg = error_of("{\"id\":\"a\",\"len\":2}\n{\"id\":\"z\",\"len\":0}\n", lengths_mode(true));
    EXPECT_NE(msg.find("zero-length document"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(LoadDocuments, MalformedRecordReportsLine) {
    const auto msg = error_of("{\"id\":\"a\",\"len\":2}\n\n{\"id\":\"b\",\"len\":\n", lengths_mode(false));
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(error_of("{\"len\":2}\n", lengths_mode(false)).find("'id'"), std::string::npos);
    EXPECT_NE(error_of("{\"id\":\"a\"}\n", lengths_mode(false)).find("'len'"), std::string::npos);
    EXPECT_NE(error_of("{\"id\":\"a\",\"len\":-4}\n", lengths_mode(false)).find("non-negative"), std::string::npos);
}

TEST(LoadDocuments, DuplicateId) {
    const auto msg = error_of("{\"id\":\"a\",\"len\":2}\n{\"id\":\"a\",\"len\":3}\n", lengths_mode(false));
    EXPECT_NE(msg.find("duplicate document id"), std::string::npos) << msg;
}

TEST(LoadDocuments, TokenModeAppendsEos) {
    const auto docs = parse("{\"id\":\"x\",\"tokens\":[7,8,9]}\n", tokens_mode(true));
    ASSERT_TRUE(docs.has_tokens());
    EXPECT_EQ(docs[0].length, 4u);
    EXPECT_EQ(*docs[0].tokens, (std::vector<TokenId>{7, 8, 9, kDefaultEosId}));
}

TEST(LoadDocuments, TokenModeRejectsReservedIds) {
    auto options = tokens_mode(true);
    EXPECT_NE(error_of("{\"id\":\"x\",\"tokens\":[7,0,9]}\n", options).find("collides"), std::string::npos);
    EXPECT_NE(error_of("{\"id\":\"x\",\"tokens\":[2]}\n", options).find("collides"), std::string::npos);
    options.validate_tokens = false;
    EXPECT_EQ(parse("{\"id\":\"x\",\"tokens\":[7,0,9]}\n", options).total_tokens(), 4u);
    EXPECT_NE(error_of("{\"id\":\"x\",\"tokens\":[]}\n", tokens_mode(true)).find("zero-length"), std::string::npos);
}

TEST(LoadDocuments, MissingFileIsIoError) {
    EXPECT_THROW(load_documents("/nonexistent/corpus.jsonl", lengths_mode(true)), IoError);
}

TEST(LoadDocuments, AppendEosAddsOnePerDocument) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::ostringstream text;
        const int n = 1 + static_cast<int>(gen() % 50);
        for (int i = 0; i < n; ++i) {
            text << "{\"id\":\"d" << i << "\",\"len\":" << 1 + gen() % 5000 << "}\n";
        }
        const auto plain = parse(text.str(), lengths_mode(false));
        const auto with_eos = parse(text.str(), lengths_mode(true));
        EXPECT_EQ(with_eos.total_tokens(), plain.total_tokens() + plain.size());
        for (std::size_t i = 0; i < plain.size(); ++i) {
            EXPECT_EQ(with_eos[i].length, plain[i].length + 1);
        }
    }
}

TEST(DocumentSet, RejectsSameEosAndPad) {
    EXPECT_THROW(DocumentSet({}, 3, 3), ValidationError);
}

TEST(GenerateSynthetic, DeterministicForSeed) {
    const auto spec = DistributionSpec::default_web(10000, 7);
    EXPECT_EQ(generate_synthetic(spec), generate_synthetic(spec));
    auto other = spec;
    other.seed = 8;
    EXPECT_NE(generate_synthetic(spec), generate_synthetic(other));
}

TEST(GenerateSynthetic, EmptyCorpus) {
    const auto docs = generate_synthetic(DistributionSpec::default_web(0, 7));
    EXPECT_TRUE(docs.empty());
    EXPECT_EQ(docs.total_tokens(), 0u);
}

TEST(GenerateSynthetic, IdsAreZeroPaddedSequence) {
    const auto docs = generate_synthetic(DistributionSpec::default_web(120, 1));
    EXPECT_EQ(docs[0].id, "000");
    EXPECT_EQ(docs[119].id, "119");
    EXPECT_TRUE(std::is_sorted(docs.docs().begin(), docs.docs().end(),
                               [](const Document& a, const Document& b) { return a.id < b.id; }));
}

double median_of(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

TEST(GenerateSynthetic, MedianMatchesIndependentSampler) {
    const auto spec = DistributionSpec::default_web(10000, 7);
    const double median = median_of(generate_synthetic(spec).lengths());

    // Independent sampler: different engine, library lognormal.
    std::minstd_rand engine(12345);
    std::lognormal_distribution<double> dist(std::log(400.0), 1.0);
    std::vector<std::uint64_t> reference(10000);
    for (auto& x : reference) {
        x = static_cast<std::uint64_t>(std::clamp(std::round(dist(engine)), 1.0, 65536.0));
    }
    const double ref_median = median_of(reference);

    EXPECT_GE(median, 300.0);
    EXPECT_LE(median, 530.0);
    EXPECT_GE(ref_median, 300.0);
    EXPECT_LE(ref_median, 530.0);
    // Sample log-median has sd ~ 1.2533 / sqrt(n) = 0.0125; two independent
    // samples differ by at most 3 * sqrt(2) * 0.0125 in log space.
    EXPECT_LT(std::abs(std::log(median) - std::log(ref_median)), 0.054);
}

TEST(GenerateSynthetic, ClampsToBounds) {
    auto spec = DistributionSpec::default_web(5000, 3);
    spec.min_len = 100;
    spec.max_len = 800;
    for (const auto len : generate_synthetic(spec).lengths()) {
        EXPECT_GE(len, 100u);
        EXPECT_LE(len, 800u);
    }
}

TEST(GenerateSynthetic, MixtureUsesEveryComponent) {
    DistributionSpec spec;
    spec.family = LengthFamily::MixtureOfLognormals;
    spec.components = {{std::log(50.0), 0.1, 0.5}, {std::log(5000.0), 0.1, 0.5}};
    spec.count = 4000;
    spec.seed = 5;
    std::size_t short_docs = 0;
    for (const auto len : generate_synthetic(spec).lengths()) {
        short_docs += len < 500 ? 1 : 0;
    }
    // Binomial(4000, 0.5): 5 sigma is ~158.
    EXPECT_NEAR(static_cast<double>(short_docs), 2000.0, 160.0);
}

TEST(GenerateSynthetic, RejectsBadSpecs) {
    auto spec = DistributionSpec::default_web(10, 1);
    spec.components[0].weight = 0.9;
    EXPECT_THROW(generate_synthetic(spec), ValidationError);
    spec = DistributionSpec::default_web(10, 1);
    spec.min_len = 0;
    EXPECT_THROW(generate_synthetic(spec), ValidationError);
    spec = DistributionSpec::default_web(10, 1);
    spec.min_len = 10;
    spec.max_len = 9;
    EXPECT_THROW(generate_synthetic(spec), ValidationError);
}

DocumentSet from_lengths(const std::vector<std::uint64_t>& lengths) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        docs.push_back(Document{"d" + std::to_string(i), std::nullopt, lengths[i]});
    }
    return DocumentSet(std::move(docs));
}

TEST(LengthHistogram, DirectCount) {
    const std::vector<std::uint64_t> edges{0, 4, 16};
    const auto h = length_histogram(from_lengths({5, 10, 3}), edges);
    EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{1, 2}));
    EXPECT_EQ(h.overflow, 0u);
    EXPECT_EQ(h.underflow, 0u);
    EXPECT_DOUBLE_EQ(h.fraction_below[1], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(h.fraction_below[2], 1.0);
}

TEST(LengthHistogram, Overflow) {
    const std::vector<std::uint64_t> edges{0, 4};
    const auto h = length_histogram(from_lengths({5}), edges);
    EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{0}));
    EXPECT_EQ(h.overflow, 1u);
}

TEST(LengthHistogram, RejectsBadEdges) {
    const auto docs = from_lengths({5});
    const std::vector<std::uint64_t> flat{0, 4, 4};
    const std::vector<std::uint64_t> single{4};
    EXPECT_THROW(length_histogram(docs, flat), ValidationError);
    EXPECT_THROW(length_histogram(docs, single), ValidationError);
}

TEST(LengthHistogram, CountsPartitionTheCorpus) {
    const auto docs = generate_synthetic(DistributionSpec::default_web(3000, 21));
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint64_t> edges;
        std::uint64_t e = gen() % 300;
        const int n = 2 + static_cast<int>(gen() % 10);
        for (int i = 0; i < n; ++i) {
            edges.push_back(e);
            e += 1 + gen() % 3000;
        }
        const auto h = length_histogram(docs, edges);
        std::uint64_t total = h.underflow + h.overflow;
        for (const auto c : h.counts) {
            total += c;
        }
        EXPECT_EQ(total, docs.size());
        EXPECT_TRUE(std::is_sorted(h.fraction_below.begin(), h.fraction_below.end()));
    }
}

TEST(LengthHistogram, WebShapedCorpusIsMostlyShort) {
    const auto docs = generate_synthetic(DistributionSpec::default_web(10000, 7));
    const std::vector<std::uint64_t> edges{0, 2048, 65537};
    const auto h = length_histogram(docs, edges);
    EXPECT_GT(h.fraction_below[1], 0.5);
}

}  // namespace
}  // namespace bucketpack
