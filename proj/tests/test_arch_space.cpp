#include <gtest/gtest.h>

#include <map>
#include <set>

#include "cnas/arch_space.hpp"
#include "cnas/errors.hpp"

using namespace cnas;

namespace {

// Independent power-sum oracle for the block count formulas.
BigInt block_count_oracle(const SearchSpaceDef& s) {
    const BigInt k = s.kernel_mode.is_fixed() ? BigInt(1) : BigInt(s.levels.kernels.size());
    const BigInt w = s.coupling == Coupling::Compound ? BigInt(1) : BigInt(s.levels.widths.size());
    BigInt sum = 0;
    for (int d : s.levels.depths) {
        BigInt term = 1;
        for (int i = 0; i < d; ++i) term *= w * k;
        sum += term;
    }
    return sum;
}

BigInt pow_big(BigInt b, int e) {
    BigInt r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

SearchSpaceDef singleton_space() {
    SearchSpaceDef s;
    s.blocks = 1;
    s.levels = {{5}, {2.0}, {3}};
    s.coupling = Coupling::Compound;
    s.kernel_mode = KernelMode::fixed(3);
    s.resolutions = {16};
    return s;
}

}  // namespace

TEST(CoupleLevel, PairsByIndex) {
    const DimensionLevels l{{2, 3, 4}, {3.0, 4.0, 6.0}, {3, 5, 7}};
    EXPECT_EQ(couple_level(l, 2), 3.0);
    EXPECT_EQ(couple_level(l, 3), 4.0);
    EXPECT_EQ(couple_level(l, 4), 6.0);
    EXPECT_EQ(couple_level(DimensionLevels{{5}, {2.0}, {3}}, 5), 2.0);
    EXPECT_THROW(couple_level(l, 5), UnknownLevel);
}

TEST(Cardinality, Presets) {
    EXPECT_EQ(cardinality(compound_fixed_space()), BigInt(243));
    EXPECT_EQ(cardinality(compound_elastic_space()), BigInt("21924480357"));
    EXPECT_EQ(cardinality(compound_elastic_space()), pow_big(9 + 27 + 81, 5));
    // 7371 = 9^2 + 9^3 + 9^4
    EXPECT_EQ(cardinality(ofa_space()), pow_big(7371, 5));
    EXPECT_EQ(cardinality(ofa_space()).str(), "21758655492572485851");
    EXPECT_EQ(cardinality(singleton_space()), BigInt(1));
}

TEST(Cardinality, ResolutionDoesNotCount) {
    SearchSpaceDef a = compound_fixed_space();
    SearchSpaceDef b = a;
    b.resolutions = {128, 160, 192, 224};
    EXPECT_EQ(cardinality(a), cardinality(b));
}

TEST(Cardinality, MatchesOracleAndEnumerationOnRandomSpaces) {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        SearchSpaceDef s;
        s.blocks = 1 + static_cast<int>(rng() % 3);
        const int nd = 1 + static_cast<int>(rng() % 3);
        int d = 1;
        double w = 1.0;
        for (int i = 0; i < nd; ++i) {
            d += 1 + static_cast<int>(rng() % 2);
            w += 1.0 + static_cast<double>(rng() % 2);
            s.levels.depths.push_back(d - 1);
            s.levels.widths.push_back(w);
        }
        s.levels.kernels = {3, 5};
        s.coupling = rng() % 2 ? Coupling::Compound : Coupling::Independent;
        s.kernel_mode = rng() % 2 ? KernelMode::fixed(3) : KernelMode::elastic();
        s.resolutions = {8};
        const BigInt expect = pow_big(block_count_oracle(s), s.blocks);
        ASSERT_EQ(cardinality(s), expect) << trial;
        if (s.coupling == Coupling::Compound && s.kernel_mode.is_fixed())
            EXPECT_EQ(expect, pow_big(nd, s.blocks));
        if (expect <= 20000) {
            const auto all = enumerate(s, 100000);
            std::set<std::string> distinct;
            for (const auto& a : all) {
                EXPECT_TRUE(validate(s, a));
                distinct.insert(to_json(a).dump());
            }
            EXPECT_EQ(BigInt(all.size()), expect);
            EXPECT_EQ(distinct.size(), all.size());
        }
    }
}

TEST(Enumerate, FixedSpaceAndLimits) {
    const auto s = compound_fixed_space();
    const auto all = enumerate(s, 10000);
    ASSERT_EQ(all.size(), 243u);
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_TRUE(compare_archs(s, all[i - 1], all[i]) < 0);
    for (const auto& a : all) EXPECT_EQ(a.resolution, s.max_resolution());
    EXPECT_EQ(enumerate(singleton_space(), 1).size(), 1u);
    EXPECT_THROW(enumerate(ofa_space(), 1000000), SpaceTooLarge);
    EXPECT_THROW(enumerate(s, 242), SpaceTooLarge);
}

TEST(Enumerate, Block0Slowest) {
    const auto s = compound_fixed_space();
    const auto all = enumerate(s, 10000);
    EXPECT_EQ(all.front().blocks, min_arch(s).blocks);
    EXPECT_EQ(all.back(), max_arch(s));
    EXPECT_EQ(all[1].blocks[0].depth, 2);
    EXPECT_EQ(all[1].blocks[4].depth, 3);
    EXPECT_EQ(all[81].blocks[0].depth, 3);
}

TEST(Validate, CouplingRules) {
    auto c = compound_fixed_space();
    auto i = independent_relaxation(c);
    ArchSpec a = min_arch(c);
    EXPECT_TRUE(validate(c, a));
    a.blocks[0].widths = {6.0, 6.0};
    EXPECT_FALSE(validate(c, a));
    EXPECT_TRUE(validate(i, a));
    a.blocks[0].widths = {3.0, 6.0};
    EXPECT_FALSE(validate(c, a));
    EXPECT_TRUE(validate(i, a));
    a.blocks[0].kernels = {3, 5};
    EXPECT_FALSE(validate(i, a));  // fixed kernel 5
    ArchSpec bad = min_arch(c);
    bad.resolution = 7;
    EXPECT_FALSE(validate(c, bad));
    bad = min_arch(c);
    bad.blocks.pop_back();
    EXPECT_FALSE(validate(c, bad));
}

TEST(Validate, CompoundIsStrictSubsetOfIndependent) {
    const auto c = compound_fixed_space();
    const auto i = independent_relaxation(c);
    for (const auto& a : enumerate(c, 1000)) EXPECT_TRUE(validate(i, a));
    Rng rng(3);
    int outside = 0;
    for (int t = 0; t < 200; ++t)
        if (!validate(c, sample_uniform(i, rng))) ++outside;
    EXPECT_GT(outside, 0);
}

TEST(SampleUniform, ValidAndDeterministic) {
    for (const auto& s : {ofa_space(), compound_fixed_space(), compound_elastic_space()}) {
        Rng rng(5);
        for (int t = 0; t < 200; ++t) EXPECT_TRUE(validate(s, sample_uniform(s, rng)));
        EXPECT_EQ(sample_uniform(s, 42), sample_uniform(s, 42));
        EXPECT_TRUE(validate(s, sample_uniform(s, 1, SamplingMode::DepthStratified)));
    }
    const auto one = singleton_space();
    EXPECT_EQ(sample_uniform(one, 9), max_arch(one));
}

TEST(SampleUniform, LevelFrequenciesAreUniform) {
    const auto s = compound_fixed_space();
    Rng rng(2024);
    constexpr int n = 100000;
    std::vector<std::map<int, int>> counts(5);
    for (int t = 0; t < n; ++t) {
        const auto a = sample_uniform(s, rng);
        for (int b = 0; b < 5; ++b) ++counts[b][a.blocks[b].depth];
    }
    for (const auto& c : counts) {
        double chi2 = 0.0;
        for (int d : {2, 3, 4}) {
            const double f = c.at(d) / static_cast<double>(n);
            EXPECT_NEAR(f, 1.0 / 3.0, 0.01);
            const double e = n / 3.0;
            chi2 += (c.at(d) - e) * (c.at(d) - e) / e;
        }
        EXPECT_LT(chi2, 13.8);  // chi-square, 2 dof, p = 0.001
    }
}

TEST(SampleUniform, PerConfigurationWeightsBlockConfigs) {
    // Independent elastic, one block: depth d has 9^d configurations.
    SearchSpaceDef s = ofa_space();
    s.blocks = 1;
    Rng rng(8);
    std::map<int, int> depth;
    constexpr int n = 60000;
    for (int t = 0; t < n; ++t) ++depth[sample_uniform(s, rng).blocks[0].depth];
    EXPECT_NEAR(depth[4] / static_cast<double>(n), 6561.0 / 7371.0, 0.01);
    EXPECT_NEAR(depth[2] / static_cast<double>(n), 81.0 / 7371.0, 0.003);
    std::map<int, int> strat;
    for (int t = 0; t < n; ++t) ++strat[sample_uniform(s, rng, SamplingMode::DepthStratified).blocks[0].depth];
    EXPECT_NEAR(strat[2] / static_cast<double>(n), 1.0 / 3.0, 0.01);
}

TEST(Encoding, LengthsAndRoundTrip) {
    auto s = compound_fixed_space();
    s.resolutions = {128, 160, 192, 224};
    EXPECT_EQ(encoding_length(s), 19u);
    EXPECT_EQ(encoding_length(ofa_space()), static_cast<std::size_t>(5 * (3 + 4 * 3 + 4 * 3) + ofa_space().resolutions.size()));
    for (const auto& a : enumerate(compound_fixed_space(), 1000))
        EXPECT_EQ(decode(compound_fixed_space(), encode(compound_fixed_space(), a)), a);
    for (const auto& sp : {ofa_space(), compound_elastic_space()}) {
        Rng rng(1);
        for (int t = 0; t < 100; ++t) {
            const auto a = sample_uniform(sp, rng);
            const auto e = encode(sp, a);
            EXPECT_EQ(e.bits.size(), encoding_length(sp));
            EXPECT_EQ(decode(sp, e), a);
            EXPECT_EQ(ArchEncoding::from_string(e.to_string()), e);
        }
    }
}

TEST(Encoding, MaxArchHasLastIndexHot) {
    auto s = compound_fixed_space();
    s.resolutions = {128, 160, 192, 224};
    const auto e = encode(s, max_arch(s)).to_string();
    EXPECT_EQ(e, "001001001001001" "0001");
    EXPECT_EQ(encode(s, max_arch(s)).to_csv_row().substr(0, 6), "0,0,1,");
}

TEST(Encoding, MalformedIsRejected) {
    const auto s = compound_fixed_space();
    auto e = encode(s, min_arch(s));
    e.bits[0] = 1;
    e.bits[1] = 1;
    EXPECT_THROW(decode(s, e), MalformedEncoding);
    e.bits[1] = e.bits[0] = 0;
    EXPECT_THROW(decode(s, e), MalformedEncoding);
    e.bits.pop_back();
    EXPECT_THROW(decode(s, e), MalformedEncoding);
}

TEST(Genetics, MutateAndCrossoverStayValid) {
    for (const auto& s : {compound_fixed_space(), compound_elastic_space(), ofa_space()}) {
        Rng rng(77);
        const auto a = sample_uniform(s, rng);
        const auto b = sample_uniform(s, rng);
        EXPECT_EQ(mutate(s, a, 0.0, rng), a);
        EXPECT_EQ(crossover(s, a, a, rng), a);
        for (int t = 0; t < 1000; ++t) {
            EXPECT_TRUE(validate(s, mutate(s, a, 0.5, rng)));
            const auto c = crossover(s, a, b, rng);
            ASSERT_TRUE(validate(s, c));
            for (std::size_t i = 0; i < c.blocks.size(); ++i)
                EXPECT_TRUE(c.blocks[i] == a.blocks[i] || c.blocks[i] == b.blocks[i]);
        }
    }
}

TEST(Genetics, Deterministic) {
    const auto s = compound_elastic_space();
    Rng r1(4), r2(4);
    const auto a = sample_uniform(s, 1), b = sample_uniform(s, 2);
    for (int t = 0; t < 50; ++t) {
        EXPECT_EQ(mutate(s, a, 0.3, r1), mutate(s, a, 0.3, r2));
        EXPECT_EQ(crossover(s, a, b, r1), crossover(s, a, b, r2));
    }
}

TEST(Extremes, MaxMinMedian) {
    const auto ofa = ofa_space();
    for (const auto& b : max_arch(ofa).blocks) {
        EXPECT_EQ(b.depth, 4);
        for (double w : b.widths) EXPECT_EQ(w, 6.0);
        for (int k : b.kernels) EXPECT_EQ(k, 7);
    }
    for (const auto& b : min_arch(compound_fixed_space()).blocks) {
        EXPECT_EQ(b.depth, 2);
        EXPECT_EQ(b.widths, (std::vector<double>{3.0, 3.0}));
        EXPECT_EQ(b.kernels, (std::vector<int>{5, 5}));
    }
    EXPECT_EQ(max_arch(singleton_space()), min_arch(singleton_space()));
    const auto med = median_arch(compound_fixed_space());
    EXPECT_TRUE(validate(compound_fixed_space(), med));
    EXPECT_EQ(med.blocks[0].depth, 3);
}

TEST(SpaceCheck, RejectsBrokenInvariants) {
    auto s = compound_fixed_space();
    s.levels.widths = {3.0, 4.0};
    EXPECT_THROW(s.check(), InvalidSpace);
    s = ofa_space();
    s.levels.kernels = {3, 4};
    EXPECT_THROW(s.check(), InvalidSpace);
    s = ofa_space();
    s.levels.depths = {3, 2, 4};
    EXPECT_THROW(s.check(), InvalidSpace);
    s = compound_fixed_space();
    s.kernel_mode = KernelMode::fixed(9);
    EXPECT_THROW(s.check(), InvalidSpace);
    s = compound_fixed_space();
    s.resolutions.clear();
    EXPECT_THROW(s.check(), InvalidSpace);
    s = compound_fixed_space();
    s.blocks = 0;
    EXPECT_THROW(s.check(), InvalidSpace);
}

TEST(Json, ArchAndSpaceRoundTrip) {
    const auto s = compound_elastic_space();
    const auto a = sample_uniform(s, 3);
    const auto j = to_json(a);
    EXPECT_TRUE(j.contains("blocks"));
    EXPECT_TRUE(j.contains("r"));
    EXPECT_TRUE(j["blocks"][0].contains("d"));
    EXPECT_EQ(arch_from_json(j), a);
    for (const auto& sp : {ofa_space(), compound_fixed_space(), space_preset("toy-independent")})
        EXPECT_EQ(space_from_json(to_json(sp)), sp);
    EXPECT_THROW(space_preset("nope"), ConfigError);
}
