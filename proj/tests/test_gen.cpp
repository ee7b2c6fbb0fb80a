#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <map>

#include "provq/gen.hpp"

using namespace provq;

namespace {

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected)
{
    double stat = 0;
    for (std::size_t i = 0; i < observed.size(); ++i)
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return 1.0 - boost::math::cdf(dist, stat);
}

double row_entropy(const std::vector<double>& p)
{
    double h = 0;
    for (auto x : p)
        if (x > 0)
            h -= x * std::log(x);
    return h;
}

} // namespace

TEST(SynPG, ActivityAndAgentCounts)
{
    SynPGConfig c;
    c.n = 1000;
    const auto g = synpg(c);
    EXPECT_EQ(g.count(VertexType::Activity), 250u);
    EXPECT_EQ(g.count(VertexType::Agent), 6u);
}

TEST(SynPG, Deterministic)
{
    SynPGConfig c;
    c.n = 500;
    c.seed = 99;
    EXPECT_EQ(save(synpg(c)), save(synpg(c)));
    auto d = c;
    d.seed = 100;
    EXPECT_NE(save(synpg(c)), save(synpg(d)));
}

TEST(SynPG, SizeNearTargetAndValid)
{
    for (std::size_t n : {1000u, 5000u})
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            SynPGConfig c;
            c.n = n;
            c.seed = seed;
            const auto g = synpg(c);
            EXPECT_NEAR(static_cast<double>(g.num_vertices()), static_cast<double>(n), 0.1 * n)
                << n << " seed " << seed;
            EXPECT_TRUE(validate(g).empty());
            EXPECT_TRUE(g.temporally_ordered());
            for (const auto& e : g.edges())
                if (e.type == EdgeType::Used) {
                    EXPECT_LT(g.seq(e.dst), g.seq(e.src));
                }
        }
}

TEST(SynPG, ActivityWiring)
{
    SynPGConfig c;
    c.n = 2000;
    const auto g = synpg(c);
    for (auto a : g.vertices_of(VertexType::Activity)) {
        EXPECT_EQ(g.out(a, EdgeType::WasAssociatedWith).size(), 1u);
        EXPECT_GE(g.out(a, EdgeType::Used).size(), 1u);
        EXPECT_GE(g.in(a, EdgeType::WasGeneratedBy).size(), 1u);
    }
    std::size_t derived = 0;
    for (const auto& e : g.edges())
        derived += e.type == EdgeType::WasDerivedFrom;
    EXPECT_GT(derived, 0u);
}

TEST(SynPG, RoundTrip)
{
    SynPGConfig c;
    c.n = 100;
    c.seed = 7;
    const auto g = synpg(c);
    EXPECT_EQ(load(save(g)), g);
}

TEST(SynPG, RejectsBadConfig)
{
    SynPGConfig c;
    c.n = 5;
    EXPECT_THROW(synpg(c), DataError);
    c = {};
    c.s_e = 1.0;
    EXPECT_THROW(synpg(c), DataError);
    c = {};
    c.p_ver = 1.5;
    EXPECT_THROW(synpg(c), DataError);
    c = {};
    c.lambda_i = -1;
    EXPECT_THROW(synpg(c), DataError);
}

TEST(Samplers, RecencyMassOfNewest)
{
    // oracle: direct normalization over three ranks
    const double oracle = 1.0 / (1.0 + std::pow(2.0, -1.5) + std::pow(3.0, -1.5));
    EXPECT_NEAR(oracle, 0.647, 0.0005);
    ZipfTable z(1.5);
    EXPECT_NEAR(z.pmf(1, 3), 0.647, 0.0005);
    StreamRng r(3, Stream::Recency);
    std::size_t hits = 0;
    const std::size_t draws = 1000000;
    for (std::size_t i = 0; i < draws; ++i)
        hits += z.sample(r, 3) == 1;
    EXPECT_NEAR(static_cast<double>(hits) / draws, 0.647, 0.01);
}

TEST(Samplers, ZipfChiSquare)
{
    ZipfTable z(1.5);
    StreamRng r(5, Stream::Recency);
    const std::size_t n = 20, draws = 1000000;
    std::vector<double> obs(n, 0), exp(n, 0);
    for (std::size_t i = 0; i < draws; ++i)
        obs[z.sample(r, n) - 1] += 1;
    for (std::size_t k = 1; k <= n; ++k)
        exp[k - 1] = z.pmf(k, n) * draws;
    EXPECT_GT(chi_square_p(obs, exp), 0.01);
}

TEST(Samplers, PoissonChiSquare)
{
    StreamRng r(6, Stream::Sizes);
    const double lambda = 2.0;
    const std::size_t draws = 1000000, bins = 10; // last bin collects the tail
    std::vector<double> obs(bins, 0), exp(bins, 0);
    for (std::size_t i = 0; i < draws; ++i)
        obs[std::min<std::size_t>(sample_poisson(r, lambda), bins - 1)] += 1;
    double p = std::exp(-lambda), cum = 0;
    for (std::size_t k = 0; k + 1 < bins; ++k) {
        exp[k] = p * draws;
        cum += p;
        p *= lambda / static_cast<double>(k + 1);
    }
    exp[bins - 1] = (1.0 - cum) * draws;
    EXPECT_GT(chi_square_p(obs, exp), 0.01);
}

TEST(Samplers, GammaMean)
{
    for (double shape : {0.1, 0.5, 1.0, 3.0}) {
        StreamRng r(8, Stream::Dirichlet);
        double sum = 0;
        const int draws = 200000;
        for (int i = 0; i < draws; ++i)
            sum += std::exp(sample_log_gamma(r, shape));
        EXPECT_NEAR(sum / draws, shape, 0.03 * std::max(1.0, shape)) << shape;
    }
}

TEST(Samplers, StreamsAreIndependentOfEachOther)
{
    StreamRng a(1, Stream::Sizes), b(1, Stream::Sizes), c(1, Stream::Recency);
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
}

TEST(SynSG, Defaults)
{
    const auto segs = synsg(SynSGConfig{});
    ASSERT_EQ(segs.size(), 10u);
    for (const auto& s : segs) {
        EXPECT_EQ(s.count(VertexType::Activity), 20u);
        EXPECT_EQ(s.count(VertexType::Agent), 0u);
        EXPECT_TRUE(validate(s).empty());
        for (auto e : s.vertices_of(VertexType::Entity))
            EXPECT_TRUE(s.vertex(e).props.empty());
    }
}

TEST(SynSG, SingleStateChain)
{
    SynSGConfig c;
    c.k = 1;
    for (const auto& s : synsg(c))
        for (auto a : s.vertices_of(VertexType::Activity))
            EXPECT_EQ(std::get<std::string>(s.vertex(a).props.at("command")), "t0");
}

TEST(SynSG, ConcentrationControlsRowEntropy)
{
    auto mean_entropy = [](double alpha) {
        double h = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            StreamRng r(seed, Stream::Dirichlet);
            for (const auto& row : transition_matrix(r, alpha, 5))
                h += row_entropy(row);
        }
        return h / 500.0;
    };
    EXPECT_GT(mean_entropy(100.0), mean_entropy(0.01));
}

TEST(SynSG, DirichletRowsAreDistributions)
{
    for (double alpha : {0.01, 0.1, 1.0, 10.0}) {
        StreamRng r(4, Stream::Dirichlet);
        for (int i = 0; i < 100; ++i) {
            const auto p = sample_dirichlet(r, alpha, 5);
            double s = 0;
            for (auto x : p) {
                EXPECT_GE(x, 0.0);
                s += x;
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(SynSG, Deterministic)
{
    SynSGConfig c;
    c.seed = 12;
    const auto a = synsg(c), b = synsg(c);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(save(a[i]), save(b[i]));
}

TEST(GenConfig, JsonRoundTrip)
{
    SynPGConfig c;
    c.n = 321;
    c.seed = 5;
    EXPECT_EQ(to_json(synpg_config_from_json(to_json(c))), to_json(c));
    SynSGConfig s;
    s.alpha = 0.25;
    EXPECT_EQ(to_json(synsg_config_from_json(to_json(s))), to_json(s));
    EXPECT_THROW(synpg_config_from_json(Json{{"n", 3}}), DataError);
}
