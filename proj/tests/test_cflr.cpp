#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "provq/seg.hpp"

using namespace provq;
using fixtures::Word;

namespace {

std::set<std::pair<VertexId, VertexId>> start_pairs(const FactStore<PlainPairSet>& h, const Grammar& nf)
{
    std::set<std::pair<VertexId, VertexId>> out;
    for (const auto& f : h.facts())
        if (f.nt == nf.find("Re") || f.nt == nf.find("Qd"))
            out.insert({f.i, f.j});
    return out;
}

bool has(const std::set<std::pair<VertexId, VertexId>>& s, VertexId a, VertexId b)
{
    return s.count({a, b}) != 0;
}

// Projected language: every word derivable from `n` with vertex-label symbols
// erased, up to `limit` remaining symbols. Sentential forms are expanded
// leftmost and deduplicated, so label-only recursion terminates.
std::set<std::vector<int>> projected_language(const Grammar& g, std::uint32_t n, std::size_t limit)
{
    auto code = [](const Symbol& s) {
        switch (s.kind) {
        case Symbol::Kind::Nonterminal: return 1000 + static_cast<int>(s.nt);
        case Symbol::Kind::Edge: return static_cast<int>(s.edge) * 2 + (s.inverse ? 1 : 0);
        case Symbol::Kind::Vertex: return 500 + static_cast<int>(s.vertex);
        case Symbol::Kind::VertexLabel: return -1;
        }
        return -1;
    };
    std::set<std::vector<int>> words, seen;
    std::vector<std::vector<int>> stack{{1000 + static_cast<int>(n)}};
    while (!stack.empty()) {
        auto form = stack.back();
        stack.pop_back();
        if (form.size() > limit || !seen.insert(form).second)
            continue;
        auto it = std::find_if(form.begin(), form.end(), [](int c) { return c >= 1000; });
        if (it == form.end()) {
            words.insert(form);
            continue;
        }
        const auto nt = static_cast<std::uint32_t>(*it - 1000);
        const auto pos = static_cast<std::size_t>(it - form.begin());
        for (const auto& p : g.productions()) {
            if (p.lhs != nt)
                continue;
            std::vector<int> next(form.begin(), form.begin() + static_cast<long>(pos));
            for (const auto& s : p.rhs)
                if (code(s) >= 0)
                    next.push_back(code(s));
            next.insert(next.end(), form.begin() + static_cast<long>(pos) + 1, form.end());
            stack.push_back(std::move(next));
        }
    }
    return words;
}

Word sim_word(VertexId d)
{
    using S = Symbol;
    return {S::edge_sym(EdgeType::Used, true), S::label(VertexType::Activity),
            S::edge_sym(EdgeType::WasGeneratedBy, true), S::vertex_id(d),
            S::edge_sym(EdgeType::WasGeneratedBy), S::label(VertexType::Activity),
            S::edge_sym(EdgeType::Used)};
}

} // namespace

// ---------------------------------------------------------------------------
// Grammars

TEST(SimGrammar, ProductionCounts)
{
    const auto t = fixtures::make_t1();
    EXPECT_EQ(build_sim_grammar(t.g, std::vector<VertexId>{t.d}).productions().size(), 5u);
    EXPECT_EQ(build_sim_grammar(t.g, std::vector<VertexId>{t.d, t.e1}).productions().size(), 6u);
    const auto nf = build_sim_normal_form(t.g, std::vector<VertexId>{t.d});
    EXPECT_EQ(nf.productions().size(), 10u);
    EXPECT_TRUE(nf.normal_form());
    EXPECT_TRUE(nf.well_formed());
    EXPECT_FALSE(build_sim_grammar(t.g, std::vector<VertexId>{t.d}).normal_form());
    EXPECT_EQ(nf.info(nf.start()).name, "Re");
    // r1 has two alternatives
    const auto lg = nf.find("Lg");
    EXPECT_EQ(std::count_if(nf.productions().begin(), nf.productions().end(),
                            [&](const Production& p) { return p.lhs == lg; }),
              2);
}

TEST(SimGrammar, RejectsNonEntityDestination)
{
    const auto t = fixtures::make_t1();
    EXPECT_THROW(build_sim_grammar(t.g, std::vector<VertexId>{t.a1}), QueryError);
    EXPECT_THROW(build_sim_normal_form(t.g, std::vector<VertexId>{99}), QueryError);
}

TEST(SimGrammar, MembershipOfBasicWord)
{
    const auto t = fixtures::make_t1();
    const auto gr = build_sim_grammar(t.g, std::vector<VertexId>{t.d});
    EXPECT_TRUE(fixtures::in_language(gr, sim_word(t.d)));
    EXPECT_TRUE(fixtures::in_language(gr, Word{Symbol::vertex_id(t.d)}));
    EXPECT_FALSE(fixtures::in_language(gr, sim_word(t.e1))); // wrong center
    auto broken = sim_word(t.d);
    broken.back() = Symbol::edge_sym(EdgeType::Used, true);
    EXPECT_FALSE(fixtures::in_language(gr, broken));

    // the normal form carries mandatory outer entity labels
    const auto nf = build_sim_normal_form(t.g, std::vector<VertexId>{t.d});
    auto wrapped = sim_word(t.d);
    wrapped.insert(wrapped.begin(), Symbol::label(VertexType::Entity));
    wrapped.push_back(Symbol::label(VertexType::Entity));
    EXPECT_TRUE(fixtures::in_language(nf, wrapped));
    EXPECT_FALSE(fixtures::in_language(nf, sim_word(t.d)));
}

TEST(SimGrammar, NormalFormAgreesWithRewrittenOnProjectedWords)
{
    const auto t = fixtures::make_t1();
    const std::vector<VertexId> dst{t.d, t.e2};
    const auto gr = build_sim_grammar(t.g, dst);
    const auto nf = build_sim_normal_form(t.g, dst);
    for (std::size_t limit : {1u, 5u, 9u, 13u}) {
        const auto ee = projected_language(gr, gr.find("Ee"), limit);
        auto re = projected_language(nf, nf.find("Re"), limit);
        const auto qd = projected_language(nf, nf.find("Qd"), limit);
        re.insert(qd.begin(), qd.end());
        EXPECT_EQ(ee, re) << "limit " << limit;
        EXPECT_FALSE(ee.empty());
    }
}

// ---------------------------------------------------------------------------
// Baseline solver

TEST(Baseline, FixtureT1)
{
    const auto t = fixtures::make_t1();
    const std::vector<VertexId> dst{t.d};
    const auto nf = build_sim_normal_form(t.g, dst);
    LabelOracle lab(t.g);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    const auto re = nf.find("Re");
    for (auto [a, b] : {std::pair{t.e1, t.e2}, {t.e2, t.e1}, {t.e1, t.e1}, {t.e2, t.e2}})
        EXPECT_TRUE(run.store.contains(re, a, b)) << a << "," << b;
    EXPECT_TRUE(run.store.worklist_empty());

    fixtures::WalkOracle oracle{t.g, lab, dst, 20};
    EXPECT_EQ(start_pairs(run.store, nf), oracle.pairs());
}

TEST(Baseline, FixtureT2)
{
    const auto t = fixtures::make_t2();
    const std::vector<VertexId> dst{t.d};
    const auto nf = build_sim_normal_form(t.g, dst);
    LabelOracle lab(t.g);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    const auto pairs = start_pairs(run.store, nf);
    EXPECT_TRUE(has(pairs, t.e0, t.e0));
    EXPECT_TRUE(has(pairs, t.e1, t.e1));
    EXPECT_FALSE(has(pairs, t.e0, t.e1));
    EXPECT_FALSE(has(pairs, t.e1, t.e0));
    fixtures::WalkOracle oracle{t.g, lab, dst, 20};
    EXPECT_EQ(pairs, oracle.pairs());
}

TEST(Baseline, EmptyDestinationGivesEmptyHistory)
{
    const auto t = fixtures::make_t1();
    const auto nf = build_sim_normal_form(t.g, std::vector<VertexId>{});
    LabelOracle lab(t.g);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    EXPECT_EQ(run.store.size(), 0u);
}

TEST(Baseline, EpsilonVertexRemovesFacts)
{
    const auto t = fixtures::make_t1();
    const std::vector<VertexId> dst{t.d};
    const auto nf = build_sim_normal_form(t.g, dst);
    LabelOracle lab(t.g);
    lab.exclude_vertex(t.a1);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    const auto pairs = start_pairs(run.store, nf);
    EXPECT_EQ(pairs, (std::set<std::pair<VertexId, VertexId>>{{t.d, t.d}}));
}

TEST(Baseline, BudgetExceededIsReported)
{
    const auto t = fixtures::make_t2();
    const auto nf = build_sim_normal_form(t.g, std::vector<VertexId>{t.d});
    LabelOracle lab(t.g);
    SolverOptions opt;
    opt.fact_budget = 3;
    try {
        cflr_solve<PlainPairSet>(t.g, nf, lab, opt);
        FAIL() << "expected BudgetExceeded";
    } catch (const BudgetExceeded& e) {
        EXPECT_EQ(e.budget(), 3u);
        EXPECT_GT(e.reached(), 3u);
    }
}

TEST(Baseline, MatchesWalkOracleOnRandomGraphs)
{
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto g = fixtures::random_prov(20 + seed % 20, seed);
        ASSERT_TRUE(validate(g).empty());
        const auto ents = g.entities_by_seq();
        const std::vector<VertexId> dst{ents.back(), ents[ents.size() / 2]};
        const auto nf = build_sim_normal_form(g, dst);
        LabelOracle lab(g);
        auto run = cflr_solve<PlainPairSet>(g, nf, lab);
        EXPECT_EQ(run.store.dequeued(), run.store.size()) << "seed " << seed;
        fixtures::WalkOracle oracle{g, lab, dst, 2 * fixtures::ancestry_depth(g) + 4};
        EXPECT_EQ(start_pairs(run.store, nf), oracle.pairs()) << "seed " << seed;
    }
}

TEST(Baseline, OrderBackendAndFastSetDoNotChangeHistory)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto g = fixtures::random_prov(60, seed);
        const auto ents = g.entities_by_seq();
        const std::vector<VertexId> dst{ents.back(), ents[ents.size() - 2]};
        const auto nf = build_sim_normal_form(g, dst);
        LabelOracle lab(g);
        const auto ref = cflr_solve<PlainPairSet>(g, nf, lab).store.facts();
        SolverOptions lifo;
        lifo.order = WorkOrder::Lifo;
        EXPECT_EQ(cflr_solve<PlainPairSet>(g, nf, lab, lifo).store.facts(), ref);
        EXPECT_EQ(cflr_solve<CompressedPairSet>(g, nf, lab).store.facts(), ref);
        SolverOptions fast;
        fast.fast_set = true;
        EXPECT_EQ(cflr_solve<PlainPairSet>(g, nf, lab, fast).store.facts(), ref);
        EXPECT_EQ(cflr_solve<CompressedPairSet>(g, nf, lab, fast).store.facts(), ref);
    }
}

TEST(Baseline, ExtendedLabelsMatchOracle)
{
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto g = fixtures::random_prov(30, seed + 100);
        const auto ents = g.entities_by_seq();
        const std::vector<VertexId> dst{ents.back()};
        const auto nf = build_sim_normal_form(g, dst);
        LabelOracle lab(g, {{VertexType::Activity, "command"}, {VertexType::Entity, "kind"}});
        auto run = cflr_solve<PlainPairSet>(g, nf, lab);
        fixtures::WalkOracle oracle{g, lab, dst, 2 * fixtures::ancestry_depth(g) + 4};
        EXPECT_EQ(start_pairs(run.store, nf), oracle.pairs()) << "seed " << seed;
    }
}

TEST(Derivations, EveryNonSeedFactHasADerivation)
{
    const auto g = fixtures::random_prov(40, 5);
    const auto ents = g.entities_by_seq();
    const std::vector<VertexId> dst{ents.back()};
    const auto nf = build_sim_normal_form(g, dst);
    LabelOracle lab(g);
    auto run = cflr_solve<PlainPairSet>(g, nf, lab);
    DerivationView<PlainPairSet> view(g, nf, lab, run.store);
    for (const auto& f : run.store.facts()) {
        std::size_t n = 0;
        view.for_each(f, [&](const Derivation& d) {
            ++n;
            for (std::uint8_t c = 0; c < d.num_children; ++c)
                EXPECT_TRUE(view.holds(d.children[c]));
        });
        EXPECT_GE(n, 1u);
    }
}

TEST(Derivations, HistoryCsvDump)
{
    const auto t = fixtures::make_t1();
    const auto nf = build_sim_normal_form(t.g, std::vector<VertexId>{t.d});
    LabelOracle lab(t.g);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    std::ostringstream out;
    run.store.dump_csv(out, nf);
    const auto s = out.str();
    EXPECT_EQ(s.rfind("nonterminal,i,j\n", 0), 0u);
    EXPECT_NE(s.find("Re," + std::to_string(t.e1) + "," + std::to_string(t.e2)), std::string::npos);
}

TEST(Derivations, WitnessWalkParses)
{
    const auto t = fixtures::make_t2();
    const std::vector<VertexId> dst{t.d};
    const auto nf = build_sim_normal_form(t.g, dst);
    LabelOracle lab(t.g);
    auto run = cflr_solve<PlainPairSet>(t.g, nf, lab);
    const auto walk = witness_walk(t.g, nf, lab, run.store, Fact{nf.find("Re"), t.e0, t.e0}, t.a1);
    EXPECT_EQ(walk, (std::vector<VertexId>{t.e0, t.a1, t.e1, t.a2, t.d, t.a2, t.e1, t.a1, t.e0}));
}

// ---------------------------------------------------------------------------
// Fast sets

template <class Set>
class PairSetTest : public ::testing::Test
{
};
using PairSets = ::testing::Types<PlainPairSet, CompressedPairSet>;
TYPED_TEST_SUITE(PairSetTest, PairSets);

TYPED_TEST(PairSetTest, InsertContainsDiff)
{
    TypeParam s(4, 8);
    EXPECT_TRUE(s.insert(0, 2));
    EXPECT_FALSE(s.insert(0, 2));
    EXPECT_TRUE(s.contains(0, 2));
    EXPECT_FALSE(s.contains(1, 2));
    DenseBitset cand(8);
    for (auto c : {1u, 2u, 3u})
        cand.set(c);
    s.diff_row(0, cand);
    EXPECT_EQ(cand.to_vector(), (std::vector<std::uint32_t>{1, 3}));
    EXPECT_THROW(s.insert(4, 0), std::out_of_range);
    EXPECT_THROW(s.insert(0, 8), std::out_of_range);
}

TEST(PairSets, BackendsAgreeOnRandomOperations)
{
    std::mt19937_64 rng(42);
    const std::uint32_t rows = 7, cols = 70000;
    PlainPairSet p(rows, cols);
    CompressedPairSet c(rows, cols);
    std::vector<std::uint32_t> rp, rc;
    for (int op = 0; op < 10000; ++op) {
        const auto i = static_cast<std::uint32_t>(rng() % rows);
        // cluster columns so that some chunks exceed the array threshold
        const auto j = static_cast<std::uint32_t>(rng() % 3 == 0 ? rng() % cols : rng() % 6000);
        switch (rng() % 10) {
        case 0: {
            p.take_row(i, rp);
            c.take_row(i, rc);
            ASSERT_EQ(rp, rc);
            break;
        }
        case 1: {
            DenseBitset a(cols), b(cols);
            for (int k = 0; k < 50; ++k) {
                const auto x = static_cast<std::uint32_t>(rng() % 6000);
                a.set(x);
                b.set(x);
            }
            p.diff_row(i, a);
            c.diff_row(i, b);
            ASSERT_EQ(a, b);
            break;
        }
        case 2: ASSERT_EQ(p.contains(i, j), c.contains(i, j)); break;
        default: ASSERT_EQ(p.insert(i, j), c.insert(i, j)); break;
        }
        ASSERT_EQ(p.size(), c.size());
    }
    for (std::uint32_t i = 0; i < rows; ++i) {
        std::vector<std::uint32_t> a, b;
        p.for_each_in_row(i, [&](std::uint32_t x) { a.push_back(x); });
        c.for_each_in_row(i, [&](std::uint32_t x) { b.push_back(x); });
        EXPECT_EQ(a, b);
    }
}

TEST(PairSets, RoaringContainerSwitch)
{
    RoaringSet s;
    for (std::uint32_t i = 0; i < 10000; i += 2)
        EXPECT_TRUE(s.insert(i));
    EXPECT_EQ(s.size(), 5000u);
    EXPECT_TRUE(s.contains(4998));
    EXPECT_FALSE(s.contains(4999));
    EXPECT_FALSE(s.insert(10));
    const auto v = s.to_vector();
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    EXPECT_EQ(v.size(), 5000u);
}
