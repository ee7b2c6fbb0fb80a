#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "provq/graph_io.hpp"

using namespace provq;

TEST(GraphBuild, EmptyGraph)
{
    auto g = ProvGraph::build({}, {});
    EXPECT_EQ(g.num_vertices(), 0u);
    EXPECT_EQ(g.num_edges(), 0u);
    EXPECT_TRUE(validate(g).empty());
}

TEST(GraphBuild, SingleEdgeAdjacency)
{
    auto g = ProvGraph::build({{0, VertexType::Entity, 0, {}}, {1, VertexType::Activity, 1, {}}},
                              {{0, EdgeType::Used, 1, 0, {}}});
    ASSERT_EQ(g.out(1, EdgeType::Used).size(), 1u);
    EXPECT_EQ(g.out(1, EdgeType::Used)[0].v, 0u);
    ASSERT_EQ(g.in(0, EdgeType::Used).size(), 1u);
    EXPECT_EQ(g.in(0, EdgeType::Used)[0].v, 1u);
    EXPECT_TRUE(g.out(0, EdgeType::Used).empty());
    EXPECT_TRUE(g.in(1, EdgeType::WasGeneratedBy).empty());
}

TEST(GraphBuild, RejectsDuplicateAndDangling)
{
    EXPECT_THROW(ProvGraph::build({{0, VertexType::Entity, 0, {}}, {0, VertexType::Entity, 1, {}}}, {}),
                 DataError);
    EXPECT_THROW(ProvGraph::build({{0, VertexType::Entity, 0, {}}}, {{0, EdgeType::Used, 0, 5, {}}}),
                 DataError);
    EXPECT_THROW(ProvGraph::build({{3, VertexType::Entity, 0, {}}}, {}), DataError);
}

TEST(GraphBuild, LifecycleLoadsAndValidates)
{
    const auto l = fixtures::make_lifecycle();
    EXPECT_TRUE(validate(l.g).empty());
    EXPECT_EQ(l.g.count(VertexType::Agent), 2u);
    EXPECT_EQ(l.g.count(VertexType::Activity), 5u);
    EXPECT_EQ(l.g.count(VertexType::Entity), 11u);
    EXPECT_TRUE(l.g.temporally_ordered());
}

TEST(GraphValidate, TypingViolation)
{
    // entity as the source of a used edge
    auto g = ProvGraph::build({{0, VertexType::Entity, 0, {}}, {1, VertexType::Activity, 1, {}}},
                              {{0, EdgeType::Used, 0, 1, {}}});
    const auto r = validate(g);
    ASSERT_FALSE(r.empty());
    EXPECT_EQ(r[0].kind, Violation::Kind::EndpointTyping);
}

TEST(GraphValidate, TwoCycle)
{
    auto g = ProvGraph::build({{0, VertexType::Entity, 0, {}}, {1, VertexType::Activity, 1, {}}},
                              {{0, EdgeType::WasGeneratedBy, 0, 1, {}}, {1, EdgeType::Used, 1, 0, {}}});
    const auto r = validate(g);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].kind, Violation::Kind::Cycle);
    EXPECT_EQ(r[0].vertices, (std::vector<VertexId>{0, 1}));
}

// Independent cycle check: DFS with colors over the ancestry edges.
static bool has_cycle_dfs(const ProvGraph& g)
{
    std::vector<int> color(g.num_vertices(), 0);
    std::function<bool(VertexId)> visit = [&](VertexId v) {
        color[v] = 1;
        for (auto t : {EdgeType::Used, EdgeType::WasGeneratedBy, EdgeType::WasDerivedFrom})
            for (const auto& a : g.out(v, t)) {
                if (color[a.v] == 1)
                    return true;
                if (color[a.v] == 0 && visit(a.v))
                    return true;
            }
        color[v] = 2;
        return false;
    };
    for (VertexId v = 0; v < g.num_vertices(); ++v)
        if (color[v] == 0 && visit(v))
            return true;
    return false;
}

TEST(GraphValidate, CycleDetectionAgreesWithDfs)
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        GraphBuilder b;
        const int ne = 2 + static_cast<int>(rng() % 5), na = 1 + static_cast<int>(rng() % 4);
        std::vector<VertexId> ents, acts;
        for (int i = 0; i < ne; ++i)
            ents.push_back(b.entity());
        for (int i = 0; i < na; ++i)
            acts.push_back(b.activity());
        const int m = static_cast<int>(rng() % 8);
        for (int i = 0; i < m; ++i) {
            switch (rng() % 3) {
            case 0: b.add_edge(EdgeType::Used, acts[rng() % na], ents[rng() % ne]); break;
            case 1: b.add_edge(EdgeType::WasGeneratedBy, ents[rng() % ne], acts[rng() % na]); break;
            default: b.add_edge(EdgeType::WasDerivedFrom, ents[rng() % ne], ents[rng() % ne]); break;
            }
        }
        const auto g = b.build();
        bool cyc = false;
        for (const auto& v : validate(g))
            cyc = cyc || v.kind == Violation::Kind::Cycle;
        EXPECT_EQ(cyc, has_cycle_dfs(g)) << "trial " << trial;
    }
}

TEST(GraphValidate, SeqMustBePermutation)
{
    auto g = ProvGraph::build({{0, VertexType::Entity, 5, {}}, {1, VertexType::Entity, 5, {}}}, {});
    const auto r = validate(g);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].kind, Violation::Kind::SeqNotPermutation);
}

TEST(GraphAdjacency, InOutConsistent)
{
    const auto l = fixtures::make_lifecycle();
    const auto& g = l.g;
    for (VertexId v = 0; v < g.num_vertices(); ++v)
        for (auto t : kAllEdgeTypes)
            for (const auto& a : g.out(v, t)) {
                const auto in = g.in(a.v, t);
                EXPECT_TRUE(std::any_of(in.begin(), in.end(),
                                        [&](const Adj& x) { return x.v == v && x.e == a.e; }));
            }
}

TEST(GraphIo, EmptyRoundTrip)
{
    const auto g = ProvGraph::build({}, {});
    const auto text = save(g);
    EXPECT_EQ(load(text), g);
    EXPECT_EQ(text, save(load(text)));
}

TEST(GraphIo, LifecycleRoundTrip)
{
    const auto l = fixtures::make_lifecycle();
    const auto back = load(save(l.g));
    EXPECT_EQ(back, l.g);
    EXPECT_EQ(back.property_types(), l.g.property_types());
}

TEST(GraphIo, EdgeTypeStrings)
{
    const char* doc = R"({"propertyTypes":[],
      "vertices":[{"id":0,"type":"ENTITY","seq":1,"props":{}},{"id":1,"type":"ACTIVITY","seq":0,"props":{}}],
      "edges":[{"id":0,"type":"wasGeneratedBy","src":0,"dst":1,"props":{}}]})";
    const auto g = load(doc);
    EXPECT_EQ(g.edge(0).type, EdgeType::WasGeneratedBy);
    EXPECT_EQ(parse_edge_type("used"), EdgeType::Used);
    EXPECT_EQ(parse_edge_type("wasAssociatedWith"), EdgeType::WasAssociatedWith);
    EXPECT_EQ(parse_edge_type("wasAttributedTo"), EdgeType::WasAttributedTo);
    EXPECT_EQ(parse_edge_type("wasDerivedFrom"), EdgeType::WasDerivedFrom);
    EXPECT_EQ(parse_vertex_type("AGENT"), VertexType::Agent);
    EXPECT_THROW(parse_edge_type("WAS_GENERATED_BY"), DataError);
}

TEST(GraphIo, RejectsMalformed)
{
    EXPECT_THROW(load("{"), DataError);
    EXPECT_THROW(load(R"({"vertices":[{"id":0,"type":"THING","seq":0,"props":{}}],"edges":[]})"), DataError);
    EXPECT_THROW(load(R"({"vertices":[{"id":1,"type":"ENTITY","seq":0,"props":{}}],"edges":[]})"), DataError);
    EXPECT_THROW(load(R"({"vertices":[{"id":0,"type":"ENTITY","seq":0,"props":{"x":[1,2]}}],"edges":[]})"),
                 DataError);
    EXPECT_THROW(load(R"({"vertices":[{"id":0,"type":"ENTITY","seq":0,"props":{"x":{"a":1}}}],"edges":[]})"),
                 DataError);
}

TEST(GraphIo, ScalarPropertyKinds)
{
    GraphBuilder b;
    b.entity({{"s", std::string("x")}, {"i", std::int64_t{-3}}, {"f", 2.5}, {"b", true}});
    const auto g = b.build({"extra"});
    const auto back = load(save(g));
    EXPECT_EQ(back, g);
    EXPECT_TRUE(back.property_types().count("extra"));
    EXPECT_EQ(std::get<double>(back.vertex(0).props.at("f")), 2.5);
    EXPECT_EQ(std::get<std::int64_t>(back.vertex(0).props.at("i")), -3);
    EXPECT_EQ(std::get<bool>(back.vertex(0).props.at("b")), true);
}

TEST(GraphIo, DotShapesByType)
{
    const auto l = fixtures::make_lifecycle();
    const auto dot = to_dot(l.g);
    EXPECT_NE(dot.find("shape=ellipse"), std::string::npos);
    EXPECT_NE(dot.find("shape=box"), std::string::npos);
    EXPECT_NE(dot.find("shape=house"), std::string::npos);
    EXPECT_NE(dot.find("train-1"), std::string::npos);
}
