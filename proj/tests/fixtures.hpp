#pragma once

// Shared test graphs and brute-force oracles.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "provq/cflr.hpp"
#include "provq/graph.hpp"

namespace fixtures {

using namespace provq;

// T1: entities e1, e2, d; activity a1; a1 used e1 and e2; d generated by a1.
struct T1
{
    VertexId e1, e2, a1, d;
    ProvGraph g;
};

inline T1 make_t1(bool with_log = false, VertexId* log = nullptr)
{
    GraphBuilder b;
    T1 t{};
    t.e1 = b.entity({{"name", std::string("e1")}});
    t.e2 = b.entity({{"name", std::string("e2")}});
    t.a1 = b.activity({{"command", std::string("a1")}});
    t.d = b.entity({{"name", std::string("d")}});
    b.add_edge(EdgeType::Used, t.a1, t.e1);
    b.add_edge(EdgeType::Used, t.a1, t.e2);
    b.add_edge(EdgeType::WasGeneratedBy, t.d, t.a1);
    if (with_log) {
        const auto l = b.entity({{"name", std::string("log")}});
        b.add_edge(EdgeType::WasGeneratedBy, l, t.a1);
        if (log)
            *log = l;
    }
    t.g = b.build();
    return t;
}

// T2: chain e0 <-used- a1 <-gen- e1 <-used- a2 <-gen- d.
struct T2
{
    VertexId e0, a1, e1, a2, d;
    ProvGraph g;
};

inline T2 make_t2()
{
    GraphBuilder b;
    T2 t{};
    t.e0 = b.entity();
    t.a1 = b.activity();
    t.e1 = b.entity();
    t.a2 = b.activity();
    t.d = b.entity();
    b.add_edge(EdgeType::Used, t.a1, t.e0);
    b.add_edge(EdgeType::WasGeneratedBy, t.e1, t.a1);
    b.add_edge(EdgeType::Used, t.a2, t.e1);
    b.add_edge(EdgeType::WasGeneratedBy, t.d, t.a2);
    t.g = b.build();
    return t;
}

// Model-training lifecycle: Alice trains v1, updates the model and trains v2;
// Bob updates the solver from v2's logs and trains v3.
struct Lifecycle
{
    std::map<std::string, VertexId> v;
    ProvGraph g;
    VertexId operator[](const std::string& name) const { return v.at(name); }
};

inline Lifecycle make_lifecycle()
{
    GraphBuilder b;
    Lifecycle l;
    auto ent = [&](const std::string& artifact, std::int64_t version) {
        const auto id = b.entity({{"artifact", artifact}, {"version", version}});
        l.v[artifact + "-v" + std::to_string(version)] = id;
        return id;
    };
    auto act = [&](const std::string& command, std::int64_t version) {
        const auto id = b.activity({{"command", command}, {"version", version}});
        l.v[command + "-v" + std::to_string(version)] = id;
        return id;
    };
    const auto alice = b.agent({{"name", std::string("Alice")}});
    const auto bob = b.agent({{"name", std::string("Bob")}});
    l.v["Alice"] = alice;
    l.v["Bob"] = bob;
    const auto dataset = b.entity({{"artifact", std::string("dataset")}, {"version", std::int64_t{1}}});
    l.v["dataset"] = dataset;
    const auto model1 = ent("model", 1);
    const auto solver1 = ent("solver", 1);
    for (auto e : {dataset, model1, solver1})
        b.add_edge(EdgeType::WasAttributedTo, e, alice);

    auto run = [&](VertexId a, std::vector<VertexId> in, std::vector<VertexId> out, VertexId who) {
        for (auto e : in)
            b.add_edge(EdgeType::Used, a, e);
        for (auto e : out)
            b.add_edge(EdgeType::WasGeneratedBy, e, a);
        b.add_edge(EdgeType::WasAssociatedWith, a, who);
    };
    const auto train1 = act("train", 1);
    const auto logs1 = ent("logs", 1);
    const auto weight1 = ent("weight", 1);
    run(train1, {model1, solver1, dataset}, {logs1, weight1}, alice);

    const auto update2 = act("update", 2);
    const auto model2 = ent("model", 2);
    run(update2, {model1}, {model2}, alice);
    b.add_edge(EdgeType::WasDerivedFrom, model2, model1);

    const auto train2 = act("train", 2);
    const auto logs2 = ent("logs", 2);
    const auto weight2 = ent("weight", 2);
    run(train2, {model2, solver1, dataset}, {logs2, weight2}, alice);
    b.add_edge(EdgeType::WasDerivedFrom, logs2, logs1);
    b.add_edge(EdgeType::WasDerivedFrom, weight2, weight1);

    const auto update3 = act("update", 3);
    const auto solver3 = ent("solver", 3);
    run(update3, {solver1, logs2}, {solver3}, bob);
    b.add_edge(EdgeType::WasDerivedFrom, solver3, solver1);

    const auto train3 = act("train", 3);
    const auto logs3 = ent("logs", 3);
    const auto weight3 = ent("weight", 3);
    run(train3, {model1, solver3, dataset}, {logs3, weight3}, bob);
    b.add_edge(EdgeType::WasDerivedFrom, logs3, logs2);
    b.add_edge(EdgeType::WasDerivedFrom, weight3, weight2);

    l.g = b.build();
    return l;
}

// ---------------------------------------------------------------------------
// Brute-force CFG membership: does nonterminal n derive exactly word[i, j)?

using Word = std::vector<Symbol>;

inline bool terminal_eq(const Symbol& a, const Symbol& b)
{
    if (a.kind != b.kind)
        return false;
    switch (a.kind) {
    case Symbol::Kind::Edge: return a.edge == b.edge && a.inverse == b.inverse;
    case Symbol::Kind::VertexLabel: return a.vtype == b.vtype;
    case Symbol::Kind::Vertex: return a.vertex == b.vertex;
    case Symbol::Kind::Nonterminal: return false;
    }
    return false;
}

class Membership
{
public:
    Membership(const Grammar& g, const Word& w) : g_(g), w_(w) {}

    bool derives(std::uint32_t n) { return derives(n, 0, w_.size()); }

private:
    bool derives(std::uint32_t n, std::size_t i, std::size_t j)
    {
        const auto key = std::make_tuple(n, i, j);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        memo_[key] = false; // guards unit cycles
        bool ok = false;
        for (const auto& p : g_.productions())
            if (p.lhs == n && seq(p.rhs, 0, i, j)) {
                ok = true;
                break;
            }
        memo_[key] = ok;
        return ok;
    }

    bool seq(const std::vector<Symbol>& rhs, std::size_t k, std::size_t i, std::size_t j)
    {
        if (k == rhs.size())
            return i == j;
        const auto& s = rhs[k];
        if (s.is_terminal())
            return i < j && terminal_eq(s, w_[i]) && seq(rhs, k + 1, i + 1, j);
        // every nonterminal here yields at least one symbol
        const auto rest = rhs.size() - k - 1;
        for (std::size_t m = i + 1; m + rest <= j; ++m)
            if (derives(s.nt, i, m) && seq(rhs, k + 1, m, j))
                return true;
        return false;
    }

    const Grammar& g_;
    const Word& w_;
    std::map<std::tuple<std::uint32_t, std::size_t, std::size_t>, bool> memo_;
};

inline bool in_language(const Grammar& g, std::uint32_t n, const Word& w)
{
    Membership m(g, w);
    return m.derives(n);
}

inline bool in_language(const Grammar& g, const Word& w) { return in_language(g, g.start(), w); }

// ---------------------------------------------------------------------------
// Walk oracle for the similar-path language.
//
// A qualifying walk from s climbs 2m edges against the stored direction to a
// destination d (entity -> using activity -> generated entity ...), then
// descends 2m edges along the stored direction. Its word lists the interior
// symbols (edges, vertex labels, and the id of d at the center). Every walk
// whose word the rewritten grammar accepts (and whose mirrored vertices carry
// equal labels) contributes its vertices.

struct WalkOracle
{
    const ProvGraph& g;
    const LabelOracle& lab;
    std::vector<VertexId> dst;
    std::size_t max_edges; // upper bound on 4m

    std::set<VertexId> ns(const std::vector<VertexId>& src) const
    {
        const auto gr = build_sim_grammar(g, dst);
        std::set<VertexId> out;
        std::map<std::vector<std::uint32_t>, bool> memo;
        const std::set<VertexId> dset(dst.begin(), dst.end());
        for (auto s : src) {
            if (!lab.vertex_alive(s))
                continue;
            if (dset.count(s))
                out.insert(s); // zero-length base
            std::vector<VertexId> up{s};
            climb(up, [&](const std::vector<VertexId>& path) {
                const auto d = path.back();
                if (!dset.count(d))
                    return;
                const auto half = path.size() - 1;
                std::vector<VertexId> down{d};
                descend(down, half, [&](const std::vector<VertexId>& dw) {
                    std::vector<VertexId> walk = path;
                    walk.insert(walk.end(), dw.begin() + 1, dw.end());
                    if (accepts(gr, walk, half, memo))
                        out.insert(walk.begin(), walk.end());
                });
            });
        }
        return out;
    }

    /// Start-symbol pairs Ee(x, y) witnessed by walks from x (x ranges over all entities).
    std::set<std::pair<VertexId, VertexId>> pairs() const
    {
        const auto gr = build_sim_grammar(g, dst);
        std::set<std::pair<VertexId, VertexId>> out;
        std::map<std::vector<std::uint32_t>, bool> memo;
        const std::set<VertexId> dset(dst.begin(), dst.end());
        for (auto s : g.vertices_of(VertexType::Entity)) {
            if (!lab.vertex_alive(s))
                continue;
            if (dset.count(s))
                out.insert({s, s});
            std::vector<VertexId> up{s};
            climb(up, [&](const std::vector<VertexId>& path) {
                if (!dset.count(path.back()))
                    return;
                const auto half = path.size() - 1;
                std::vector<VertexId> down{path.back()};
                descend(down, half, [&](const std::vector<VertexId>& dw) {
                    std::vector<VertexId> walk = path;
                    walk.insert(walk.end(), dw.begin() + 1, dw.end());
                    if (accepts(gr, walk, half, memo))
                        out.insert({walk.front(), walk.back()});
                });
            });
        }
        return out;
    }

    template <class F>
    void climb(std::vector<VertexId>& path, F&& f) const
    {
        const auto v = path.back();
        if (path.size() > 1 && g.type(v) == VertexType::Entity)
            f(path);
        if (g.type(v) == VertexType::Entity && 2 * (path.size() - 1 + 2) > max_edges)
            return;
        const auto et = g.type(v) == VertexType::Entity ? EdgeType::Used : EdgeType::WasGeneratedBy;
        for (const auto& a : g.in(v, et)) {
            if (!lab.edge_alive(a.e) || !lab.vertex_alive(a.v))
                continue;
            path.push_back(a.v);
            climb(path, f);
            path.pop_back();
        }
    }

    template <class F>
    void descend(std::vector<VertexId>& path, std::size_t len, F&& f) const
    {
        if (path.size() - 1 == len) {
            f(path);
            return;
        }
        const auto v = path.back();
        const auto et = g.type(v) == VertexType::Entity ? EdgeType::WasGeneratedBy : EdgeType::Used;
        for (const auto& a : g.out(v, et)) {
            if (!lab.edge_alive(a.e) || !lab.vertex_alive(a.v))
                continue;
            path.push_back(a.v);
            descend(path, len, f);
            path.pop_back();
        }
    }

    bool accepts(const Grammar& gr, const std::vector<VertexId>& walk, std::size_t center,
                 std::map<std::vector<std::uint32_t>, bool>& memo) const
    {
        // mirrored vertices must carry equal effective labels
        for (std::size_t i = 0; i < walk.size(); ++i)
            if (lab.vertex_label(walk[i]) != lab.vertex_label(walk[walk.size() - 1 - i]))
                return false;
        Word w;
        std::vector<std::uint32_t> key;
        for (std::size_t k = 0; k + 1 < walk.size(); ++k) {
            if (k > 0) {
                if (k == center) {
                    w.push_back(Symbol::vertex_id(walk[k]));
                    key.push_back(1000000 + walk[k]);
                } else {
                    w.push_back(Symbol::label(g.type(walk[k])));
                    key.push_back(100 + static_cast<std::uint32_t>(g.type(walk[k])));
                }
            }
            const bool up = k < center;
            const auto from = walk[k];
            const auto et = g.type(from) == VertexType::Entity
                                ? (up ? EdgeType::Used : EdgeType::WasGeneratedBy)
                                : (up ? EdgeType::WasGeneratedBy : EdgeType::Used);
            w.push_back(Symbol::edge_sym(et, up));
            key.push_back(static_cast<std::uint32_t>(et) * 2 + (up ? 1 : 0));
        }
        if (auto it = memo.find(key); it != memo.end())
            return it->second;
        const bool ok = in_language(gr, w);
        memo[key] = ok;
        return ok;
    }
};

inline std::vector<VertexId> sorted(std::set<VertexId> s) { return {s.begin(), s.end()}; }

/// Length of the longest directed path over used/wasGeneratedBy edges.
inline std::size_t ancestry_depth(const ProvGraph& g)
{
    std::vector<std::size_t> depth(g.num_vertices(), 0);
    std::vector<VertexId> order(g.num_vertices());
    for (VertexId v = 0; v < g.num_vertices(); ++v)
        order[v] = v;
    std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return g.seq(a) < g.seq(b); });
    std::size_t best = 0;
    // older vertices first: an edge always points from newer to older when
    // the graph is temporally ordered; fall back to relaxation otherwise
    for (int round = 0; round < 2 || round < static_cast<int>(g.num_vertices()); ++round) {
        bool changed = false;
        for (auto v : order)
            for (auto t : {EdgeType::Used, EdgeType::WasGeneratedBy})
                for (const auto& a : g.out(v, t))
                    if (depth[v] < depth[a.v] + 1) {
                        depth[v] = depth[a.v] + 1;
                        changed = true;
                    }
        if (!changed)
            break;
    }
    for (auto d : depth)
        best = std::max(best, d);
    return best;
}

/// Small random temporally ordered PROV graph: each new activity uses a few
/// existing entities and generates one or two new ones.
inline ProvGraph random_prov(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    GraphBuilder b;
    std::vector<VertexId> ents;
    const auto agent = b.agent({{"name", std::string("ag")}});
    for (int i = 0; i < 2; ++i)
        ents.push_back(b.entity({{"kind", std::int64_t{0}}}));
    while (b.num_vertices() + 3 <= n) {
        const auto a = b.activity({{"command", std::string("c") + std::to_string(rng() % 3)}});
        b.add_edge(EdgeType::WasAssociatedWith, a, agent);
        const auto k = 1 + rng() % 3;
        std::set<VertexId> used;
        for (std::size_t i = 0; i < k; ++i) {
            // bias toward recent entities
            const auto r = std::min<std::size_t>(rng() % ents.size(), rng() % ents.size());
            used.insert(ents[ents.size() - 1 - r]);
        }
        for (auto e : used)
            b.add_edge(EdgeType::Used, a, e);
        const auto outs = 1 + rng() % 2;
        for (std::size_t i = 0; i < outs; ++i) {
            const auto e = b.entity({{"kind", static_cast<std::int64_t>(rng() % 2)}});
            b.add_edge(EdgeType::WasGeneratedBy, e, a);
            ents.push_back(e);
        }
    }
    return b.build();
}

} // namespace fixtures
