#pragma once

// The summarization operator: partition segment vertices into equivalence
// classes (vertex type, kept properties, k-hop neighborhood isomorphism), start
// from the disjoint union g0 and merge vertices while simulation guarantees that
// no new path label appears.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "provq/bitset.hpp"
#include "provq/seg.hpp"

namespace provq {

using PropertySet = std::set<std::string, std::less<>>;

/// Properties kept per vertex type; all others are ignored when comparing vertices.
struct Pagg
{
    PropertySet entity;
    PropertySet activity;
    PropertySet agent;

    const PropertySet& keep(VertexType t) const
    {
        switch (t) {
        case VertexType::Entity: return entity;
        case VertexType::Activity: return activity;
        case VertexType::Agent: return agent;
        }
        return entity;
    }

    friend bool operator==(const Pagg&, const Pagg&) = default;
};

/// A segment as a standalone graph. origin[i] is the id of local vertex i in
/// the graph the segment was cut from; empty means identity.
struct SegmentGraph
{
    ProvGraph g;
    std::vector<VertexId> origin;

    VertexId origin_of(VertexId v) const { return origin.empty() ? v : origin[v]; }
};

inline SegmentGraph materialize(const ProvGraph& parent, const Segment& s)
{
    std::unordered_map<VertexId, VertexId> local;
    std::vector<Vertex> vs;
    vs.reserve(s.vertices.size());
    for (auto v : s.vertices) {
        const auto id = static_cast<VertexId>(vs.size());
        local.emplace(v, id);
        auto x = parent.vertex(v);
        x.id = id;
        vs.push_back(std::move(x));
    }
    std::vector<Edge> es;
    es.reserve(s.edges.size());
    for (auto e : s.edges) {
        auto x = parent.edge(e);
        x.id = static_cast<EdgeId>(es.size());
        x.src = local.at(x.src);
        x.dst = local.at(x.dst);
        es.push_back(std::move(x));
    }
    return {ProvGraph::build(std::move(vs), std::move(es), parent.property_types()), s.vertices};
}

inline SegmentGraph as_segment(ProvGraph g) { return {std::move(g), {}}; }

/// Interns (vertex type, kept property values) into small label ids.
class VertexKeyer
{
public:
    explicit VertexKeyer(Pagg pagg) : pagg_(std::move(pagg)) {}

    std::uint32_t key(const Vertex& v)
    {
        std::string k(to_string(v.type));
        for (const auto& p : pagg_.keep(v.type)) {
            k += '\x1f';
            k += p;
            auto it = v.props.find(p);
            if (it == v.props.end())
                k += "\x1e";
            else {
                k += '=';
                k += std::to_string(it->second.index());
                k += ':';
                k += prop_to_string(it->second);
            }
        }
        auto [it, fresh] = ids_.emplace(std::move(k), static_cast<std::uint32_t>(ids_.size()));
        return it->second;
    }

    std::size_t size() const noexcept { return ids_.size(); }
    const Pagg& pagg() const noexcept { return pagg_; }

private:
    Pagg pagg_;
    std::map<std::string, std::uint32_t> ids_;
};

/// The k-hop undirected neighborhood of a vertex, induced in its segment.
/// vertices[0] is the center; labels and edges use local positions.
struct Neighborhood
{
    struct LocalEdge
    {
        std::uint32_t src, dst;
        EdgeType type;
    };
    std::vector<VertexId> vertices;
    std::vector<std::uint32_t> labels;
    std::vector<LocalEdge> edges;
};

inline Neighborhood ptype(const ProvGraph& g, VertexId v, std::size_t k, VertexKeyer& keyer)
{
    if (v >= g.num_vertices())
        throw QueryError("ptype: vertex " + std::to_string(v) + " is not in the segment");
    Neighborhood n;
    std::unordered_map<VertexId, std::uint32_t> pos;
    n.vertices.push_back(v);
    pos.emplace(v, 0);
    std::size_t begin = 0;
    for (std::size_t hop = 0; hop < k; ++hop) {
        const auto end = n.vertices.size();
        for (auto i = begin; i < end; ++i) {
            const auto x = n.vertices[i];
            for (auto t : kAllEdgeTypes) {
                for (const auto& a : g.out(x, t))
                    if (pos.emplace(a.v, static_cast<std::uint32_t>(n.vertices.size())).second)
                        n.vertices.push_back(a.v);
                for (const auto& a : g.in(x, t))
                    if (pos.emplace(a.v, static_cast<std::uint32_t>(n.vertices.size())).second)
                        n.vertices.push_back(a.v);
            }
        }
        begin = end;
        if (begin == n.vertices.size())
            break;
    }
    for (auto x : n.vertices) {
        n.labels.push_back(keyer.key(g.vertex(x)));
        for (auto t : kAllEdgeTypes)
            for (const auto& a : g.out(x, t)) {
                auto it = pos.find(a.v);
                if (it != pos.end())
                    n.edges.push_back({pos.at(x), it->second, t});
            }
    }
    return n;
}

inline Neighborhood ptype(const ProvGraph& g, VertexId v, std::size_t k, const Pagg& pagg = {})
{
    VertexKeyer keyer(pagg);
    return ptype(g, v, k, keyer);
}

namespace detail {

// Per ordered pair, edge counts packed 6 bits per edge type.
inline std::vector<std::uint32_t> adjacency_codes(const Neighborhood& n)
{
    const auto m = n.vertices.size();
    std::vector<std::uint32_t> code(m * m, 0);
    for (const auto& e : n.edges)
        code[e.src * m + e.dst] += 1U << (6 * static_cast<unsigned>(e.type));
    return code;
}

inline bool is_star(const Neighborhood& n)
{
    return std::all_of(n.edges.begin(), n.edges.end(),
                       [](const auto& e) { return e.src == 0 || e.dst == 0; });
}

// Per neighbor: its label and the sorted (type, direction) edges it shares with the center.
inline std::vector<std::vector<std::uint32_t>> star_signature(const Neighborhood& n)
{
    std::vector<std::vector<std::uint32_t>> sig(n.vertices.size());
    for (std::size_t i = 1; i < n.vertices.size(); ++i)
        sig[i].push_back(n.labels[i]);
    std::vector<std::uint32_t> self;
    for (const auto& e : n.edges) {
        const auto code = static_cast<std::uint32_t>(e.type) * 2;
        if (e.src == 0 && e.dst == 0)
            self.push_back(code);
        else if (e.src == 0)
            sig[e.dst].push_back(100 + code);
        else
            sig[e.src].push_back(101 + code);
    }
    for (auto& s : sig)
        std::sort(s.begin() + (s.empty() ? 0 : 1), s.end());
    std::sort(self.begin(), self.end());
    sig[0] = std::move(self);
    std::sort(sig.begin() + 1, sig.end());
    return sig;
}

} // namespace detail

/// Label-preserving, edge-preserving bijection between two neighborhoods that
/// maps center to center. Backtracking with label and degree prefilters.
inline bool iso_check_backtrack(const Neighborhood& a, const Neighborhood& b, std::size_t cap = 64)
{
    const auto m = a.vertices.size();
    if (m > cap || b.vertices.size() > cap)
        throw QueryError("iso_check: neighborhood exceeds the size cap of " + std::to_string(cap));
    if (m != b.vertices.size() || a.edges.size() != b.edges.size() || a.labels[0] != b.labels[0])
        return false;
    auto la = a.labels, lb = b.labels;
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    if (la != lb)
        return false;
    const auto ca = detail::adjacency_codes(a), cb = detail::adjacency_codes(b);
    auto degree = [m](const std::vector<std::uint32_t>& code, std::size_t v) {
        std::uint64_t out = 0, in = 0;
        for (std::size_t u = 0; u < m; ++u) {
            out += code[v * m + u];
            in += code[u * m + v];
        }
        return std::pair{out, in};
    };
    std::vector<std::pair<std::uint64_t, std::uint64_t>> da(m), db(m);
    for (std::size_t v = 0; v < m; ++v) {
        da[v] = degree(ca, v);
        db[v] = degree(cb, v);
    }
    std::vector<std::uint32_t> f(m, UINT32_MAX);
    std::vector<bool> used(m, false);
    auto consistent = [&](std::size_t i, std::size_t j) {
        if (ca[i * m + i] != cb[j * m + j])
            return false;
        for (std::size_t p = 0; p < i; ++p)
            if (ca[i * m + p] != cb[j * m + f[p]] || ca[p * m + i] != cb[f[p] * m + j])
                return false;
        return true;
    };
    auto search = [&](auto&& self, std::size_t i) -> bool {
        if (i == m)
            return true;
        for (std::size_t j = i == 0 ? 0 : 1; j < (i == 0 ? 1 : m); ++j) {
            if (used[j] || a.labels[i] != b.labels[j] || da[i] != db[j] || !consistent(i, j))
                continue;
            used[j] = true;
            f[i] = static_cast<std::uint32_t>(j);
            if (self(self, i + 1))
                return true;
            used[j] = false;
        }
        f[i] = UINT32_MAX;
        return false;
    };
    return search(search, 0);
}

/// As iso_check_backtrack, with stars compared by neighbor signature multisets.
inline bool iso_check(const Neighborhood& a, const Neighborhood& b, std::size_t cap = 64)
{
    if (a.vertices.size() > cap || b.vertices.size() > cap)
        throw QueryError("iso_check: neighborhood exceeds the size cap of " + std::to_string(cap));
    if (a.vertices.size() != b.vertices.size() || a.edges.size() != b.edges.size() ||
        a.labels[0] != b.labels[0])
        return false;
    const bool sa = detail::is_star(a), sb = detail::is_star(b);
    if (sa != sb)
        return false;
    if (sa)
        return detail::star_signature(a) == detail::star_signature(b);
    return iso_check_backtrack(a, b, cap);
}

// ---------------------------------------------------------------------------
// Partition

struct Member
{
    std::uint32_t seg = 0;
    VertexId v = 0; // local id in the segment graph
    friend auto operator<=>(const Member&, const Member&) = default;
};

struct EquivalenceClass
{
    Member canonical; // smallest member
    VertexType type = VertexType::Entity;
    Props kept;
    std::size_t size = 0;
};

struct EquivalencePartition
{
    std::vector<std::vector<std::uint32_t>> class_of; // [segment][local vertex]
    std::vector<EquivalenceClass> classes;            // ordered by canonical member
};

inline void check_pagg(const std::vector<SegmentGraph>& segs, const Pagg& pagg)
{
    PropertySet universe;
    for (const auto& s : segs)
        universe.insert(s.g.property_types().begin(), s.g.property_types().end());
    for (const auto* keep : {&pagg.entity, &pagg.activity, &pagg.agent})
        for (const auto& p : *keep)
            if (!universe.count(p))
                throw QueryError("pagg: unknown property '" + p + "'");
}

inline EquivalencePartition partition(const std::vector<SegmentGraph>& segs, const Pagg& pagg,
                                      std::size_t k, std::size_t cap = 64)
{
    check_pagg(segs, pagg);
    VertexKeyer keyer(pagg);
    EquivalencePartition out;
    out.class_of.resize(segs.size());
    // cheap invariant -> classes whose representatives share it
    std::map<std::vector<std::uint32_t>, std::vector<std::uint32_t>> buckets;
    std::vector<Neighborhood> reps;
    for (std::uint32_t s = 0; s < segs.size(); ++s) {
        const auto& g = segs[s].g;
        out.class_of[s].resize(g.num_vertices());
        for (VertexId v = 0; v < g.num_vertices(); ++v) {
            auto n = ptype(g, v, k, keyer);
            if (n.vertices.size() > cap)
                throw QueryError("iso_check: neighborhood exceeds the size cap of " +
                                 std::to_string(cap));
            std::vector<std::uint32_t> inv{n.labels[0], static_cast<std::uint32_t>(n.vertices.size()),
                                           static_cast<std::uint32_t>(n.edges.size())};
            auto ls = n.labels;
            std::sort(ls.begin(), ls.end());
            inv.insert(inv.end(), ls.begin(), ls.end());
            auto& bucket = buckets[inv];
            std::optional<std::uint32_t> found;
            for (auto c : bucket)
                if (iso_check(reps[c], n, cap)) {
                    found = c;
                    break;
                }
            if (!found) {
                found = static_cast<std::uint32_t>(out.classes.size());
                EquivalenceClass c;
                c.canonical = {s, v};
                c.type = g.type(v);
                for (const auto& p : pagg.keep(c.type)) {
                    auto it = g.vertex(v).props.find(p);
                    if (it != g.vertex(v).props.end())
                        c.kept.emplace(p, it->second);
                }
                out.classes.push_back(std::move(c));
                reps.push_back(std::move(n));
                bucket.push_back(*found);
            }
            out.class_of[s][v] = *found;
            ++out.classes[*found].size;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summary graph

struct PsgVertex
{
    std::uint32_t cls = 0;
    std::vector<Member> members; // sorted
};

struct PsgEdge
{
    std::uint32_t src = 0, dst = 0;
    EdgeType type = EdgeType::Used;
    std::vector<std::uint32_t> segments; // segments contributing a constituent edge, sorted
    double freq = 0;
};

enum class MergeRule { InEquivalent, OutEquivalent, Dominated };

inline std::string_view to_string(MergeRule r)
{
    switch (r) {
    case MergeRule::InEquivalent: return "IN";
    case MergeRule::OutEquivalent: return "OUT";
    case MergeRule::Dominated: return "DOMINATED";
    }
    return "?";
}

/// One merge, in g0 vertex ids: `gone` is folded into `keep` (keep < gone).
struct MergeStep
{
    std::uint32_t keep = 0, gone = 0;
    MergeRule rule = MergeRule::InEquivalent;
    std::size_t round = 0;
};

struct SummaryGraph
{
    std::vector<PsgVertex> vertices; // ordered by smallest member
    std::vector<PsgEdge> edges;      // ordered by (src, dst)
    EquivalencePartition partition;
    std::size_t num_segments = 0;
    std::size_t total_vertices = 0; // sum of segment sizes
    std::vector<MergeStep> log;
    std::size_t rounds = 0;

    /// |V_ps| / |union of segment vertices|; 1 for an empty input.
    double compaction() const
    {
        return total_vertices == 0 ? 1.0
                                   : static_cast<double>(vertices.size()) /
                                         static_cast<double>(total_vertices);
    }
};

/// Disjoint union of the segments: one singleton vertex per segment vertex,
/// numbered segment-major.
inline SummaryGraph build_g0(const std::vector<SegmentGraph>& segs, EquivalencePartition part)
{
    SummaryGraph out;
    out.num_segments = segs.size();
    std::vector<std::uint32_t> base(segs.size() + 1, 0);
    for (std::uint32_t s = 0; s < segs.size(); ++s) {
        base[s + 1] = base[s] + static_cast<std::uint32_t>(segs[s].g.num_vertices());
        for (VertexId v = 0; v < segs[s].g.num_vertices(); ++v)
            out.vertices.push_back({part.class_of[s][v], {{s, v}}});
    }
    out.total_vertices = out.vertices.size();
    std::map<std::pair<std::uint32_t, std::uint32_t>, PsgEdge> edges;
    for (std::uint32_t s = 0; s < segs.size(); ++s)
        for (const auto& e : segs[s].g.edges()) {
            const auto a = base[s] + e.src, b = base[s] + e.dst;
            auto& pe = edges[{a, b}];
            pe.src = a;
            pe.dst = b;
            pe.type = e.type;
            if (pe.segments.empty())
                pe.segments.push_back(s);
        }
    for (auto& [_, e] : edges) {
        e.freq = static_cast<double>(e.segments.size()) / static_cast<double>(segs.size());
        out.edges.push_back(std::move(e));
    }
    out.partition = std::move(part);
    return out;
}

enum class Direction { In, Out };

/// Simulation preorder over PSG vertices: rows[u].test(v) iff u is dominated by v.
struct SimulationRelation
{
    Direction direction = Direction::In;
    std::vector<DenseBitset> rows;

    bool holds(std::uint32_t u, std::uint32_t v) const { return rows[u].test(v); }
    bool mutual(std::uint32_t u, std::uint32_t v) const { return holds(u, v) && holds(v, u); }
};

namespace detail {

struct Dag
{
    std::vector<std::uint32_t> label;
    std::vector<std::vector<std::uint32_t>> par, chi;

    std::size_t size() const { return label.size(); }

    std::vector<std::uint32_t> topo() const
    {
        const auto n = size();
        std::vector<std::uint32_t> indeg(n), order;
        order.reserve(n);
        for (std::uint32_t v = 0; v < n; ++v)
            indeg[v] = static_cast<std::uint32_t>(par[v].size());
        for (std::uint32_t v = 0; v < n; ++v)
            if (!indeg[v])
                order.push_back(v);
        for (std::size_t i = 0; i < order.size(); ++i)
            for (auto c : chi[order[i]])
                if (--indeg[c] == 0)
                    order.push_back(c);
        if (order.size() != n)
            throw std::logic_error("summary graph has a cycle");
        return order;
    }
};

inline Dag dag_of(const SummaryGraph& s)
{
    Dag d;
    d.label.resize(s.vertices.size());
    d.par.resize(s.vertices.size());
    d.chi.resize(s.vertices.size());
    for (std::size_t v = 0; v < s.vertices.size(); ++v)
        d.label[v] = s.vertices[v].cls;
    for (const auto& e : s.edges) {
        d.chi[e.src].push_back(e.dst);
        d.par[e.dst].push_back(e.src);
    }
    return d;
}

// On a DAG the greatest fixpoint is reached in one pass: whether u is dominated
// depends only on its parents (children for OUT), all settled earlier in
// topological order.
inline SimulationRelation simulate(const Dag& d, Direction dir)
{
    const auto n = static_cast<std::uint32_t>(d.size());
    SimulationRelation r;
    r.direction = dir;
    r.rows.assign(n, DenseBitset(n));
    std::map<std::uint32_t, DenseBitset> same;
    for (std::uint32_t v = 0; v < n; ++v)
        same.try_emplace(d.label[v], n).first->second.set(v);
    const auto& up = dir == Direction::In ? d.par : d.chi;
    const auto& down = dir == Direction::In ? d.chi : d.par;
    auto order = d.topo();
    if (dir == Direction::Out)
        std::reverse(order.begin(), order.end());
    // image[p]: vertices having an `up` neighbor that dominates p
    std::vector<std::optional<DenseBitset>> image(n);
    for (auto u : order) {
        auto row = same.at(d.label[u]);
        for (auto p : up[u]) {
            if (!image[p]) {
                DenseBitset img(n);
                r.rows[p].for_each([&](std::uint32_t w) {
                    for (auto c : down[w])
                        img.set(c);
                });
                image[p] = std::move(img);
            }
            row &= *image[p];
        }
        r.rows[u] = std::move(row);
    }
    return r;
}

} // namespace detail

inline SimulationRelation simulate(const SummaryGraph& s, Direction dir)
{
    return detail::simulate(detail::dag_of(s), dir);
}

struct SumOptions
{
    std::size_t k = 1;
    std::size_t iso_cap = 64;
    std::size_t max_rounds = 1000000;
};

namespace detail {

class MergeState
{
public:
    explicit MergeState(const SummaryGraph& g0) : n_(g0.vertices.size()), segs_(g0.num_segments)
    {
        alive_.assign(n_, true);
        verts_ = g0.vertices;
        par_.resize(n_);
        chi_.resize(n_);
        for (const auto& e : g0.edges) {
            edges_[{e.src, e.dst}] = e;
            chi_[e.src].insert(e.dst);
            par_[e.dst].insert(e.src);
        }
    }

    std::vector<std::uint32_t> alive() const
    {
        std::vector<std::uint32_t> out;
        for (std::uint32_t v = 0; v < n_; ++v)
            if (alive_[v])
                out.push_back(v);
        return out;
    }

    Dag dag(const std::vector<std::uint32_t>& ids) const
    {
        std::unordered_map<std::uint32_t, std::uint32_t> pos;
        for (std::uint32_t i = 0; i < ids.size(); ++i)
            pos.emplace(ids[i], i);
        Dag d;
        d.label.resize(ids.size());
        d.par.resize(ids.size());
        d.chi.resize(ids.size());
        for (std::uint32_t i = 0; i < ids.size(); ++i) {
            d.label[i] = verts_[ids[i]].cls;
            for (auto c : chi_[ids[i]]) {
                d.chi[i].push_back(pos.at(c));
                d.par[pos.at(c)].push_back(i);
            }
        }
        return d;
    }

    bool reaches(std::uint32_t from, std::uint32_t to) const
    {
        std::vector<std::uint32_t> stack{from};
        std::set<std::uint32_t> seen{from};
        while (!stack.empty()) {
            const auto x = stack.back();
            stack.pop_back();
            if (x == to)
                return true;
            for (auto c : chi_[x])
                if (seen.insert(c).second)
                    stack.push_back(c);
        }
        return false;
    }

    bool connected(std::uint32_t a, std::uint32_t b) const { return reaches(a, b) || reaches(b, a); }

    void merge(std::uint32_t keep, std::uint32_t gone)
    {
        auto& km = verts_[keep].members;
        const auto& gm = verts_[gone].members;
        km.insert(km.end(), gm.begin(), gm.end());
        std::sort(km.begin(), km.end());
        for (auto p : std::vector<std::uint32_t>(par_[gone].begin(), par_[gone].end()))
            move_edge(p, gone, p, keep);
        for (auto c : std::vector<std::uint32_t>(chi_[gone].begin(), chi_[gone].end()))
            move_edge(gone, c, keep, c);
        alive_[gone] = false;
        verts_[gone].members.clear();
    }

    SummaryGraph finish(SummaryGraph base) const
    {
        const auto ids = alive();
        std::unordered_map<std::uint32_t, std::uint32_t> pos;
        base.vertices.clear();
        for (std::uint32_t i = 0; i < ids.size(); ++i) {
            pos.emplace(ids[i], i);
            base.vertices.push_back(verts_[ids[i]]);
        }
        base.edges.clear();
        for (const auto& [key, e] : edges_) {
            auto x = e;
            x.src = pos.at(key.first);
            x.dst = pos.at(key.second);
            x.freq = static_cast<double>(x.segments.size()) / static_cast<double>(segs_);
            base.edges.push_back(std::move(x));
        }
        std::sort(base.edges.begin(), base.edges.end(),
                  [](const PsgEdge& a, const PsgEdge& b) { return std::pair{a.src, a.dst} < std::pair{b.src, b.dst}; });
        return base;
    }

private:
    void move_edge(std::uint32_t a, std::uint32_t b, std::uint32_t na, std::uint32_t nb)
    {
        auto node = edges_.extract({a, b});
        chi_[a].erase(b);
        par_[b].erase(a);
        auto& e = node.mapped();
        auto [it, fresh] = edges_.try_emplace({na, nb}, e);
        if (!fresh) {
            std::vector<std::uint32_t> u;
            std::set_union(it->second.segments.begin(), it->second.segments.end(), e.segments.begin(),
                           e.segments.end(), std::back_inserter(u));
            it->second.segments = std::move(u);
        }
        chi_[na].insert(nb);
        par_[nb].insert(na);
    }

    std::size_t n_;
    std::size_t segs_;
    std::vector<bool> alive_;
    std::vector<PsgVertex> verts_;
    std::vector<std::set<std::uint32_t>> par_, chi_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, PsgEdge> edges_;
};

} // namespace detail

/// Rounds of: simulate both ways on the current graph, merge whole IN- then
/// OUT-equivalence classes, then dominated pairs one at a time. A vertex takes
/// part in at most one merge per round, so every merge is justified by
/// relations that still hold for its endpoints. Pairs joined by a path are
/// never merged.
inline SummaryGraph summarize_g0(SummaryGraph g0, const SumOptions& opt = {})
{
    detail::MergeState st(g0);
    g0.log.clear();
    std::size_t round = 0;
    for (; round < opt.max_rounds; ++round) {
        const auto ids = st.alive();
        const auto dag = st.dag(ids);
        const auto in = detail::simulate(dag, Direction::In);
        const auto out = detail::simulate(dag, Direction::Out);
        const auto n = static_cast<std::uint32_t>(ids.size());
        std::vector<bool> touched(n, false);
        std::size_t merges = 0;
        auto merge = [&](std::uint32_t i, std::uint32_t j, MergeRule rule) {
            const auto keep = std::min(ids[i], ids[j]), gone = std::max(ids[i], ids[j]);
            st.merge(keep, gone);
            g0.log.push_back({keep, gone, rule, round});
            touched[i] = touched[j] = true;
            ++merges;
        };
        for (const auto& [rel, rule] : {std::pair{&in, MergeRule::InEquivalent},
                                        std::pair{&out, MergeRule::OutEquivalent}}) {
            for (std::uint32_t i = 0; i < n; ++i) {
                if (touched[i])
                    continue;
                std::vector<std::uint32_t> cls;
                rel->rows[i].for_each([&](std::uint32_t j) {
                    if (j > i && !touched[j] && rel->holds(j, i))
                        cls.push_back(j);
                });
                for (auto j : cls)
                    if (!st.connected(ids[i], ids[j]))
                        merge(i, j, rule);
            }
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            if (touched[i])
                continue;
            auto cand = in.rows[i];
            cand &= out.rows[i];
            std::optional<std::uint32_t> pick;
            cand.for_each([&](std::uint32_t j) {
                if (!pick && j != i && !touched[j] && !st.connected(ids[i], ids[j]))
                    pick = j;
            });
            if (pick)
                merge(i, *pick, MergeRule::Dominated);
        }
        if (!merges)
            break;
        (void)st.dag(st.alive()).topo(); // stays acyclic
    }
    g0.rounds = round;
    return st.finish(std::move(g0));
}

inline SummaryGraph summarize(const std::vector<SegmentGraph>& segs, const Pagg& pagg,
                              const SumOptions& opt = {})
{
    if (segs.empty())
        throw QueryError("summarize: no segments");
    return summarize_g0(build_g0(segs, partition(segs, pagg, opt.k, opt.iso_cap)), opt);
}

inline double compaction_ratio(const SummaryGraph& s) { return s.compaction(); }

// ---------------------------------------------------------------------------
// JSON and DOT

inline Json to_json(const Pagg& p)
{
    auto arr = [](const PropertySet& s) { return Json(std::vector<std::string>(s.begin(), s.end())); };
    return Json{{"entity", arr(p.entity)}, {"activity", arr(p.activity)}, {"agent", arr(p.agent)}};
}

inline Pagg pagg_from_json(const Json& j)
{
    if (!j.is_object())
        throw DataError("pagg must be an object");
    Pagg p;
    for (const auto& [key, field] : {std::pair{"entity", &p.entity}, std::pair{"activity", &p.activity},
                                     std::pair{"agent", &p.agent}}) {
        if (!j.contains(key))
            continue;
        if (!j[key].is_array())
            throw DataError(std::string("pagg.") + key + " must be an array of strings");
        for (const auto& x : j[key]) {
            if (!x.is_string())
                throw DataError(std::string("pagg.") + key + " must be an array of strings");
            field->insert(x.get<std::string>());
        }
    }
    for (const auto& [key, _] : j.items())
        if (key != "entity" && key != "activity" && key != "agent")
            throw DataError("pagg: unknown field '" + key + "'");
    return p;
}

inline std::string class_label(const EquivalenceClass& c, std::uint32_t id)
{
    std::string s = "c" + std::to_string(id) + ":" + std::string(to_string(c.type));
    if (!c.kept.empty()) {
        s += '{';
        bool first = true;
        for (const auto& [k, v] : c.kept) {
            s += (first ? "" : ",") + k + "=" + prop_to_string(v);
            first = false;
        }
        s += '}';
    }
    return s;
}

/// `segs` maps members back to ids of the graphs the segments were cut from.
inline Json to_json(const SummaryGraph& s, const std::vector<SegmentGraph>* segs = nullptr)
{
    Json vs = Json::array();
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
        const auto& v = s.vertices[i];
        const auto& c = s.partition.classes.at(v.cls);
        Json members = Json::array();
        for (const auto& m : v.members)
            members.push_back({m.seg, segs ? (*segs)[m.seg].origin_of(m.v) : m.v});
        vs.push_back({{"id", i},
                      {"classLabel", class_label(c, v.cls)},
                      {"class", v.cls},
                      {"type", to_string(c.type)},
                      {"memberCount", v.members.size()},
                      {"members", std::move(members)}});
    }
    Json es = Json::array();
    for (const auto& e : s.edges)
        es.push_back({{"src", e.src}, {"dst", e.dst}, {"type", to_string(e.type)}, {"freq", e.freq}});
    return Json{{"vertices", std::move(vs)},
                {"edges", std::move(es)},
                {"numSegments", s.num_segments},
                {"totalVertices", s.total_vertices},
                {"compaction", s.compaction()}};
}

inline std::string to_dot(const SummaryGraph& s)
{
    std::ostringstream o;
    o << "digraph psg {\n  rankdir=LR;\n";
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
        const auto& v = s.vertices[i];
        const auto& c = s.partition.classes.at(v.cls);
        o << "  v" << i << " [shape=" << dot_shape(c.type) << ", label=\""
          << dot_escape(class_label(c, v.cls)) << " x" << v.members.size() << "\"];\n";
    }
    for (const auto& e : s.edges) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", e.freq);
        o << "  v" << e.src << " -> v" << e.dst << " [label=\"" << buf << "\"];\n";
    }
    o << "}\n";
    return o.str();
}

} // namespace provq
