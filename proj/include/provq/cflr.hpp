#pragma once

// Generic worklist CFL-reachability over a normal-form grammar, with a lazy
// derivation view over the resulting history.

#include <array>
#include <functional>
#include <map>
#include <set>
#include <optional>

#include "provq/fact_store.hpp"
#include "provq/labels.hpp"

namespace provq {

struct SolverOptions
{
    Backend backend = Backend::Plain;
    /// Derive new facts by word-parallel set difference against H instead of one
    /// membership probe per candidate.
    bool fast_set = false;
    std::size_t fact_budget = 0; // 0: unlimited
    WorkOrder order = WorkOrder::Fifo;
};

struct SolverStats
{
    std::size_t facts = 0;     // |H|
    std::size_t processed = 0; // facts dequeued and expanded
    std::size_t levels = 0;    // level-synchronous algorithms only
};

inline constexpr EdgeId kNoEdge = static_cast<EdgeId>(-1);

namespace detail {

/// Successors w of v under a terminal symbol: pairs (v, w) in the relation.
template <class F>
void terminal_succ(const ProvGraph& g, const LabelOracle& lab, const Symbol& s, VertexId v, F&& f)
{
    switch (s.kind) {
    case Symbol::Kind::Edge: {
        auto adj = s.inverse ? g.in(v, s.edge) : g.out(v, s.edge);
        for (const auto& a : adj)
            if (lab.edge_alive(a.e))
                f(a.v, a.e);
        break;
    }
    case Symbol::Kind::VertexLabel:
        if (g.type(v) == s.vtype && lab.vertex_alive(v))
            f(v, kNoEdge);
        break;
    case Symbol::Kind::Vertex:
        if (v == s.vertex)
            f(v, kNoEdge);
        break;
    case Symbol::Kind::Nonterminal: break;
    }
}

/// Predecessors u of v under a terminal symbol: pairs (u, v) in the relation.
template <class F>
void terminal_pred(const ProvGraph& g, const LabelOracle& lab, const Symbol& s, VertexId v, F&& f)
{
    if (s.kind == Symbol::Kind::Edge) {
        auto adj = s.inverse ? g.out(v, s.edge) : g.in(v, s.edge);
        for (const auto& a : adj)
            if (lab.edge_alive(a.e))
                f(a.v, a.e);
        return;
    }
    terminal_succ(g, lab, s, v, f);
}

/// Every pair of a terminal relation.
template <class F>
void terminal_pairs(const ProvGraph& g, const LabelOracle& lab, const Symbol& s, F&& f)
{
    switch (s.kind) {
    case Symbol::Kind::Edge:
        for (const auto& e : g.edges())
            if (e.type == s.edge && lab.edge_alive(e.id)) {
                if (s.inverse)
                    f(e.dst, e.src, e.id);
                else
                    f(e.src, e.dst, e.id);
            }
        break;
    case Symbol::Kind::VertexLabel:
        for (auto v : g.vertices_of(s.vtype))
            if (lab.vertex_alive(v))
                f(v, v, kNoEdge);
        break;
    case Symbol::Kind::Vertex:
        if (s.vertex < g.num_vertices())
            f(s.vertex, s.vertex, kNoEdge);
        break;
    case Symbol::Kind::Nonterminal: break;
    }
}

/// Label check for a vertex-label symbol consumed at `at` inside a binary rule
/// whose other fact endpoint is `other`.
inline bool label_ok(const ProvGraph& g, const LabelOracle& lab, const Symbol& s, VertexId at,
                     VertexId other)
{
    if (g.type(at) != s.vtype || !lab.vertex_alive(at))
        return false;
    return !s.match || lab.same_label(at, other);
}

struct RuleIndex
{
    struct Bin
    {
        std::uint32_t lhs;
        std::uint32_t prod;
        Symbol other;
    };
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> unit; // B -> (A, prod)
    std::vector<std::vector<Bin>> as_left;  // A -> B Y, indexed by B
    std::vector<std::vector<Bin>> as_right; // A -> X B, indexed by B
    std::vector<bool> need_cols;

    RuleIndex(const Grammar& gr, bool fast_set)
    {
        const auto n = gr.num_nonterminals();
        unit.resize(n);
        as_left.resize(n);
        as_right.resize(n);
        need_cols.assign(n, fast_set);
        for (std::uint32_t pi = 0; pi < gr.productions().size(); ++pi) {
            const auto& p = gr.productions()[pi];
            if (p.rhs.size() == 1 && !p.rhs[0].is_terminal())
                unit[p.rhs[0].nt].push_back({p.lhs, pi});
            if (p.rhs.size() != 2)
                continue;
            const auto& x = p.rhs[0];
            const auto& y = p.rhs[1];
            if (!x.is_terminal())
                as_left[x.nt].push_back({p.lhs, pi, y});
            if (!y.is_terminal()) {
                as_right[y.nt].push_back({p.lhs, pi, x});
                if (!x.is_terminal())
                    need_cols[x.nt] = true; // X's column is scanned when Y pops
            }
        }
    }
};

} // namespace detail

/// Result of the generic solver: H (and an empty W) plus counters.
template <class Set>
struct CflrRun
{
    FactStore<Set> store;
    SolverStats stats;
};

/// Subcubic-style worklist solver: seeds every single-terminal rule, then pops
/// facts and extends them through each rule that mentions their nonterminal.
/// `nf` must be in normal form. Throws BudgetExceeded when the fact budget is hit.
template <class Set>
CflrRun<Set> cflr_solve(const ProvGraph& g, const Grammar& nf, const LabelOracle& lab,
                        const SolverOptions& opt = {})
{
    if (!nf.normal_form())
        throw std::invalid_argument("grammar is not in normal form");
    detail::RuleIndex idx(nf, opt.fast_set);
    CflrRun<Set> run{FactStore<Set>(g, nf, idx.need_cols, opt.fact_budget, opt.order), {}};
    auto& H = run.store;

    // Seeds: rules whose right-hand side is all terminals.
    for (const auto& p : nf.productions()) {
        if (p.rhs.size() == 1 && p.rhs[0].is_terminal()) {
            detail::terminal_pairs(g, lab, p.rhs[0], [&](VertexId u, VertexId v, EdgeId) {
                if (H.fits_row(p.lhs, u) && H.fits_col(p.lhs, v))
                    H.add(p.lhs, u, v);
            });
        } else if (p.rhs.size() == 2 && p.rhs[0].is_terminal() && p.rhs[1].is_terminal()) {
            detail::terminal_pairs(g, lab, p.rhs[0], [&](VertexId u, VertexId w, EdgeId) {
                if (p.rhs[0].kind == Symbol::Kind::VertexLabel && p.rhs[0].match)
                    return;
                detail::terminal_succ(g, lab, p.rhs[1], w, [&](VertexId v, EdgeId) {
                    if (p.rhs[1].kind == Symbol::Kind::VertexLabel && p.rhs[1].match &&
                        !lab.same_label(v, u))
                        return;
                    if (H.fits_row(p.lhs, u) && H.fits_col(p.lhs, v))
                        H.add(p.lhs, u, v);
                });
            });
        }
    }

    auto add = [&](std::uint32_t a, VertexId u, VertexId v) {
        if (H.fits_row(a, u) && H.fits_col(a, v))
            H.add(a, u, v);
    };

    std::vector<DenseBitset> scratch_row(nf.num_nonterminals()), scratch_col(nf.num_nonterminals());
    if (opt.fast_set)
        for (std::uint32_t a = 0; a < nf.num_nonterminals(); ++a) {
            scratch_row[a] = DenseBitset(H.col_universe(a));
            scratch_col[a] = DenseBitset(H.row_universe(a));
        }

    std::uint32_t b = 0;
    VertexId u = 0;
    std::vector<VertexId> vs;
    while (H.pop(b, u, vs)) {
        for (auto v : vs) {
            ++run.stats.processed;
            for (const auto& [a, _] : idx.unit[b])
                add(a, u, v);

            for (const auto& r : idx.as_left[b]) { // A(u, w) <- B(u, v) Y(v, w)
                const auto& y = r.other;
                if (y.kind == Symbol::Kind::Nonterminal) {
                    H.for_each_in_row(y.nt, v, [&](VertexId w) { add(r.lhs, u, w); });
                } else if (y.kind == Symbol::Kind::VertexLabel) {
                    if (detail::label_ok(g, lab, y, v, u))
                        add(r.lhs, u, v);
                } else if (opt.fast_set && y.kind == Symbol::Kind::Edge && H.fits_row(r.lhs, u)) {
                    auto& cand = scratch_row[r.lhs];
                    cand.clear();
                    detail::terminal_succ(g, lab, y, v, [&](VertexId w, EdgeId) {
                        if (H.fits_col(r.lhs, w))
                            cand.set(H.col_index(r.lhs, w));
                    });
                    H.diff_row(r.lhs, u, cand);
                    cand.for_each([&](std::uint32_t c) { add(r.lhs, u, H.col_vertex(r.lhs, c)); });
                } else {
                    detail::terminal_succ(g, lab, y, v, [&](VertexId w, EdgeId) { add(r.lhs, u, w); });
                }
            }

            for (const auto& r : idx.as_right[b]) { // A(w, v) <- X(w, u) B(u, v)
                const auto& x = r.other;
                if (x.kind == Symbol::Kind::Nonterminal) {
                    H.for_each_in_col(x.nt, u, [&](VertexId w) { add(r.lhs, w, v); });
                } else if (x.kind == Symbol::Kind::VertexLabel) {
                    if (detail::label_ok(g, lab, x, u, v))
                        add(r.lhs, u, v);
                } else if (opt.fast_set && x.kind == Symbol::Kind::Edge && H.fits_col(r.lhs, v)) {
                    auto& cand = scratch_col[r.lhs];
                    cand.clear();
                    detail::terminal_pred(g, lab, x, u, [&](VertexId w, EdgeId) {
                        if (H.fits_row(r.lhs, w))
                            cand.set(H.row_index(r.lhs, w));
                    });
                    H.diff_col(r.lhs, v, cand);
                    cand.for_each([&](std::uint32_t c) { add(r.lhs, H.row_vertex(r.lhs, c), v); });
                } else {
                    detail::terminal_pred(g, lab, x, u, [&](VertexId w, EdgeId) { add(r.lhs, w, v); });
                }
            }
        }
    }
    run.stats.facts = H.size();
    return run;
}

// ---------------------------------------------------------------------------
// Derivations

struct Derivation
{
    std::uint32_t production = 0;
    std::array<Fact, 2> children{};
    std::uint8_t num_children = 0;
    std::array<EdgeId, 2> edges{kNoEdge, kNoEdge};
    /// Split vertex for binary rules (the w in X(u, w) Y(w, v)).
    VertexId split = kNoVertex;
};

/// Enumerates, on demand, every way a fact in H is derived by one production
/// from facts in H and graph terminals. Stores nothing beyond H itself.
template <class Set>
class DerivationView
{
public:
    DerivationView(const ProvGraph& g, const Grammar& nf, const LabelOracle& lab,
                   const FactStore<Set>& h)
        : g_(&g), gr_(&nf), lab_(&lab), h_(&h)
    {
        by_lhs_.resize(nf.num_nonterminals());
        for (std::uint32_t pi = 0; pi < nf.productions().size(); ++pi)
            by_lhs_[nf.productions()[pi].lhs].push_back(pi);
    }

    bool holds(const Fact& f) const { return h_->contains(f.nt, f.i, f.j); }

    template <class F>
    void for_each(const Fact& f, F&& cb) const
    {
        for (auto pi : by_lhs_[f.nt]) {
            const auto& p = gr_->productions()[pi];
            if (p.rhs.size() == 1)
                one(pi, p.rhs[0], f, cb);
            else
                two(pi, p.rhs[0], p.rhs[1], f, cb);
        }
    }

    std::size_t count(const Fact& f) const
    {
        std::size_t n = 0;
        for_each(f, [&](const Derivation&) { ++n; });
        return n;
    }

private:
    template <class F>
    void one(std::uint32_t pi, const Symbol& s, const Fact& f, F& cb) const
    {
        Derivation d;
        d.production = pi;
        if (s.is_terminal()) {
            detail::terminal_succ(*g_, *lab_, s, f.i, [&](VertexId w, EdgeId e) {
                if (w == f.j) {
                    d.edges[0] = e;
                    cb(d);
                }
            });
        } else if (h_->contains(s.nt, f.i, f.j)) {
            d.children[0] = {s.nt, f.i, f.j};
            d.num_children = 1;
            cb(d);
        }
    }

    template <class F>
    void two(std::uint32_t pi, const Symbol& x, const Symbol& y, const Fact& f, F& cb) const
    {
        const auto u = f.i, v = f.j;
        auto emit = [&](VertexId w, EdgeId ex, EdgeId ey) {
            Derivation d;
            d.production = pi;
            d.split = w;
            d.edges = {ex, ey};
            if (!x.is_terminal())
                d.children[d.num_children++] = {x.nt, u, w};
            if (!y.is_terminal())
                d.children[d.num_children++] = {y.nt, w, v};
            cb(d);
        };
        if (x.is_terminal()) {
            if (x.kind == Symbol::Kind::VertexLabel) {
                if (!detail::label_ok(*g_, *lab_, x, u, v))
                    return;
                if (y.is_terminal()) {
                    detail::terminal_succ(*g_, *lab_, y, u, [&](VertexId w, EdgeId e) {
                        if (w == v)
                            emit(u, kNoEdge, e);
                    });
                } else if (h_->contains(y.nt, u, v)) {
                    emit(u, kNoEdge, kNoEdge);
                }
                return;
            }
            detail::terminal_succ(*g_, *lab_, x, u, [&](VertexId w, EdgeId ex) {
                if (y.is_terminal()) {
                    if (y.kind == Symbol::Kind::VertexLabel) {
                        if (w == v && detail::label_ok(*g_, *lab_, y, v, u))
                            emit(w, ex, kNoEdge);
                        return;
                    }
                    detail::terminal_succ(*g_, *lab_, y, w, [&](VertexId z, EdgeId ey) {
                        if (z == v)
                            emit(w, ex, ey);
                    });
                } else if (h_->contains(y.nt, w, v)) {
                    emit(w, ex, kNoEdge);
                }
            });
            return;
        }
        // x is a nonterminal
        if (y.is_terminal()) {
            if (y.kind == Symbol::Kind::VertexLabel) {
                if (detail::label_ok(*g_, *lab_, y, v, u) && h_->contains(x.nt, u, v))
                    emit(v, kNoEdge, kNoEdge);
                return;
            }
            detail::terminal_pred(*g_, *lab_, y, v, [&](VertexId w, EdgeId ey) {
                if (h_->contains(x.nt, u, w))
                    emit(w, kNoEdge, ey);
            });
            return;
        }
        h_->for_each_in_row(x.nt, u, [&](VertexId w) {
            if (h_->contains(y.nt, w, v))
                emit(w, kNoEdge, kNoEdge);
        });
    }

    const ProvGraph* g_;
    const Grammar* gr_;
    const LabelOracle* lab_;
    const FactStore<Set>* h_;
    std::vector<std::vector<std::uint32_t>> by_lhs_;
};

/// Vertices appearing in any fact reachable from `starts` through derivations.
/// Every such fact sits inside some derivation tree of a start fact, so its
/// endpoints lie on a qualifying path.
template <class Set>
DenseBitset derivation_closure(const ProvGraph& g, const Grammar& nf, const LabelOracle& lab,
                               const FactStore<Set>& h, const std::vector<Fact>& starts,
                               std::size_t* visited_count = nullptr)
{
    DerivationView<Set> view(g, nf, lab, h);
    FactStore<Set> seen(g, nf);
    DenseBitset out(g.num_vertices());
    for (const auto& f : starts)
        if (h.contains(f.nt, f.i, f.j))
            seen.add(f.nt, f.i, f.j);
    std::uint32_t nt = 0;
    VertexId i = 0;
    std::vector<VertexId> js;
    while (seen.pop(nt, i, js)) {
        for (auto j : js) {
            out.set(i);
            out.set(j);
            view.for_each(Fact{nt, i, j}, [&](const Derivation& d) {
                for (std::uint8_t c = 0; c < d.num_children; ++c) {
                    const auto& ch = d.children[c];
                    seen.add(ch.nt, ch.i, ch.j);
                }
            });
        }
    }
    if (visited_count)
        *visited_count = seen.size();
    return out;
}

/// A concrete walk witnessing `start` and passing through a fact that has
/// `through` as an endpoint (any walk if `through` is nullopt). Intended for small
/// graphs: it keeps a parent map of visited facts. Returns the vertex sequence,
/// or an empty vector when no witness exists.
template <class Set>
std::vector<VertexId> witness_walk(const ProvGraph& g, const Grammar& nf, const LabelOracle& lab,
                                   const FactStore<Set>& h, const Fact& start,
                                   std::optional<VertexId> through = std::nullopt)
{
    if (!h.contains(start.nt, start.i, start.j))
        return {};
    DerivationView<Set> view(g, nf, lab, h);
    // BFS for a fact touching `through`, remembering how each fact was reached.
    std::map<Fact, std::pair<Fact, Derivation>> parent;
    std::vector<Fact> queue{start};
    std::optional<Fact> target;
    parent.emplace(start, std::pair<Fact, Derivation>{start, Derivation{}});
    for (std::size_t qi = 0; qi < queue.size() && !target; ++qi) {
        const auto f = queue[qi];
        if (!through || f.i == *through || f.j == *through) {
            target = f;
            break;
        }
        view.for_each(f, [&](const Derivation& d) {
            for (std::uint8_t c = 0; c < d.num_children; ++c)
                if (parent.emplace(d.children[c], std::pair<Fact, Derivation>{f, d}).second)
                    queue.push_back(d.children[c]);
        });
    }
    if (!target)
        return {};

    // Chain of (fact, derivation used) from start down to target.
    std::vector<std::pair<Fact, Derivation>> chain;
    {
        std::vector<std::pair<Fact, Derivation>> rev;
        for (auto f = *target; !(f == start);) {
            const auto& [pf, pd] = parent.at(f);
            rev.push_back({pf, pd});
            f = pf;
        }
        chain.assign(rev.rbegin(), rev.rend());
    }
    // Continue below target to a base derivation. Facts strictly shrink in the
    // grammars this library builds, but guard against cycles anyway.
    std::set<Fact> on_path;
    for (const auto& c : chain)
        on_path.insert(c.first);
    std::function<bool(const Fact&)> descend = [&](const Fact& f) -> bool {
        on_path.insert(f);
        bool done = false;
        view.for_each(f, [&](const Derivation& d) {
            if (done)
                return;
            if (d.num_children == 0) {
                chain.push_back({f, d});
                done = true;
                return;
            }
            if (d.num_children == 1 && !on_path.count(d.children[0])) {
                chain.push_back({f, d});
                if (descend(d.children[0]))
                    done = true;
                else
                    chain.pop_back();
            }
        });
        on_path.erase(f);
        return done;
    };
    if (!descend(*target))
        return {};

    // Rebuild the walk: left part grows outside-in from start.i, right part grows
    // outside-in from start.j.
    std::vector<VertexId> left{start.i}, right{start.j};
    for (const auto& [f, d] : chain) {
        const auto& p = nf.productions()[d.production];
        if (p.rhs.size() == 2) {
            const auto& x = p.rhs[0];
            const auto& y = p.rhs[1];
            if (x.kind == Symbol::Kind::Edge && !y.is_terminal())
                left.push_back(d.split);
            else if (y.kind == Symbol::Kind::Edge && !x.is_terminal())
                right.push_back(d.split);
            else if (x.kind == Symbol::Kind::Edge && y.kind == Symbol::Kind::Edge)
                left.push_back(d.split);
        }
    }
    std::vector<VertexId> walk = left;
    if (!right.empty() && right.back() == walk.back())
        right.pop_back();
    walk.insert(walk.end(), right.rbegin(), right.rend());
    return walk;
}

} // namespace provq
