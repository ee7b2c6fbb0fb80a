#pragma once

// The segmentation operator: induce (NP, NS, NE, NA) then adjust (boundary
// criteria) over a cached induction.

#include <algorithm>
#include <bit>
#include <chrono>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "provq/boundary.hpp"
#include "provq/cflr.hpp"

namespace provq {

enum class Algorithm { Baseline, Seg, Tst };

inline std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::Baseline: return "BASELINE";
    case Algorithm::Seg: return "SEG";
    case Algorithm::Tst: return "TST";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view s)
{
    std::string u(s);
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto a : {Algorithm::Baseline, Algorithm::Seg, Algorithm::Tst})
        if (to_string(a) == u)
            return a;
    throw DataError("unknown algorithm '" + std::string(s) + "'");
}

inline Backend parse_backend(std::string_view s)
{
    std::string u(s);
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    if (u == "PLAIN")
        return Backend::Plain;
    if (u == "COMPRESSED")
        return Backend::Compressed;
    throw DataError("unknown backend '" + std::string(s) + "'");
}

struct SegOptions
{
    Backend backend = Backend::Plain;
    std::size_t fact_budget = 0;         // 0: unlimited
    bool early_stop = true;              // only effective on temporally ordered graphs
    bool prune = true;                   // SEG symmetric pruning
    bool fast_set = false;               // BASELINE fast-set derivation
    bool derived_in_paths = false;       // let wasDerivedFrom edges form direct paths (NP)
    std::size_t max_levels = 0;          // TST level cap; 0: |V|
    std::uint32_t max_expansion_k = kDefaultMaxExpansionK;
    /// Property-constrained labels: vertices of a listed type are labeled by
    /// the value of the given property, so matched sides must agree on it.
    std::map<VertexType, std::string> label_props;
};

struct SegQuery
{
    std::vector<VertexId> src;
    std::vector<VertexId> dst;
    BoundarySpec boundary;
    Algorithm algorithm = Algorithm::Tst;
    SegOptions options;
};

enum class Tag : std::uint8_t { Src, Dst, Np, Ns, Ne, Na, Expanded };

inline std::string_view to_string(Tag t)
{
    switch (t) {
    case Tag::Src: return "SRC";
    case Tag::Dst: return "DST";
    case Tag::Np: return "NP";
    case Tag::Ns: return "NS";
    case Tag::Ne: return "NE";
    case Tag::Na: return "NA";
    case Tag::Expanded: return "EXPANDED";
    }
    return "?";
}

inline Tag parse_tag(std::string_view s)
{
    for (auto t : {Tag::Src, Tag::Dst, Tag::Np, Tag::Ns, Tag::Ne, Tag::Na, Tag::Expanded})
        if (to_string(t) == s)
            return t;
    throw DataError("unknown tag '" + std::string(s) + "'");
}

/// Output of one V_NS algorithm.
struct NsResult
{
    std::vector<VertexId> vertices; // sorted
    SolverStats stats;
};

// ---------------------------------------------------------------------------
// Query checks and labels

inline std::vector<VertexId> sorted_unique(std::vector<VertexId> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline void check_entities(const ProvGraph& g, const std::vector<VertexId>& ids, const char* what)
{
    if (ids.empty())
        throw QueryError(std::string(what) + " set is empty");
    for (auto v : ids) {
        if (v >= g.num_vertices())
            throw QueryError(std::string(what) + " " + std::to_string(v) + " is not a vertex");
        if (g.type(v) != VertexType::Entity)
            throw QueryError(std::string(what) + " " + std::to_string(v) + " is not an entity");
    }
}

inline void check_query(const ProvGraph& g, const SegQuery& q)
{
    check_entities(g, q.src, "source");
    check_entities(g, q.dst, "destination");
}

/// Effective labels for a query: plain or property-constrained, with the query's
/// exclusions mapped to epsilon. Source and destination entities stay labeled.
inline LabelOracle query_labels(const ProvGraph& g, const SegQuery& q)
{
    LabelOracle lab(g, q.options.label_props);
    std::set<VertexId> exempt(q.src.begin(), q.src.end());
    exempt.insert(q.dst.begin(), q.dst.end());
    q.boundary.apply(g, lab, exempt);
    return lab;
}

inline std::int64_t min_seq(const ProvGraph& g, const std::vector<VertexId>& vs)
{
    std::int64_t m = std::numeric_limits<std::int64_t>::max();
    for (auto v : vs)
        m = std::min(m, g.seq(v));
    return m;
}

// ---------------------------------------------------------------------------
// V_NP: interior vertices of raw-direction paths from a destination to a source.

inline DenseBitset reach(const ProvGraph& g, const std::vector<VertexId>& from, bool forward,
                         const LabelOracle& lab, bool derived)
{
    DenseBitset seen(g.num_vertices());
    std::vector<VertexId> stack;
    for (auto v : from)
        if (seen.insert(v))
            stack.push_back(v);
    std::vector<EdgeType> types{EdgeType::Used, EdgeType::WasGeneratedBy};
    if (derived)
        types.push_back(EdgeType::WasDerivedFrom);
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto t : types)
            for (const auto& a : forward ? g.out(v, t) : g.in(v, t))
                if (lab.edge_alive(a.e) && lab.vertex_alive(a.v) && seen.insert(a.v))
                    stack.push_back(a.v);
    }
    return seen;
}

inline std::vector<VertexId> induce_np(const ProvGraph& g, const std::vector<VertexId>& src,
                                       const std::vector<VertexId>& dst, const LabelOracle& lab,
                                       bool derived = false)
{
    auto f = reach(g, dst, true, lab, derived);
    const auto b = reach(g, src, false, lab, derived);
    f &= b;
    for (auto v : src)
        f.reset(v);
    for (auto v : dst)
        f.reset(v);
    return f.to_vector();
}

// ---------------------------------------------------------------------------
// V_NS, BASELINE: generic solver on the normal form.

template <class Set>
NsResult induce_ns_baseline_with(const ProvGraph& g, const std::vector<VertexId>& src,
                                 const std::vector<VertexId>& dst, const LabelOracle& lab,
                                 const SegOptions& opt)
{
    const auto nf = build_sim_normal_form(g, dst);
    SolverOptions so;
    so.backend = opt.backend;
    so.fact_budget = opt.fact_budget;
    so.fast_set = opt.fast_set;
    auto run = cflr_solve<Set>(g, nf, lab, so);
    const auto re = nf.find("Re"), qd = nf.find("Qd");
    std::vector<Fact> starts;
    for (auto s : src) {
        run.store.for_each_in_row(re, s, [&](VertexId y) { starts.push_back({re, s, y}); });
        if (run.store.contains(qd, s, s))
            starts.push_back({qd, s, s});
    }
    auto vs = derivation_closure(g, nf, lab, run.store, starts);
    return {vs.to_vector(), run.stats};
}

inline NsResult induce_ns_baseline(const ProvGraph& g, const std::vector<VertexId>& src,
                                   const std::vector<VertexId>& dst, const LabelOracle& lab,
                                   const SegOptions& opt = {})
{
    if (opt.backend == Backend::Compressed)
        return induce_ns_baseline_with<CompressedPairSet>(g, src, dst, lab, opt);
    return induce_ns_baseline_with<PlainPairSet>(g, src, dst, lab, opt);
}

// ---------------------------------------------------------------------------
// V_NS, SEG: worklist over the rewritten grammar. Aa facts go to W directly,
// symmetric facts are kept once (smaller id first), and Aa facts whose two
// activities both predate every source are not expanded.

template <class Set>
class SegSolver
{
public:
    static constexpr std::uint32_t kEe = 0;
    static constexpr std::uint32_t kAa = 1;

    SegSolver(const ProvGraph& g, const std::vector<VertexId>& src, const std::vector<VertexId>& dst,
              const LabelOracle& lab, const SegOptions& opt)
        : g_(g), lab_(lab), opt_(opt), src_(sorted_unique(src)), dst_(sorted_unique(dst)),
          grammar_(build_sim_grammar(g, dst_)), h_(g, grammar_, {}, opt.fact_budget)
    {
    }

    void run()
    {
        const bool stop = opt_.early_stop && g_.temporally_ordered();
        const auto horizon = min_seq(g_, src_);
        for (auto d : dst_)
            add(kEe, d, d);
        std::uint32_t nt = 0;
        VertexId x = 0;
        std::vector<VertexId> ys;
        while (h_.pop(nt, x, ys)) {
            for (auto y : ys) {
                if (nt == kEe) {
                    ++stats_.processed;
                    // Aa(a, b) <- G^-1(a, x) Ee(x, y) G(y, b)
                    for (const auto& ax : g_.out(x, EdgeType::WasGeneratedBy)) {
                        if (!lab_.edge_alive(ax.e) || !lab_.vertex_alive(ax.v))
                            continue;
                        for (const auto& by : g_.out(y, EdgeType::WasGeneratedBy))
                            if (lab_.edge_alive(by.e) && lab_.same_label(ax.v, by.v))
                                add(kAa, ax.v, by.v);
                    }
                } else {
                    if (stop && g_.seq(x) < horizon && g_.seq(y) < horizon) {
                        ++stats_.stopped;
                        continue;
                    }
                    ++stats_.processed;
                    // Ee(e, f) <- U^-1(e, x) Aa(x, y) U(y, f)
                    for (const auto& ex : g_.out(x, EdgeType::Used)) {
                        if (!lab_.edge_alive(ex.e) || !lab_.vertex_alive(ex.v))
                            continue;
                        for (const auto& fy : g_.out(y, EdgeType::Used))
                            if (lab_.edge_alive(fy.e) && lab_.same_label(ex.v, fy.v))
                                add(kEe, ex.v, fy.v);
                    }
                }
            }
        }
        stats_.facts = h_.size();
    }

    /// Ee(a, b) in H (order-insensitive).
    bool ee(VertexId a, VertexId b) const { return holds(kEe, a, b); }
    bool aa(VertexId a, VertexId b) const { return holds(kAa, a, b); }

    /// Vertices on the derivations of every Ee fact that has a source endpoint.
    NsResult extract() const
    {
        FactStore<Set> seen(g_, grammar_);
        DenseBitset out(g_.num_vertices());
        auto visit = [&](std::uint32_t nt, VertexId a, VertexId b) {
            if (opt_.prune && a > b)
                std::swap(a, b);
            seen.add(nt, a, b);
        };
        for (auto s : src_)
            for (auto y : g_.vertices_of(VertexType::Entity))
                if (ee(s, y))
                    visit(kEe, s, y);
        std::uint32_t nt = 0;
        VertexId x = 0;
        std::vector<VertexId> ys;
        while (seen.pop(nt, x, ys)) {
            out.set(x);
            for (auto y : ys) {
                out.set(y);
                if (nt == kEe) {
                    for (const auto& ax : g_.in(x, EdgeType::Used)) {
                        if (!lab_.edge_alive(ax.e))
                            continue;
                        for (const auto& by : g_.in(y, EdgeType::Used))
                            if (lab_.edge_alive(by.e) && aa(ax.v, by.v))
                                visit(kAa, ax.v, by.v);
                    }
                } else {
                    for (const auto& ex : g_.in(x, EdgeType::WasGeneratedBy)) {
                        if (!lab_.edge_alive(ex.e))
                            continue;
                        for (const auto& fy : g_.in(y, EdgeType::WasGeneratedBy))
                            if (lab_.edge_alive(fy.e) && ee(ex.v, fy.v))
                                visit(kEe, ex.v, fy.v);
                    }
                }
            }
        }
        return {out.to_vector(), stats_view()};
    }

    /// A concrete walk s ... d ... y witnessing Ee(s, y) and passing through
    /// `through` when given. Small-graph utility; empty when none exists.
    std::vector<VertexId> witness(VertexId s, VertexId y,
                                  std::optional<VertexId> through = std::nullopt) const
    {
        // Depth-first over the symmetric derivation structure. Each frame is a
        // pair (left, right) on the same level; the walk is left side outward
        // from s plus the mirrored right side.
        std::vector<VertexId> left, right;
        std::set<std::tuple<int, VertexId, VertexId, bool>> dead;
        std::function<bool(int, VertexId, VertexId, bool)> go =
            [&](int kind, VertexId a, VertexId b, bool hit) -> bool {
            hit = hit || (through && (a == *through || b == *through));
            left.push_back(a);
            right.push_back(b);
            if (kind == 0 && a == b && std::binary_search(dst_.begin(), dst_.end(), a) && hit)
                return true;
            if (!dead.count({kind, a, b, hit})) {
                if (kind == 0) {
                    for (const auto& ax : g_.in(a, EdgeType::Used))
                        for (const auto& by : g_.in(b, EdgeType::Used))
                            if (lab_.edge_alive(ax.e) && lab_.edge_alive(by.e) && aa(ax.v, by.v) &&
                                go(1, ax.v, by.v, hit))
                                return true;
                } else {
                    for (const auto& ex : g_.in(a, EdgeType::WasGeneratedBy))
                        for (const auto& fy : g_.in(b, EdgeType::WasGeneratedBy))
                            if (lab_.edge_alive(ex.e) && lab_.edge_alive(fy.e) && ee(ex.v, fy.v) &&
                                go(0, ex.v, fy.v, hit))
                                return true;
                }
                dead.insert({kind, a, b, hit});
            }
            left.pop_back();
            right.pop_back();
            return false;
        };
        if (!ee(s, y) || !go(0, s, y, false))
            return {};
        std::vector<VertexId> walk = left;
        for (std::size_t i = right.size() - 1; i-- > 0;)
            walk.push_back(right[i]);
        return walk;
    }

    struct Stats : SolverStats
    {
        std::size_t stopped = 0;
    };
    const Stats& stats() const { return stats_; }
    SolverStats stats_view() const { return stats_; }
    const FactStore<Set>& store() const { return h_; }
    const Grammar& grammar() const { return grammar_; }

private:
    bool holds(std::uint32_t nt, VertexId a, VertexId b) const
    {
        if (opt_.prune && a > b)
            std::swap(a, b);
        return h_.contains(nt, a, b);
    }

    void add(std::uint32_t nt, VertexId a, VertexId b)
    {
        if (opt_.prune) {
            if (a > b)
                std::swap(a, b);
            h_.add(nt, a, b);
        } else {
            h_.add(nt, a, b);
            h_.add(nt, b, a);
        }
    }

    const ProvGraph& g_;
    const LabelOracle& lab_;
    SegOptions opt_;
    std::vector<VertexId> src_, dst_;
    Grammar grammar_;
    FactStore<Set> h_;
    Stats stats_;
};

inline NsResult induce_ns_seg(const ProvGraph& g, const std::vector<VertexId>& src,
                              const std::vector<VertexId>& dst, const LabelOracle& lab,
                              const SegOptions& opt = {})
{
    if (opt.backend == Backend::Compressed) {
        SegSolver<CompressedPairSet> s(g, src, dst, lab, opt);
        s.run();
        return s.extract();
    }
    SegSolver<PlainPairSet> s(g, src, dst, lab, opt);
    s.run();
    return s.extract();
}

// ---------------------------------------------------------------------------
// V_NS, TST: per destination, level-synchronous equivalence classes. Level m
// holds every vertex reached from the destination by an ancestry walk of m
// steps; with property-constrained labels a level splits by label sequence.

struct TstClass
{
    std::uint32_t level = 0;
    std::uint32_t parent = 0; // index of the parent class (self for the root)
    bool entity = true;
    DenseBitset members;      // over type-local indices
};

struct TstTrace
{
    std::vector<TstClass> classes;
    std::size_t levels = 0;
    std::size_t processed = 0; // class members over all levels
    bool stopped_early = false;
};

/// Builds the class tree for one destination. Stops when the activity frontier
/// is entirely older than every source (temporally ordered graphs only), when a
/// level is empty, or at the level cap. `spent` is what earlier destinations
/// already counted against the fact budget.
inline TstTrace tst_levels(const ProvGraph& g, VertexId d, std::int64_t horizon,
                           const LabelOracle& lab, const SegOptions& opt, std::size_t spent = 0)
{
    const bool stop = opt.early_stop && g.temporally_ordered();
    const auto cap = opt.max_levels ? opt.max_levels : g.num_vertices();
    const auto nE = g.count(VertexType::Entity), nA = g.count(VertexType::Activity);
    TstTrace t;
    t.classes.push_back({0, 0, true, DenseBitset(nE)});
    t.classes[0].members.set(g.local_index(d));
    t.processed = 1;
    std::size_t begin = 0, end = 1; // classes of the current level
    std::unordered_map<std::uint64_t, std::uint32_t> child;
    for (std::uint32_t level = 1; level <= cap; ++level) {
        const bool to_activity = (level % 2) == 1;
        child.clear();
        const auto first_new = t.classes.size();
        std::int64_t newest = std::numeric_limits<std::int64_t>::min();
        for (auto ci = begin; ci < end; ++ci) {
            // copy what we need: push_back below may reallocate
            const auto members = t.classes[ci].members;
            members.for_each([&](std::uint32_t li) {
                const auto v = g.vertices_of(to_activity ? VertexType::Entity : VertexType::Activity)[li];
                const auto et = to_activity ? EdgeType::WasGeneratedBy : EdgeType::Used;
                for (const auto& a : g.out(v, et)) {
                    if (!lab.edge_alive(a.e) || !lab.vertex_alive(a.v))
                        continue;
                    const auto key = (std::uint64_t{static_cast<std::uint32_t>(ci)} << 32) |
                                     lab.vertex_label(a.v);
                    auto [it, fresh] = child.emplace(key, static_cast<std::uint32_t>(t.classes.size()));
                    if (fresh)
                        t.classes.push_back({level, static_cast<std::uint32_t>(ci), !to_activity,
                                             DenseBitset(to_activity ? nA : nE)});
                    t.classes[it->second].members.set(g.local_index(a.v));
                    if (to_activity)
                        newest = std::max(newest, g.seq(a.v));
                }
            });
        }
        if (t.classes.size() == first_new)
            break;
        for (auto ci = first_new; ci < t.classes.size(); ++ci)
            t.processed += t.classes[ci].members.count();
        if (opt.fact_budget && spent + t.processed > opt.fact_budget)
            throw BudgetExceeded(opt.fact_budget, spent + t.processed);
        t.levels = level;
        begin = first_new;
        end = t.classes.size();
        if (to_activity && stop && newest < horizon) {
            t.stopped_early = true;
            break;
        }
    }
    return t;
}

/// With plain labels every level is a single class, so the class tree can be
/// stored transposed: per reached vertex, the levels it is a member of. Those
/// are walk lengths from the destination and nearly always form one run of
/// same-parity integers, so each vertex keeps a short list of runs. Runs fill in
/// one pass over the ancestry DAG in descending seq (levels(w) gets levels(v) + 1
/// per step v -> w), so the cost does not grow with depth. Requires a
/// temporally ordered graph.
struct LevelRun
{
    std::uint32_t lo = 0, hi = 0; // lo, lo + 2, ..., hi
};

struct TstRuns
{
    std::vector<VertexId> order;              // reached vertices, descending seq
    std::vector<std::uint32_t> row;           // vertex -> index into order, or npos
    std::vector<std::vector<LevelRun>> runs;  // per row, sorted and disjoint
    std::size_t levels = 0;
    std::size_t processed = 0;
    bool stopped_early = false;

    static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
};

namespace detail {

template <typename F>
void for_each_step(const ProvGraph& g, const LabelOracle& lab, VertexId v, F&& f)
{
    const auto et = g.type(v) == VertexType::Entity ? EdgeType::WasGeneratedBy : EdgeType::Used;
    for (const auto& a : g.out(v, et))
        if (lab.edge_alive(a.e) && lab.vertex_alive(a.v))
            f(a.v);
}

inline void merge_runs(std::vector<LevelRun>& rs)
{
    if (rs.size() < 2)
        return;
    std::sort(rs.begin(), rs.end(), [](const LevelRun& a, const LevelRun& b) { return a.lo < b.lo; });
    std::size_t k = 0;
    for (std::size_t i = 1; i < rs.size(); ++i) {
        if (rs[i].lo <= rs[k].hi + 2)
            rs[k].hi = std::max(rs[k].hi, rs[i].hi);
        else
            rs[++k] = rs[i];
    }
    rs.resize(k + 1);
}

/// Largest level <= cap with the parity of lo.
inline std::uint32_t clip_level(std::uint32_t lo, std::uint32_t hi, std::uint32_t cap)
{
    return hi <= cap ? hi : cap - ((cap - lo) & 1u);
}

/// Appends (a - shift) intersected with b. Both sides share a parity.
inline void intersect_runs(const std::vector<LevelRun>& a, std::uint32_t shift, const std::vector<LevelRun>& b,
                           std::vector<LevelRun>& out)
{
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const auto alo = a[i].lo - shift, ahi = a[i].hi - shift;
        const auto lo = std::max(alo, b[j].lo), hi = std::min(ahi, b[j].hi);
        if (lo <= hi)
            out.push_back({lo, hi});
        if (ahi < b[j].hi)
            ++i;
        else
            ++j;
    }
}

} // namespace detail

inline TstRuns tst_runs(const ProvGraph& g, VertexId d, std::int64_t horizon, const LabelOracle& lab,
                        const SegOptions& opt, std::size_t spent = 0)
{
    TstRuns t;
    t.row.assign(g.num_vertices(), TstRuns::npos);
    t.row[d] = 0;
    t.order.push_back(d);
    for (std::size_t i = 0; i < t.order.size(); ++i)
        detail::for_each_step(g, lab, t.order[i], [&](VertexId w) {
            if (t.row[w] == TstRuns::npos) {
                t.row[w] = 0;
                t.order.push_back(w);
            }
        });
    std::sort(t.order.begin(), t.order.end(), [&](VertexId a, VertexId b) { return g.seq(a) > g.seq(b); });
    for (std::size_t i = 0; i < t.order.size(); ++i)
        t.row[t.order[i]] = static_cast<std::uint32_t>(i);

    const auto cap = static_cast<std::uint32_t>(
        std::min<std::size_t>(opt.max_levels ? opt.max_levels : g.num_vertices(), TstRuns::npos - 2));
    t.runs.assign(t.order.size(), {});
    t.runs[0].push_back({0, 0});
    std::uint32_t last = 0;
    for (std::size_t i = 0; i < t.order.size(); ++i) {
        auto& rs = t.runs[i];
        detail::merge_runs(rs);
        if (!rs.empty())
            last = std::max(last, rs.back().hi);
        detail::for_each_step(g, lab, t.order[i], [&](VertexId w) {
            auto& to = t.runs[t.row[w]];
            for (const auto& r : rs)
                if (r.lo + 1 <= cap)
                    to.push_back({r.lo + 1, detail::clip_level(r.lo + 1, r.hi + 1, cap)});
        });
    }

    // First activity level whose members are all older than every source.
    if (opt.early_stop && g.temporally_ordered()) {
        std::vector<LevelRun> young;
        for (std::size_t i = 0; i < t.order.size(); ++i)
            if (g.type(t.order[i]) == VertexType::Activity && g.seq(t.order[i]) >= horizon)
                young.insert(young.end(), t.runs[i].begin(), t.runs[i].end());
        detail::merge_runs(young);
        std::uint32_t m = 1;
        for (const auto& r : young) {
            if (r.lo > m)
                break;
            m = std::max(m, r.hi + 2);
        }
        if (m <= last) {
            last = m;
            t.stopped_early = true;
        }
    }
    for (auto& rs : t.runs) {
        while (!rs.empty() && rs.back().lo > last)
            rs.pop_back();
        if (!rs.empty())
            rs.back().hi = detail::clip_level(rs.back().lo, rs.back().hi, last);
        for (const auto& r : rs)
            t.processed += (r.hi - r.lo) / 2 + 1;
    }
    t.levels = last;

    if (opt.fact_budget && last > 0 && spent + t.processed > opt.fact_budget) {
        // report the count at the level where a level-by-level run would stop
        std::vector<std::int64_t> diff(std::size_t{last} + 3, 0);
        for (const auto& rs : t.runs)
            for (const auto& r : rs) {
                ++diff[r.lo];
                --diff[r.hi + 2];
            }
        for (std::size_t m = 2; m <= last; ++m)
            diff[m] += diff[m - 2];
        std::size_t sum = spent + static_cast<std::size_t>(diff[0]);
        for (std::size_t m = 1; m <= last; ++m)
            if ((sum += static_cast<std::size_t>(diff[m])) > opt.fact_budget)
                throw BudgetExceeded(opt.fact_budget, sum);
    }
    return t;
}

namespace detail {

inline NsResult induce_ns_tst_runs(const ProvGraph& g, const std::vector<VertexId>& src,
                                   const std::vector<VertexId>& dst, const LabelOracle& lab,
                                   const SegOptions& opt)
{
    const auto horizon = min_seq(g, src);
    DenseBitset out(g.num_vertices());
    NsResult res;
    for (auto d : sorted_unique(dst)) {
        auto t = tst_runs(g, d, horizon, lab, opt, res.stats.processed);
        res.stats.levels += t.levels;
        res.stats.processed += t.processed;
        // levels holding a source are alive whole; a member is also alive when
        // one of its steps lands on an alive member one level further out
        std::vector<LevelRun> with_src;
        for (auto s : src)
            if (t.row[s] != TstRuns::npos)
                with_src.insert(with_src.end(), t.runs[t.row[s]].begin(), t.runs[t.row[s]].end());
        merge_runs(with_src);
        std::vector<std::vector<LevelRun>> alive(t.order.size());
        for (std::size_t i = t.order.size(); i-- > 0;) {
            const auto v = t.order[i];
            auto& a = alive[i];
            if (g.type(v) == VertexType::Entity)
                intersect_runs(t.runs[i], 0, with_src, a);
            for_each_step(g, lab, v, [&](VertexId w) { intersect_runs(alive[t.row[w]], 1, t.runs[i], a); });
            merge_runs(a);
            if (!a.empty())
                out.set(v);
        }
    }
    res.vertices = out.to_vector();
    res.stats.facts = res.stats.processed;
    return res;
}

inline NsResult induce_ns_tst_classes(const ProvGraph& g, const std::vector<VertexId>& src,
                                      const std::vector<VertexId>& dst, const LabelOracle& lab,
                                      const SegOptions& opt)
{
    const auto horizon = min_seq(g, src);
    const auto ents = g.vertices_of(VertexType::Entity);
    const auto acts = g.vertices_of(VertexType::Activity);
    DenseBitset src_local(g.count(VertexType::Entity));
    for (auto s : src)
        src_local.set(g.local_index(s));
    DenseBitset out(g.num_vertices());
    NsResult res;
    for (auto d : sorted_unique(dst)) {
        auto t = tst_levels(g, d, horizon, lab, opt, res.stats.processed);
        res.stats.levels += t.levels;
        res.stats.processed += t.processed;
        // Backward pass: a member is alive when its class holds a source or it
        // has an edge into an alive member of a child class.
        std::vector<DenseBitset> alive(t.classes.size());
        for (std::size_t ci = t.classes.size(); ci-- > 0;) {
            const auto& c = t.classes[ci];
            if (alive[ci].universe() == 0)
                alive[ci] = DenseBitset(c.members.universe());
            if (c.entity) {
                auto hit = c.members;
                hit &= src_local;
                if (hit.any())
                    alive[ci] |= c.members;
            }
            if (ci == 0 || !alive[ci].any())
                continue;
            const auto p = c.parent;
            if (alive[p].universe() == 0)
                alive[p] = DenseBitset(t.classes[p].members.universe());
            const auto et = c.entity ? EdgeType::Used : EdgeType::WasGeneratedBy;
            const auto vt = c.entity ? VertexType::Entity : VertexType::Activity;
            alive[ci].for_each([&](std::uint32_t li) {
                const auto v = g.vertices_of(vt)[li];
                for (const auto& a : g.in(v, et))
                    if (lab.edge_alive(a.e) && g.type(a.v) != vt &&
                        t.classes[p].members.test(g.local_index(a.v)))
                        alive[p].set(g.local_index(a.v));
            });
        }
        for (std::size_t ci = 0; ci < t.classes.size(); ++ci)
            alive[ci].for_each([&](std::uint32_t li) {
                out.set(t.classes[ci].entity ? ents[li] : acts[li]);
            });
    }
    res.vertices = out.to_vector();
    res.stats.facts = res.stats.processed;
    return res;
}

} // namespace detail

/// Property-constrained labels split levels into a class tree; plain labels on
/// a temporally ordered graph use the transposed runs.
inline NsResult induce_ns_tst(const ProvGraph& g, const std::vector<VertexId>& src,
                              const std::vector<VertexId>& dst, const LabelOracle& lab,
                              const SegOptions& opt = {})
{
    if (!lab.extended() && g.temporally_ordered())
        return detail::induce_ns_tst_runs(g, src, dst, lab, opt);
    return detail::induce_ns_tst_classes(g, src, dst, lab, opt);
}

inline NsResult induce_ns(const ProvGraph& g, const std::vector<VertexId>& src,
                          const std::vector<VertexId>& dst, const LabelOracle& lab, Algorithm alg,
                          const SegOptions& opt = {})
{
    switch (alg) {
    case Algorithm::Baseline: return induce_ns_baseline(g, src, dst, lab, opt);
    case Algorithm::Seg: return induce_ns_seg(g, src, dst, lab, opt);
    case Algorithm::Tst: return induce_ns_tst(g, src, dst, lab, opt);
    }
    return {};
}

// ---------------------------------------------------------------------------
// V_NE and V_NA

inline std::vector<VertexId> induce_ne(const ProvGraph& g, const std::vector<VertexId>& induced,
                                       const LabelOracle& lab)
{
    std::set<VertexId> in(induced.begin(), induced.end());
    std::set<VertexId> out;
    for (auto a : induced) {
        if (g.type(a) != VertexType::Activity)
            continue;
        for (const auto& e : g.in(a, EdgeType::WasGeneratedBy))
            if (lab.edge_alive(e.e) && lab.vertex_alive(e.v) && !in.count(e.v))
                out.insert(e.v);
    }
    return {out.begin(), out.end()};
}

inline std::vector<VertexId> induce_na(const ProvGraph& g, const std::vector<VertexId>& vertices,
                                       const LabelOracle& lab)
{
    std::set<VertexId> out;
    for (auto v : vertices)
        for (auto t : {EdgeType::WasAssociatedWith, EdgeType::WasAttributedTo})
            for (const auto& a : g.out(v, t))
                if (lab.edge_alive(a.e) && lab.vertex_alive(a.v))
                    out.insert(a.v);
    return {out.begin(), out.end()};
}

inline std::vector<VertexId> induce_na(const ProvGraph& g, const std::vector<VertexId>& vertices)
{
    return induce_na(g, vertices, LabelOracle(g));
}

// ---------------------------------------------------------------------------
// Segment

/// Result of the induce step, kept so that adjust can start from it.
struct Induction
{
    std::vector<VertexId> np, ns, ne;
    bool connected = false;
    SolverStats stats;
};

struct Segment
{
    SegQuery query;              // query.boundary is the boundary currently applied
    std::vector<VertexId> vertices; // sorted
    std::vector<Tag> tags;          // parallel to vertices
    std::vector<EdgeId> edges;      // sorted
    bool connected = false;
    Induction cache;

    std::optional<Tag> tag_of(VertexId v) const
    {
        auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
        if (it == vertices.end() || *it != v)
            return std::nullopt;
        return tags[static_cast<std::size_t>(it - vertices.begin())];
    }

    std::vector<VertexId> with_tag(Tag t) const
    {
        std::vector<VertexId> out;
        for (std::size_t i = 0; i < vertices.size(); ++i)
            if (tags[i] == t)
                out.push_back(vertices[i]);
        return out;
    }

    bool contains(VertexId v) const { return std::binary_search(vertices.begin(), vertices.end(), v); }
};

/// Step one: NP, NS, NE under the query's labels.
inline Induction induce(const ProvGraph& g, const SegQuery& q)
{
    check_query(g, q);
    const auto lab = query_labels(g, q);
    const auto src = sorted_unique(q.src), dst = sorted_unique(q.dst);
    Induction ind;
    ind.np = induce_np(g, src, dst, lab, q.options.derived_in_paths);
    auto ns = induce_ns(g, src, dst, lab, q.algorithm, q.options);
    ind.ns = std::move(ns.vertices);
    ind.stats = ns.stats;
    std::vector<VertexId> path;
    std::set_union(ind.np.begin(), ind.np.end(), ind.ns.begin(), ind.ns.end(),
                   std::back_inserter(path));
    ind.ne = induce_ne(g, path, lab);

    bool meet = false;
    for (auto s : src)
        meet = meet || std::binary_search(dst.begin(), dst.end(), s);
    const auto fwd = reach(g, dst, true, lab, q.options.derived_in_paths);
    for (auto s : src)
        meet = meet || fwd.test(s);
    ind.connected = meet || !ind.ns.empty();
    return ind;
}

/// Step two: apply a boundary to a cached induction. Exclusions filter linearly
/// (source and destination entities are kept); each expansion adds ancestors
/// within 2k hops over wasGeneratedBy/used edges; agents are then gathered for
/// the final vertex set and the edge set is induced.
inline Segment apply_boundary(const ProvGraph& g, const SegQuery& base, const Induction& ind,
                              const BoundarySpec& b)
{
    Segment s;
    s.query = base;
    s.query.boundary = b;
    s.cache = ind;
    s.connected = ind.connected;

    const auto src = sorted_unique(base.src), dst = sorted_unique(base.dst);
    std::set<VertexId> exempt(src.begin(), src.end());
    exempt.insert(dst.begin(), dst.end());
    LabelOracle lab(g);
    b.apply(g, lab, exempt);

    std::map<VertexId, Tag> tag;
    auto put = [&](VertexId v, Tag t) {
        if (!lab.vertex_alive(v))
            return;
        auto [it, fresh] = tag.emplace(v, t);
        if (!fresh && t < it->second)
            it->second = t;
    };
    for (auto v : src)
        put(v, Tag::Src);
    for (auto v : dst)
        put(v, Tag::Dst);
    for (auto v : ind.np)
        put(v, Tag::Np);
    for (auto v : ind.ns)
        put(v, Tag::Ns);
    for (auto v : ind.ne)
        put(v, Tag::Ne);

    for (const auto& x : b.expansions) {
        if (x.k > base.options.max_expansion_k)
            throw QueryError("expansion k=" + std::to_string(x.k) + " exceeds the limit of " +
                             std::to_string(base.options.max_expansion_k));
        for (auto v : x.entities)
            if (!tag.count(v))
                throw QueryError("expansion entity " + std::to_string(v) +
                                 " is not in the segment");
        std::vector<VertexId> frontier(x.entities.begin(), x.entities.end());
        std::set<VertexId> seen(frontier.begin(), frontier.end());
        for (std::uint32_t hop = 0; hop < 2 * x.k && !frontier.empty(); ++hop) {
            std::vector<VertexId> next;
            for (auto v : frontier)
                for (auto t : {EdgeType::WasGeneratedBy, EdgeType::Used})
                    for (const auto& a : g.out(v, t))
                        if (lab.edge_alive(a.e) && lab.vertex_alive(a.v) && seen.insert(a.v).second)
                            next.push_back(a.v);
            for (auto v : next)
                put(v, Tag::Expanded);
            frontier = std::move(next);
        }
    }

    std::vector<VertexId> so_far;
    for (const auto& [v, _] : tag)
        so_far.push_back(v);
    for (auto a : induce_na(g, so_far, lab))
        put(a, Tag::Na);

    for (const auto& [v, t] : tag) {
        s.vertices.push_back(v);
        s.tags.push_back(t);
    }
    for (const auto& e : g.edges())
        if (lab.edge_alive(e.id) && tag.count(e.src) && tag.count(e.dst))
            s.edges.push_back(e.id);
    return s;
}

inline Segment segment(const ProvGraph& g, const SegQuery& q)
{
    return apply_boundary(g, q, induce(g, q), q.boundary);
}

/// Re-applies a boundary to a segment's cached induction. The original
/// induction is untouched, so removing an excluder restores what it hid.
inline Segment adjust(const ProvGraph& g, const Segment& s, const BoundarySpec& b)
{
    return apply_boundary(g, s.query, s.cache, b);
}

// ---------------------------------------------------------------------------
// JSON / DOT

inline Json to_json(const SegOptions& o)
{
    Json j;
    j["backend"] = to_string(o.backend);
    j["factBudget"] = o.fact_budget;
    j["earlyStop"] = o.early_stop;
    j["prune"] = o.prune;
    j["fastSet"] = o.fast_set;
    j["derivedInPaths"] = o.derived_in_paths;
    j["maxLevels"] = o.max_levels;
    j["maxExpansionK"] = o.max_expansion_k;
    Json lp = Json::object();
    for (const auto& [t, p] : o.label_props)
        lp[std::string(to_string(t))] = p;
    j["labelProps"] = lp;
    return j;
}

inline SegOptions seg_options_from_json(const Json& j, SegOptions o = {})
{
    if (j.is_null())
        return o;
    if (!j.is_object())
        throw DataError("options must be an object");
    if (j.contains("backend"))
        o.backend = parse_backend(j["backend"].get<std::string>());
    if (j.contains("factBudget"))
        o.fact_budget = j["factBudget"].get<std::size_t>();
    if (j.contains("earlyStop"))
        o.early_stop = j["earlyStop"].get<bool>();
    if (j.contains("prune"))
        o.prune = j["prune"].get<bool>();
    if (j.contains("fastSet"))
        o.fast_set = j["fastSet"].get<bool>();
    if (j.contains("derivedInPaths"))
        o.derived_in_paths = j["derivedInPaths"].get<bool>();
    if (j.contains("maxLevels"))
        o.max_levels = j["maxLevels"].get<std::size_t>();
    if (j.contains("maxExpansionK"))
        o.max_expansion_k = j["maxExpansionK"].get<std::uint32_t>();
    if (j.contains("labelProps")) {
        if (!j["labelProps"].is_object())
            throw DataError("labelProps must map vertex types to property names");
        o.label_props.clear();
        for (auto it = j["labelProps"].begin(); it != j["labelProps"].end(); ++it)
            o.label_props[parse_vertex_type(it.key())] = it.value().get<std::string>();
    }
    return o;
}

inline Json to_json(const SegQuery& q)
{
    Json j;
    j["src"] = q.src;
    j["dst"] = q.dst;
    j["algorithm"] = to_string(q.algorithm);
    j["boundary"] = to_json(q.boundary);
    j["options"] = to_json(q.options);
    return j;
}

inline SegQuery seg_query_from_json(const Json& j, SegOptions defaults = {})
{
    if (!j.is_object())
        throw DataError("segment query must be an object");
    SegQuery q;
    q.src = detail::ids_from_json<VertexId>(j, "src");
    q.dst = detail::ids_from_json<VertexId>(j, "dst");
    if (j.contains("algorithm"))
        q.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    if (j.contains("boundary"))
        q.boundary = boundary_from_json(j["boundary"]);
    q.options = seg_options_from_json(j.contains("options") ? j["options"] : Json(), defaults);
    return q;
}

inline Json to_json(const Segment& s)
{
    Json j;
    j["query"] = to_json(s.query);
    auto& vs = j["vertices"] = Json::array();
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        vs.push_back(Json{{"id", s.vertices[i]}, {"tag", to_string(s.tags[i])}});
    j["edges"] = s.edges;
    j["connected"] = s.connected;
    j["stats"] = Json{{"facts", s.cache.stats.facts},
                      {"processed", s.cache.stats.processed},
                      {"levels", s.cache.stats.levels}};
    return j;
}

/// Reads a segment document. The induction itself is not part of the document;
/// only its stats come back, so adjusting a loaded segment needs a fresh induce().
inline Segment segment_from_json(const Json& j)
{
    if (!j.is_object())
        throw DataError("segment document must be an object");
    Segment s;
    s.query = seg_query_from_json(j.at("query"));
    for (const auto& v : j.at("vertices")) {
        s.vertices.push_back(v.at("id").get<VertexId>());
        s.tags.push_back(parse_tag(v.at("tag").get<std::string>()));
    }
    if (!std::is_sorted(s.vertices.begin(), s.vertices.end()))
        throw DataError("segment vertices must be sorted by id");
    s.edges = j.at("edges").get<std::vector<EdgeId>>();
    s.connected = j.value("connected", false);
    s.cache.connected = s.connected;
    if (j.contains("stats")) {
        const auto& st = j["stats"];
        s.cache.stats.facts = st.value("facts", std::size_t{0});
        s.cache.stats.processed = st.value("processed", std::size_t{0});
        s.cache.stats.levels = st.value("levels", std::size_t{0});
    }
    return s;
}

inline Json to_json(const Induction& ind)
{
    return Json{{"np", ind.np}, {"ns", ind.ns}, {"ne", ind.ne}, {"connected", ind.connected},
                {"facts", ind.stats.facts}, {"processed", ind.stats.processed},
                {"levels", ind.stats.levels}};
}

inline Induction induction_from_json(const Json& j)
{
    Induction ind;
    ind.np = j.at("np").get<std::vector<VertexId>>();
    ind.ns = j.at("ns").get<std::vector<VertexId>>();
    ind.ne = j.at("ne").get<std::vector<VertexId>>();
    ind.connected = j.at("connected").get<bool>();
    ind.stats.facts = j.value("facts", std::size_t{0});
    ind.stats.processed = j.value("processed", std::size_t{0});
    ind.stats.levels = j.value("levels", std::size_t{0});
    return ind;
}

inline std::string to_dot(const ProvGraph& g, const Segment& s)
{
    auto color = [](Tag t) {
        switch (t) {
        case Tag::Src: return "palegreen";
        case Tag::Dst: return "lightpink";
        case Tag::Np: return "lightskyblue";
        case Tag::Ns: return "khaki";
        case Tag::Ne: return "lightgrey";
        case Tag::Na: return "wheat";
        case Tag::Expanded: return "plum";
        }
        return "white";
    };
    std::ostringstream o;
    o << "digraph segment {\n  rankdir=RL;\n  node [style=filled];\n";
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
        const auto& v = g.vertex(s.vertices[i]);
        o << "  v" << v.id << " [shape=" << dot_shape(v.type) << ", fillcolor=" << color(s.tags[i])
          << ", label=\"" << dot_escape(display_name(v)) << "\\n" << to_string(s.tags[i]) << "\"];\n";
    }
    for (auto eid : s.edges) {
        const auto& e = g.edge(eid);
        o << "  v" << e.src << " -> v" << e.dst << " [label=\"" << to_string(e.type) << "\"];\n";
    }
    o << "}\n";
    return o.str();
}

} // namespace provq
