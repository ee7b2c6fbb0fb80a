#pragma once

// Benchmark harness: segmentation timings over SynPG sweeps and compaction
// ratios over SynSG sweeps, emitted as CSV rows.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "provq/gen.hpp"
#include "provq/seg.hpp"
#include "provq/sum.hpp"

namespace provq::bench {

struct BenchRow
{
    std::string experiment;
    std::string algorithm; // BASELINE | SEG | TST, or SUM
    std::string backend;   // PLAIN | COMPRESSED
    std::string params;    // key=value pairs separated by ';'
    std::optional<double> wall_ms;
    std::size_t peak_facts = 0;
    std::size_t processed = 0;
    std::string outcome = "OK"; // OK | OOM-budget
    std::size_t budget = 0;
    std::optional<double> c_r;
};

inline std::string csv_header()
{
    return "experiment,algorithm,backend,params,wall_ms,peak_facts,processed,outcome,budget,c_r";
}

inline std::string to_csv(const BenchRow& r)
{
    std::ostringstream o;
    o.precision(6);
    o << r.experiment << ',' << r.algorithm << ',' << r.backend << ',' << r.params << ',';
    if (r.wall_ms)
        o << std::fixed << *r.wall_ms << std::defaultfloat;
    o << ',' << r.peak_facts << ',' << r.processed << ',' << r.outcome << ',' << r.budget << ',';
    if (r.c_r)
        o << std::fixed << *r.c_r << std::defaultfloat;
    return o.str();
}

inline std::string to_csv(const std::vector<BenchRow>& rows)
{
    std::string out = csv_header() + "\n";
    for (const auto& r : rows)
        out += to_csv(r) + "\n";
    return out;
}

/// Two entities starting at a position in order of being (0 = oldest).
inline std::vector<VertexId> entities_at(const ProvGraph& g, std::size_t pos, std::size_t count = 2)
{
    const auto es = g.entities_by_seq();
    if (es.size() < count)
        throw QueryError("graph has fewer than " + std::to_string(count) + " entities");
    pos = std::min(pos, es.size() - count);
    return {es.begin() + static_cast<long>(pos), es.begin() + static_cast<long>(pos + count)};
}

inline std::vector<VertexId> first_entities(const ProvGraph& g, std::size_t count = 2)
{
    return entities_at(g, 0, count);
}

inline std::vector<VertexId> last_entities(const ProvGraph& g, std::size_t count = 2)
{
    return entities_at(g, g.count(VertexType::Entity), count);
}

/// Sources at a percentile of the order of being among entities.
inline std::vector<VertexId> entities_at_percentile(const ProvGraph& g, double pct, std::size_t count = 2)
{
    const auto n = g.count(VertexType::Entity);
    return entities_at(g, static_cast<std::size_t>(std::floor(pct / 100.0 * static_cast<double>(n))), count);
}

/// The hardest query: first two entities to last two.
inline SegQuery hardest_query(const ProvGraph& g, Algorithm alg = Algorithm::Tst, SegOptions opt = {})
{
    SegQuery q;
    q.src = first_entities(g);
    q.dst = last_entities(g);
    q.algorithm = alg;
    q.options = opt;
    return q;
}

struct Timed
{
    std::optional<Induction> induction; // empty when the budget was hit
    double ms = 0;                       // median over the measured runs
    std::size_t reached = 0;             // facts when the budget was hit
};

/// Times induce() only. One warm-up run is discarded when requested.
inline Timed time_induce(const ProvGraph& g, const SegQuery& q, std::size_t runs = 1, bool warmup = false)
{
    Timed t;
    std::vector<double> ms;
    for (std::size_t i = 0; i < runs + (warmup ? 1 : 0); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto ind = induce(g, q);
            const auto t1 = std::chrono::steady_clock::now();
            t.induction = std::move(ind);
            if (!warmup || i > 0)
                ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        } catch (const BudgetExceeded& e) {
            t.induction.reset();
            t.reached = e.reached();
            return t;
        }
    }
    std::sort(ms.begin(), ms.end());
    t.ms = ms.empty() ? 0 : ms[ms.size() / 2];
    return t;
}

struct SegBenchParams
{
    std::string experiment = "seg-scale"; // seg-scale | seg-skew | seg-lambda | seg-early
    std::vector<double> values;           // sizes, s_e, lambda_i, or src percentiles
    std::size_t n = 10000;                // graph size when values are not sizes
    std::vector<Algorithm> algs{Algorithm::Baseline, Algorithm::Seg, Algorithm::Tst};
    Backend backend = Backend::Plain;
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    bool warmup = true;
    std::size_t budget = 0;
    bool early_stop = true;
};

inline std::vector<double> default_values(const std::string& experiment)
{
    if (experiment == "seg-scale")
        return {1000, 5000, 10000};
    if (experiment == "seg-skew")
        return {1.1, 1.5, 2.1};
    if (experiment == "seg-lambda")
        return {1, 2, 3, 4};
    if (experiment == "seg-early")
        return {20, 40, 60, 80};
    if (experiment == "sum-alpha")
        return {0.01, 0.1, 1, 10};
    if (experiment == "sum-k")
        return {2, 5, 10, 20};
    if (experiment == "sum-n")
        return {5, 10, 20, 40};
    if (experiment == "sum-segments")
        return {2, 5, 10, 20};
    throw QueryError("unknown experiment '" + experiment + "'");
}

inline std::string format_value(double v)
{
    std::ostringstream o;
    o << v;
    return o.str();
}

inline std::vector<BenchRow> bench_seg(const SegBenchParams& p)
{
    const auto& e = p.experiment;
    if (e != "seg-scale" && e != "seg-skew" && e != "seg-lambda" && e != "seg-early")
        throw QueryError("unknown segmentation experiment '" + e + "'");
    const auto values = p.values.empty() ? default_values(e) : p.values;
    std::vector<BenchRow> rows;
    for (auto v : values) {
        SynPGConfig c;
        c.seed = p.seed;
        c.n = p.n;
        if (e == "seg-scale") {
            c.n = static_cast<std::size_t>(v);
        } else if (e == "seg-skew") {
            c.s_e = v;
        } else if (e == "seg-lambda") {
            c.lambda_i = v;
        }
        const auto g = synpg(c);
        SegOptions opt;
        opt.backend = p.backend;
        opt.fact_budget = p.budget;
        opt.early_stop = p.early_stop;
        auto base = hardest_query(g, Algorithm::Tst, opt);
        if (e == "seg-early")
            base.src = entities_at_percentile(g, v);
        const auto params = "n=" + std::to_string(c.n) + ";s_e=" + format_value(c.s_e) +
                            ";lambda_i=" + format_value(c.lambda_i) + ";seed=" + std::to_string(c.seed) +
                            (e == "seg-early" ? ";src_pct=" + format_value(v) : "");
        for (auto alg : p.algs) {
            auto q = base;
            q.algorithm = alg;
            const auto t = time_induce(g, q, p.runs, p.warmup);
            BenchRow r;
            r.experiment = e;
            r.algorithm = std::string(to_string(alg));
            r.backend = to_string(p.backend);
            r.params = params;
            r.budget = p.budget;
            if (t.induction) {
                r.wall_ms = t.ms;
                r.peak_facts = t.induction->stats.facts;
                r.processed = t.induction->stats.processed;
            } else {
                r.outcome = "OOM-budget";
                r.peak_facts = t.reached;
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

struct SumBenchParams
{
    std::string experiment = "sum-alpha"; // sum-alpha | sum-k | sum-n | sum-segments
    std::vector<double> values;
    std::size_t seeds = 10;
    std::size_t k = 1; // provenance-type hops
    SynSGConfig base;
    std::optional<double> alpha; // overrides base.alpha; sum-segments defaults to 0.25
};

inline Pagg synsg_pagg()
{
    Pagg p;
    p.activity = {"command"};
    return p;
}

/// Mean compaction ratio of summarize() over seeds 1..seeds.
inline double mean_compaction(SynSGConfig c, std::size_t seeds, std::size_t k)
{
    double sum = 0;
    for (std::uint64_t s = 1; s <= seeds; ++s) {
        c.seed = s;
        std::vector<SegmentGraph> segs;
        for (auto& g : synsg(c))
            segs.push_back(as_segment(std::move(g)));
        sum += summarize(segs, synsg_pagg(), {.k = k}).compaction();
    }
    return sum / static_cast<double>(seeds);
}

inline std::vector<BenchRow> bench_sum(const SumBenchParams& p)
{
    const auto& e = p.experiment;
    if (e != "sum-alpha" && e != "sum-k" && e != "sum-n" && e != "sum-segments")
        throw QueryError("unknown summarization experiment '" + e + "'");
    if (p.seeds == 0)
        throw QueryError("seeds must be positive");
    const auto values = p.values.empty() ? default_values(e) : p.values;
    std::vector<BenchRow> rows;
    for (auto v : values) {
        auto c = p.base;
        if (p.alpha)
            c.alpha = *p.alpha;
        else if (e == "sum-segments")
            c.alpha = 0.25;
        if (e == "sum-alpha")
            c.alpha = v;
        else if (e == "sum-k")
            c.k = static_cast<std::size_t>(v);
        else if (e == "sum-n")
            c.n = static_cast<std::size_t>(v);
        else
            c.num_segments = static_cast<std::size_t>(v);
        const auto t0 = std::chrono::steady_clock::now();
        const double cr = mean_compaction(c, p.seeds, p.k);
        const auto t1 = std::chrono::steady_clock::now();
        BenchRow r;
        r.experiment = e;
        r.algorithm = "SUM";
        r.backend = "PLAIN";
        r.params = "alpha=" + format_value(c.alpha) + ";k=" + std::to_string(c.k) +
                   ";n=" + std::to_string(c.n) + ";segments=" + std::to_string(c.num_segments) +
                   ";ptype_k=" + std::to_string(p.k) + ";seeds=" + std::to_string(p.seeds);
        r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        r.c_r = cr;
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace provq::bench
