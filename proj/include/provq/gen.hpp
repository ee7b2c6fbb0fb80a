#pragma once

// Synthetic workloads. SynPG: a lifecycle provenance graph produced by a small
// team whose members run activities at Zipf-distributed rates, each using recent
// entities (Zipf over recency) and generating new ones. SynSG: segments whose
// activity types follow one Markov chain with Dirichlet-distributed rows.
//
// Randomness comes from counter-based SplitMix64 streams, one per concern, so
// adding a draw in one place does not shift the values drawn elsewhere.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "provq/graph_io.hpp"

namespace provq {

inline constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
    AgentPick = 1,
    Sizes = 2,
    Recency = 3,
    Versions = 4,
    Commands = 5,
    Chain = 6,
    Dirichlet = 7,
};

/// Value i of a stream is splitmix64(key + i * golden), key derived from (seed, stream).
class StreamRng
{
public:
    StreamRng(std::uint64_t seed, Stream s)
        : key_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL)))
    {
    }

    std::uint64_t next() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

    std::uint64_t counter() const noexcept { return counter_; }

    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Samplers

/// Poisson by inversion of the cumulative pmf.
inline std::uint32_t sample_poisson(StreamRng& r, double lambda)
{
    if (lambda <= 0)
        return 0;
    const double u = r.uniform();
    double p = std::exp(-lambda), s = p;
    std::uint32_t k = 0;
    while (u >= s && k < 10000) {
        ++k;
        p *= lambda / k;
        s += p;
    }
    return k;
}

/// Truncated Zipf over ranks 1..n with pmf proportional to k^-s. Keeps the
/// cumulative weights, extended lazily as the support grows, so each draw is
/// exact for the current support.
class ZipfTable
{
public:
    explicit ZipfTable(double s) : s_(s) { cum_.push_back(0.0); }

    double weight(std::size_t rank) const { return std::pow(static_cast<double>(rank), -s_); }

    void grow(std::size_t n)
    {
        while (cum_.size() <= n)
            cum_.push_back(cum_.back() + weight(cum_.size()));
    }

    /// Probability of rank k among 1..n.
    double pmf(std::size_t k, std::size_t n)
    {
        grow(n);
        return weight(k) / cum_[n];
    }

    /// Rank in 1..n.
    std::size_t sample(StreamRng& r, std::size_t n)
    {
        grow(n);
        const double u = r.uniform() * cum_[n];
        auto it = std::upper_bound(cum_.begin() + 1, cum_.begin() + static_cast<long>(n) + 1, u);
        const auto k = static_cast<std::size_t>(it - cum_.begin());
        return std::min(k, n);
    }

private:
    double s_;
    std::vector<double> cum_;
};

inline double sample_normal(StreamRng& r)
{
    const double u1 = r.uniform_pos(), u2 = r.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// log of a Gamma(shape, 1) variate (Marsaglia-Tsang). Shapes below one use
/// Gamma(a) = Gamma(a + 1) * U^(1/a), kept in log space so tiny shapes do not
/// underflow.
inline double sample_log_gamma(StreamRng& r, double shape)
{
    if (shape < 1.0)
        return sample_log_gamma(r, shape + 1.0) + std::log(r.uniform_pos()) / shape;
    const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0, v = 0;
        do {
            x = sample_normal(r);
            v = 1.0 + c * x;
        } while (v <= 0);
        v = v * v * v;
        const double u = r.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
            return std::log(d * v);
    }
}

/// Symmetric Dirichlet(alpha, ..., alpha) of dimension k.
inline std::vector<double> sample_dirichlet(StreamRng& r, double alpha, std::size_t k)
{
    std::vector<double> lg(k);
    double mx = -std::numeric_limits<double>::infinity();
    for (auto& x : lg) {
        x = sample_log_gamma(r, alpha);
        mx = std::max(mx, x);
    }
    double sum = 0;
    for (auto& x : lg) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : lg)
        x /= sum;
    return lg;
}

inline std::size_t sample_categorical(StreamRng& r, const std::vector<double>& p)
{
    const double u = r.uniform();
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        s += p[i];
        if (u < s)
            return i;
    }
    return p.size() - 1;
}

// ---------------------------------------------------------------------------
// SynPG

struct SynPGConfig
{
    std::size_t n = 1000;
    double s_w = 1.2;
    double lambda_i = 2.0;
    double lambda_o = 2.0;
    double s_e = 1.5;
    double p_ver = 0.5;
    std::uint64_t seed = 1;
    std::size_t num_commands = 5;

    void check() const
    {
        if (n < 10)
            throw DataError("synpg: n must be at least 10");
        if (!(s_w > 1.0) || !(s_e > 1.0))
            throw DataError("synpg: skews must be greater than 1");
        if (!(lambda_i >= 0) || !(lambda_o >= 0))
            throw DataError("synpg: Poisson means must be non-negative");
        if (!(p_ver >= 0 && p_ver <= 1))
            throw DataError("synpg: p_ver must lie in [0, 1]");
        if (num_commands == 0)
            throw DataError("synpg: num_commands must be positive");
    }

    std::size_t num_agents() const
    {
        return static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n))));
    }
    std::size_t num_activities() const
    {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) / (2.0 + lambda_o)));
    }
    std::size_t num_bootstrap() const
    {
        return static_cast<std::size_t>(std::ceil(lambda_i)) + 1;
    }
};

namespace detail {

/// Shared wiring for SynPG and SynSG: inputs by recency, outputs as new entities.
struct Wiring
{
    GraphBuilder& b;
    double lambda_i, lambda_o, p_ver;
    StreamRng sizes, recency, versions;
    ZipfTable zipf_e;
    std::vector<VertexId> entities; // order of being
    // artifact name -> (latest version entity, version number)
    std::vector<std::pair<VertexId, std::int64_t>> artifacts;
    bool versioning = true;

    Wiring(GraphBuilder& b_, std::uint64_t seed, double li, double lo, double se, double pv)
        : b(b_), lambda_i(li), lambda_o(lo), p_ver(pv), sizes(seed, Stream::Sizes),
          recency(seed, Stream::Recency), versions(seed, Stream::Versions), zipf_e(se)
    {
    }

    VertexId new_artifact()
    {
        const auto idx = artifacts.size();
        Props p;
        if (versioning) {
            p = {{"artifact", "art-" + std::to_string(idx)}, {"version", std::int64_t{1}}};
        }
        const auto e = b.entity(std::move(p));
        artifacts.push_back({e, 1});
        entities.push_back(e);
        return e;
    }

    void run(VertexId a)
    {
        auto k_in = std::size_t{1} + sample_poisson(sizes, lambda_i);
        const auto k_out = std::size_t{1} + sample_poisson(sizes, lambda_o);
        k_in = std::min(k_in, entities.size());
        std::vector<VertexId> chosen;
        while (chosen.size() < k_in) {
            const auto rank = zipf_e.sample(recency, entities.size()); // 1 = newest
            const auto e = entities[entities.size() - rank];
            if (std::find(chosen.begin(), chosen.end(), e) == chosen.end())
                chosen.push_back(e);
        }
        std::sort(chosen.begin(), chosen.end());
        for (auto e : chosen)
            b.add_edge(EdgeType::Used, a, e);
        for (std::size_t i = 0; i < k_out; ++i) {
            VertexId e;
            if (versioning && !artifacts.empty() && versions.uniform() < p_ver) {
                const auto idx = versions.below(artifacts.size());
                auto& [latest, ver] = artifacts[idx];
                ++ver;
                e = b.entity({{"artifact", "art-" + std::to_string(idx)}, {"version", ver}});
                b.add_edge(EdgeType::WasGeneratedBy, e, a);
                b.add_edge(EdgeType::WasDerivedFrom, e, latest);
                latest = e;
                entities.push_back(e);
            } else {
                e = new_artifact();
                b.add_edge(EdgeType::WasGeneratedBy, e, a);
            }
        }
    }
};

} // namespace detail

inline ProvGraph synpg(const SynPGConfig& cfg)
{
    cfg.check();
    GraphBuilder b;
    detail::Wiring w(b, cfg.seed, cfg.lambda_i, cfg.lambda_o, cfg.s_e, cfg.p_ver);
    StreamRng pick(cfg.seed, Stream::AgentPick), cmds(cfg.seed, Stream::Commands);
    ZipfTable zipf_w(cfg.s_w);

    std::vector<VertexId> agents;
    for (std::size_t i = 0; i < cfg.num_agents(); ++i)
        agents.push_back(b.agent({{"name", "agent-" + std::to_string(i)}}));
    auto who = [&]() { return agents[zipf_w.sample(pick, agents.size()) - 1]; };

    for (std::size_t i = 0; i < cfg.num_bootstrap(); ++i) {
        const auto e = w.new_artifact();
        if (!agents.empty())
            b.add_edge(EdgeType::WasAttributedTo, e, who());
    }
    for (std::size_t i = 0; i < cfg.num_activities(); ++i) {
        const auto a = b.activity({{"command", "cmd-" + std::to_string(cmds.below(cfg.num_commands))}});
        if (!agents.empty())
            b.add_edge(EdgeType::WasAssociatedWith, a, who());
        w.run(a);
    }
    return b.build({"artifact", "version", "command", "name"});
}

// ---------------------------------------------------------------------------
// SynSG

struct SynSGConfig
{
    double alpha = 0.1;
    std::size_t k = 5;
    std::size_t n = 20;
    std::size_t num_segments = 10;
    double lambda_i = 2.0;
    double lambda_o = 2.0;
    double s_e = 1.5;
    std::uint64_t seed = 1;

    void check() const
    {
        if (!(alpha > 0))
            throw DataError("synsg: alpha must be positive");
        if (k < 1 || n < 1 || num_segments < 1)
            throw DataError("synsg: k, n and num_segments must be at least 1");
        if (!(s_e > 1.0))
            throw DataError("synsg: s_e must be greater than 1");
        if (!(lambda_i >= 0) || !(lambda_o >= 0))
            throw DataError("synsg: Poisson means must be non-negative");
    }
};

/// Row-stochastic k x k transition matrix with Dirichlet(alpha) rows.
inline std::vector<std::vector<double>> transition_matrix(StreamRng& r, double alpha, std::size_t k)
{
    std::vector<std::vector<double>> m;
    for (std::size_t i = 0; i < k; ++i)
        m.push_back(sample_dirichlet(r, alpha, k));
    return m;
}

inline std::vector<ProvGraph> synsg(const SynSGConfig& cfg)
{
    cfg.check();
    StreamRng dir(cfg.seed, Stream::Dirichlet), chain(cfg.seed, Stream::Chain);
    const auto m = transition_matrix(dir, cfg.alpha, cfg.k);
    std::vector<ProvGraph> out;
    for (std::size_t s = 0; s < cfg.num_segments; ++s) {
        GraphBuilder b;
        // each segment gets its own wiring streams
        detail::Wiring w(b, splitmix64(cfg.seed + 0x51ED2701ULL * (s + 1)), cfg.lambda_i,
                         cfg.lambda_o, cfg.s_e, 0.0);
        w.versioning = false;
        for (std::size_t i = 0; i < static_cast<std::size_t>(std::ceil(cfg.lambda_i)) + 1; ++i)
            w.new_artifact();
        auto state = chain.below(cfg.k);
        for (std::size_t j = 0; j < cfg.n; ++j) {
            if (j > 0)
                state = sample_categorical(chain, m[state]);
            const auto a = b.activity({{"command", "t" + std::to_string(state)}});
            w.run(a);
        }
        out.push_back(b.build({"command"}));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config JSON

inline SynPGConfig synpg_config_from_json(const Json& j)
{
    SynPGConfig c;
    if (!j.is_object())
        throw DataError("synpg config must be an object");
    c.n = j.value("n", c.n);
    c.s_w = j.value("s_w", c.s_w);
    c.lambda_i = j.value("lambda_i", c.lambda_i);
    c.lambda_o = j.value("lambda_o", c.lambda_o);
    c.s_e = j.value("s_e", c.s_e);
    c.p_ver = j.value("p_ver", c.p_ver);
    c.seed = j.value("seed", c.seed);
    c.num_commands = j.value("num_commands", c.num_commands);
    c.check();
    return c;
}

inline Json to_json(const SynPGConfig& c)
{
    return Json{{"n", c.n},         {"s_w", c.s_w},   {"lambda_i", c.lambda_i},
                {"lambda_o", c.lambda_o}, {"s_e", c.s_e}, {"p_ver", c.p_ver},
                {"seed", c.seed},   {"num_commands", c.num_commands}};
}

inline SynSGConfig synsg_config_from_json(const Json& j)
{
    SynSGConfig c;
    if (!j.is_object())
        throw DataError("synsg config must be an object");
    c.alpha = j.value("alpha", c.alpha);
    c.k = j.value("k", c.k);
    c.n = j.value("n", c.n);
    c.num_segments = j.value("num_segments", c.num_segments);
    c.lambda_i = j.value("lambda_i", c.lambda_i);
    c.lambda_o = j.value("lambda_o", c.lambda_o);
    c.s_e = j.value("s_e", c.s_e);
    c.seed = j.value("seed", c.seed);
    c.check();
    return c;
}

inline Json to_json(const SynSGConfig& c)
{
    return Json{{"alpha", c.alpha},       {"k", c.k},         {"n", c.n},
                {"num_segments", c.num_segments}, {"lambda_i", c.lambda_i},
                {"lambda_o", c.lambda_o}, {"s_e", c.s_e},     {"seed", c.seed}};
}

} // namespace provq
