// provq: generate, validate, segment, adjust, summarize, benchmark, export, serve.
//
// Exit codes: 0 ok, 1 usage, 2 data or query error, 3 fact budget exceeded.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "provq/bench.hpp"
#include "provq/service.hpp"

namespace {

using namespace provq;

std::string read_text(const std::string& path)
{
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const std::string& path)
{
    auto j = Json::parse(read_text(path), nullptr, false);
    if (j.is_discarded())
        throw DataError("'" + path + "' is not valid JSON");
    return j;
}

/// Inline JSON if the argument looks like an object, else a file path.
Json json_arg(const std::string& arg)
{
    if (!arg.empty() && arg.front() == '{') {
        auto j = Json::parse(arg, nullptr, false);
        if (j.is_discarded())
            throw DataError("inline argument is not valid JSON");
        return j;
    }
    return read_json(arg);
}

void emit(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f || !(f << text))
        throw DataError("cannot write '" + out + "'");
}

std::vector<std::string> split(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);)
        if (!item.empty())
            out.push_back(item);
    return out;
}

/// "12", "1k", "2.5k", "1m".
double parse_number(const std::string& s)
{
    if (s.empty())
        throw DataError("empty number");
    double mult = 1;
    std::string body = s;
    switch (std::tolower(static_cast<unsigned char>(s.back()))) {
    case 'k': mult = 1e3; body.pop_back(); break;
    case 'm': mult = 1e6; body.pop_back(); break;
    default: break;
    }
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(body, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != body.size())
        throw DataError("not a number: '" + s + "'");
    return v * mult;
}

/// Comma-separated ids, or firstN / lastN over entities in order of being.
std::vector<VertexId> parse_vertices(const ProvGraph& g, const std::string& spec)
{
    for (auto [prefix, last] : {std::pair{"first", false}, std::pair{"last", true}}) {
        const std::string p = prefix;
        if (spec.rfind(p, 0) == 0) {
            const auto rest = spec.substr(p.size());
            const auto n = rest.empty() ? std::size_t{2} : static_cast<std::size_t>(parse_number(rest));
            return last ? bench::last_entities(g, n) : bench::first_entities(g, n);
        }
    }
    std::vector<VertexId> out;
    for (const auto& x : split(spec)) {
        const auto v = parse_number(x);
        if (v < 0 || v != std::floor(v))
            throw DataError("bad vertex id '" + x + "'");
        out.push_back(static_cast<VertexId>(v));
    }
    if (out.empty())
        throw DataError("empty vertex list");
    return out;
}

ProvGraph load_graph(const std::string& path) { return from_json(read_json(path)); }

std::vector<ProvGraph> load_synsg(const Json& doc)
{
    const auto& arr = doc.is_array() ? doc : doc.at("segments");
    std::vector<ProvGraph> out;
    for (const auto& g : arr)
        out.push_back(from_json(g));
    return out;
}

Json synsg_document(const SynSGConfig& c)
{
    Json segs = Json::array();
    for (const auto& g : synsg(c))
        segs.push_back(to_json(g));
    return Json{{"config", to_json(c)}, {"segments", std::move(segs)}};
}

/// Set by the chosen subcommand's parse callback, run after parsing.
std::function<void()> action;

int run(int argc, char** argv)
{
    CLI::App app{"provq: provenance segmentation and summarization"};
    app.require_subcommand(1);

    // gen ------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a synthetic graph");
    gen->require_subcommand(1);
    {
        auto* sp = gen->add_subcommand("synpg", "SynPG provenance graph");
        static SynPGConfig c;
        static std::string config, out;
        sp->add_option("--config", config, "JSON config file (flags override it)");
        sp->add_option("--n", c.n, "target vertex count");
        sp->add_option("--s-w", c.s_w, "agent Zipf skew");
        sp->add_option("--lambda-i", c.lambda_i, "mean activity inputs");
        sp->add_option("--lambda-o", c.lambda_o, "mean activity outputs");
        sp->add_option("--s-e", c.s_e, "entity selection skew");
        sp->add_option("--p-ver", c.p_ver, "probability an output versions an input");
        sp->add_option("--num-commands", c.num_commands, "distinct command names");
        sp->add_option("--seed", c.seed, "random seed");
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([sp] {
            action = [sp] {
                auto cfg = config.empty() ? SynPGConfig{} : synpg_config_from_json(read_json(config));
                auto set = [&](const char* name, auto& field, const auto& value) {
                    if (sp->count(name))
                        field = value;
                };
                set("--n", cfg.n, c.n);
                set("--s-w", cfg.s_w, c.s_w);
                set("--lambda-i", cfg.lambda_i, c.lambda_i);
                set("--lambda-o", cfg.lambda_o, c.lambda_o);
                set("--s-e", cfg.s_e, c.s_e);
                set("--p-ver", cfg.p_ver, c.p_ver);
                set("--num-commands", cfg.num_commands, c.num_commands);
                set("--seed", cfg.seed, c.seed);
                cfg.check();
                emit(artifact_text(to_json(synpg(cfg))), out);
            };
        });
    }
    {
        auto* sp = gen->add_subcommand("synsg", "SynSG segment set");
        static SynSGConfig c;
        static std::string config, out;
        sp->add_option("--config", config, "JSON config file (flags override it)");
        sp->add_option("--alpha", c.alpha, "Dirichlet concentration");
        sp->add_option("--k", c.k, "activity types");
        sp->add_option("--n", c.n, "activities per segment");
        sp->add_option("--segments", c.num_segments, "number of segments");
        sp->add_option("--lambda-i", c.lambda_i, "mean activity inputs");
        sp->add_option("--lambda-o", c.lambda_o, "mean activity outputs");
        sp->add_option("--s-e", c.s_e, "entity selection skew");
        sp->add_option("--seed", c.seed, "random seed");
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([sp] {
            action = [sp] {
                auto cfg = config.empty() ? SynSGConfig{} : synsg_config_from_json(read_json(config));
                auto set = [&](const char* name, auto& field, const auto& value) {
                    if (sp->count(name))
                        field = value;
                };
                set("--alpha", cfg.alpha, c.alpha);
                set("--k", cfg.k, c.k);
                set("--n", cfg.n, c.n);
                set("--segments", cfg.num_segments, c.num_segments);
                set("--lambda-i", cfg.lambda_i, c.lambda_i);
                set("--lambda-o", cfg.lambda_o, c.lambda_o);
                set("--s-e", cfg.s_e, c.s_e);
                set("--seed", cfg.seed, c.seed);
                cfg.check();
                emit(artifact_text(synsg_document(cfg)), out);
            };
        });
    }

    // validate -------------------------------------------------------------
    int validate_status = 0;
    {
        auto* sp = app.add_subcommand("validate", "check a graph file");
        static std::string path, out;
        sp->add_option("graph", path, "graph file")->required();
        sp->add_option("--out,-o", out, "report file (default stdout)");
        sp->callback([&validate_status] {
            action = [&validate_status] {
                const auto report = validate(load_graph(path));
                Json vs = Json::array();
                for (const auto& v : report)
                    vs.push_back({{"message", v.message}, {"vertices", v.vertices}});
                emit(artifact_text(Json{{"valid", report.empty()}, {"violations", std::move(vs)}}), out);
                validate_status = report.empty() ? 0 : 2;
            };
        });
    }

    // seg ------------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("seg", "segment a graph between source and destination entities");
        static std::string graph, src, dst, alg = "tst", backend = "plain", boundary, format = "json", out;
        static std::size_t budget = 0;
        static bool no_early_stop = false;
        sp->add_option("--graph,-g", graph, "graph file")->required();
        sp->add_option("--src", src, "source entities: ids (0,1) or firstN/lastN")->required();
        sp->add_option("--dst", dst, "destination entities: ids or firstN/lastN")->required();
        sp->add_option("--alg", alg, "baseline | seg | tst")->capture_default_str();
        sp->add_option("--backend", backend, "plain | compressed")->capture_default_str();
        sp->add_option("--budget", budget, "fact budget (default $PROVQ_FACT_BUDGET, 0 = none)");
        sp->add_flag("--no-early-stop", no_early_stop, "disable early stopping");
        sp->add_option("--boundary", boundary, "boundary JSON (file or inline)");
        sp->add_option("--format", format, "json | dot")->check(CLI::IsMember({"json", "dot"}));
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([sp] {
            action = [sp] {
                const auto g = load_graph(graph);
                SegQuery q;
                q.src = parse_vertices(g, src);
                q.dst = parse_vertices(g, dst);
                q.algorithm = parse_algorithm(alg);
                q.options = default_seg_options();
                q.options.backend = parse_backend(backend);
                if (sp->count("--budget"))
                    q.options.fact_budget = budget;
                q.options.early_stop = !no_early_stop;
                if (!boundary.empty())
                    q.boundary = boundary_from_json(json_arg(boundary));
                const auto s = segment(g, q);
                emit(format == "dot" ? to_dot(g, s) : artifact_text(to_json(s)), out);
            };
        });
    }

    // adjust ---------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("adjust", "apply a new boundary to a segment");
        static std::string graph, seg, boundary, format = "json", out;
        sp->add_option("--graph,-g", graph, "graph file")->required();
        sp->add_option("--segment,-s", seg, "segment file")->required();
        sp->add_option("--boundary", boundary, "boundary JSON (file or inline)")->required();
        sp->add_option("--format", format, "json | dot")->check(CLI::IsMember({"json", "dot"}));
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([] {
            action = [] {
                const auto g = load_graph(graph);
                const auto prev = segment_from_json(read_json(seg));
                // Segment files do not carry the induction; rebuild it from the query.
                const auto s = apply_boundary(g, prev.query, induce(g, prev.query),
                                              boundary_from_json(json_arg(boundary)));
                emit(format == "dot" ? to_dot(g, s) : artifact_text(to_json(s)), out);
            };
        });
    }

    // sum ------------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("sum", "summarize segments into a provenance summary graph");
        static std::vector<std::string> segments;
        static std::string graph, synsg_doc, pagg, format = "json", out;
        static std::size_t k = 1, iso_cap = 64;
        sp->add_option("segments", segments, "segment files cut from --graph");
        sp->add_option("--graph,-g", graph, "graph the segment files refer to");
        sp->add_option("--synsg", synsg_doc, "SynSG document (from gen synsg)");
        sp->add_option("--pagg", pagg, "aggregation properties JSON (file or inline)");
        sp->add_option("--k", k, "provenance-type radius")->capture_default_str();
        sp->add_option("--iso-cap", iso_cap, "largest neighborhood compared")->capture_default_str();
        sp->add_option("--format", format, "json | dot")->check(CLI::IsMember({"json", "dot"}));
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([] {
            action = [] {
                std::vector<SegmentGraph> segs;
                if (!synsg_doc.empty()) {
                    for (auto& g : load_synsg(read_json(synsg_doc)))
                        segs.push_back(as_segment(std::move(g)));
                }
                if (!segments.empty()) {
                    if (graph.empty())
                        throw DataError("segment files need --graph");
                    const auto g = load_graph(graph);
                    for (const auto& p : segments)
                        segs.push_back(materialize(g, segment_from_json(read_json(p))));
                }
                if (segs.empty())
                    throw DataError("nothing to summarize: pass segment files or --synsg");
                const auto pa = pagg.empty() ? Pagg{} : pagg_from_json(json_arg(pagg));
                const auto s = summarize(segs, pa, {.k = k, .iso_cap = iso_cap});
                emit(format == "dot" ? to_dot(s) : artifact_text(to_json(s, &segs)), out);
            };
        });
    }

    // bench ----------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("bench", "run a benchmark sweep and write CSV");
        static std::string experiment, sizes, values, algs = "baseline,seg,tst", backend = "plain", out;
        static std::size_t runs = 1, seeds = 10, n = 10000, budget = 0, k = 1;
        static std::uint64_t seed = 1;
        static double alpha = 0;
        static bool no_warmup = false, no_early_stop = false;
        sp->add_option("experiment", experiment,
                       "seg-scale | seg-skew | seg-lambda | seg-early | sum-alpha | sum-k | sum-n | sum-segments")
            ->required();
        sp->add_option("--sizes", sizes, "graph sizes for seg-scale, e.g. 1k,5k,10k");
        sp->add_option("--values", values, "sweep values (comma separated)");
        sp->add_option("--algs", algs, "algorithms")->capture_default_str();
        sp->add_option("--backend", backend, "plain | compressed")->capture_default_str();
        sp->add_option("--n", n, "graph size when the sweep is not over size")->capture_default_str();
        sp->add_option("--runs", runs, "timed runs per point (median)")->capture_default_str();
        sp->add_flag("--no-warmup", no_warmup, "do not discard a warm-up run");
        sp->add_flag("--no-early-stop", no_early_stop, "disable early stopping");
        sp->add_option("--seed", seed, "graph seed")->capture_default_str();
        sp->add_option("--seeds", seeds, "seeds averaged per summarization point")->capture_default_str();
        sp->add_option("--budget", budget, "fact budget (default $PROVQ_FACT_BUDGET, 0 = none)");
        sp->add_option("--k", k, "provenance-type radius for summarization")->capture_default_str();
        sp->add_option("--alpha", alpha, "Dirichlet concentration for non-alpha summarization sweeps");
        sp->add_option("--out,-o", out, "CSV file (default stdout)");
        sp->callback([sp] {
            action = [sp] {
                std::vector<double> vals;
                for (const auto& x : split(!sizes.empty() ? sizes : values))
                    vals.push_back(parse_number(x));
                std::vector<bench::BenchRow> rows;
                if (experiment.rfind("sum-", 0) == 0) {
                    bench::SumBenchParams p;
                    p.experiment = experiment;
                    p.values = vals;
                    p.seeds = seeds;
                    p.k = k;
                    if (sp->count("--alpha"))
                        p.alpha = alpha;
                    rows = bench::bench_sum(p);
                } else {
                    bench::SegBenchParams p;
                    p.experiment = experiment;
                    p.values = vals;
                    p.n = n;
                    p.algs.clear();
                    for (const auto& a : split(algs))
                        p.algs.push_back(parse_algorithm(a));
                    p.backend = parse_backend(backend);
                    p.seed = seed;
                    p.runs = std::max<std::size_t>(runs, 1);
                    p.warmup = !no_warmup;
                    p.budget = sp->count("--budget") ? budget : default_seg_options().fact_budget;
                    p.early_stop = !no_early_stop;
                    rows = bench::bench_seg(p);
                }
                emit(bench::to_csv(rows), out);
            };
        });
    }

    // export ---------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("export", "export a graph or segment as DOT or JSON");
        static std::string graph, seg, format = "dot", out;
        sp->add_option("--graph,-g", graph, "graph file")->required();
        sp->add_option("--segment,-s", seg, "segment file to highlight");
        sp->add_option("--format", format, "dot | json")->check(CLI::IsMember({"json", "dot"}));
        sp->add_option("--out,-o", out, "output file (default stdout)");
        sp->callback([] {
            action = [] {
                const auto g = load_graph(graph);
                if (seg.empty()) {
                    emit(format == "dot" ? to_dot(g) : artifact_text(to_json(g)), out);
                    return;
                }
                const auto s = segment_from_json(read_json(seg));
                if (format == "dot")
                    emit(to_dot(g, s), out);
                else
                    emit(artifact_text(to_json(materialize(g, s).g)), out);
            };
        });
    }

    // serve ----------------------------------------------------------------
    {
        auto* sp = app.add_subcommand("serve", "run the HTTP/JSON service");
        static std::string host = "127.0.0.1";
        static int port = 8080;
        static std::size_t capacity = 64;
        sp->add_option("--host", host, "bind address")->capture_default_str();
        sp->add_option("--port,-p", port, "port (default $PROVQ_PORT, else 8080)");
        sp->add_option("--capacity", capacity, "LRU capacity per kind")->capture_default_str();
        sp->callback([sp] {
            action = [sp] {
                if (!sp->count("--port"))
                    if (auto p = env_size("PROVQ_PORT"))
                        port = static_cast<int>(*p);
                ServiceConfig cfg;
                cfg.capacity = capacity;
                Service svc(cfg);
                if (!svc.bind(host, port))
                    throw DataError("cannot bind " + host + ":" + std::to_string(port));
                std::cerr << "provq listening on http://" << host << ":" << port << "\n";
                svc.listen_after_bind();
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    action();
    return validate_status;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const provq::BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const provq::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const provq::QueryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
