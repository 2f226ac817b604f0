#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "todo/todo.hpp"

namespace todo::cli {

namespace {

struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;
};

std::optional<Shape> parse_shape(const std::string& text)
{
    const auto x = text.find('x');
    if (x == std::string::npos)
        return std::nullopt;
    Shape s;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    auto [p1, e1] = std::from_chars(begin, begin + x, s.height);
    auto [p2, e2] = std::from_chars(begin + x + 1, end, s.width);
    if (e1 != std::errc{} || p1 != begin + x || e2 != std::errc{} || p2 != end || s.height == 0 ||
        s.width == 0)
        return std::nullopt;
    return s;
}

const CLI::Validator kShape(
    [](std::string& v) -> std::string {
        return parse_shape(v) ? std::string() : "shape must be HxW with positive integers, got '" + v + "'";
    },
    "HxW");

const CLI::Validator kRatio(
    [](std::string& v) -> std::string {
        double r = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), r);
        if (ec != std::errc{} || p != v.data() + v.size() || !(r >= 0.0 && r < 1.0))
            return "ratio must be in [0,1)";
        return {};
    },
    "[0,1)");

std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Writes to --out when given, otherwise to the data stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_)
                throw Error("cannot open '" + path + "' for writing");
            stream_ = file_.get();
        }
    }
    std::ostream& os() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

struct BenchArgs {
    std::string preset;
    std::string method = "todo";
    std::string tokens = "64x64";
    std::size_t dim = 320;
    std::size_t heads = 8;
    double ratio = 0.75;
    std::uint64_t seed = 0;
    int repeats = 20;
    int warmup = 3;
    unsigned threads = 1;
    std::string isa = "auto";
    std::string out;
};

struct AttnArgs {
    std::string q, k, v, out;
    std::string method = "dense";
    double ratio = 0.0;
    std::size_t heads = 8;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string isa = "auto";
};

struct AnalyzeArgs {
    std::vector<std::string> files;
    std::vector<std::size_t> ks;
    std::string isa = "auto";
    std::string out;
};

struct CompareArgs {
    std::string a, b;
    std::string out;
};

struct MemArgs {
    std::uint64_t batch = 1;
    std::uint64_t heads = 8;
    std::uint64_t nq = 0;
    std::uint64_t nkv = 0;
    std::uint64_t bytes = 2;
};

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    RunOptions run;
    run.threads = a.threads;
    run.isa = parse_isa(a.isa);

    Sink sink(a.out, out);
    std::ostream& os = sink.os();
    os << bench_csv_header() << '\n';

    if (a.preset == "paper") {
        SuiteOptions opts;
        opts.repeats = a.repeats;
        opts.warmup = a.warmup;
        opts.seed = a.seed;
        opts.run = run;
        opts.on_record = [&os](const BenchRecord& r) { os << to_csv_row(r) << '\n' << std::flush; };
        paper_preset_suite(opts);
        return kExitOk;
    }

    const Shape shape = *parse_shape(a.tokens);
    BenchConfig cfg;
    cfg.method = parse_method(a.method);
    cfg.height = shape.height;
    cfg.width = shape.width;
    cfg.dim = a.dim;
    cfg.heads = a.heads;
    cfg.ratio = a.ratio;
    cfg.repeats = a.repeats;
    cfg.warmup = a.warmup;
    cfg.seed = a.seed;
    cfg.run = run;
    os << to_csv_row(run_bench(cfg)) << '\n';
    return kExitOk;
}

int cmd_attn(const AttnArgs& a, std::ostream&)
{
    const Method method = parse_method(a.method);
    RunOptions run;
    run.threads = a.threads;
    run.isa = parse_isa(a.isa);

    const TokenGrid q = tgrd::read_file(a.q);
    const AttentionConfig cfg = AttentionConfig::for_model_dim(q.dim(), a.heads);
    const MergeRatio ratio(a.ratio);

    std::optional<AttentionOutput> result;
    if (method == Method::tome) {
        result = tome_attention(q, tome_merge_count(ratio, q.height(), q.width()), a.seed, cfg, run);
    } else {
        const TokenGrid k = tgrd::read_file(a.k);
        const TokenGrid v = tgrd::read_file(a.v);
        if (method == Method::dense) {
            if (a.ratio != 0.0)
                throw RangeError("dense attention takes no merge ratio (use --ratio 0)");
            result = dense_attention(q, k, v, cfg, run);
        } else {
            result = todo_attention(q, k, v, ratio_to_spec(ratio, k.height(), k.width()), cfg, run);
        }
    }
    tgrd::write_file(a.out, result->out);
    return kExitOk;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out)
{
    const Isa isa = parse_isa(a.isa);
    const std::vector<std::size_t> ks = a.ks.empty() ? std::vector<std::size_t>{3, 5} : a.ks;

    Sink sink(a.out, out);
    std::ostream& os = sink.os();
    os << "file,k,min_sim,mean_sim,max_sim,top3_fraction\n";
    for (const auto& file : a.files) {
        const TokenGrid grid = tgrd::read_file(file);
        for (std::size_t k : ks) {
            const SimilarityStats s = neighborhood_stats(grid, k, isa);
            os << file << ',' << k << ',' << shortest(s.min_sim) << ',' << shortest(s.mean_sim) << ','
               << shortest(s.max_sim) << ',' << shortest(s.top3_fraction) << '\n';
        }
    }
    return kExitOk;
}

int cmd_compare(const CompareArgs& a, std::ostream& out)
{
    const TokenGrid ga = tgrd::read_file(a.a);
    const TokenGrid gb = tgrd::read_file(a.b);
    const double err = mse(ga, gb);
    const double hpf_a = hpf_magnitude(ga);
    const double hpf_b = hpf_magnitude(gb);

    Sink sink(a.out, out);
    sink.os() << "mse,hpf_a,hpf_b,hpf_delta\n"
              << shortest(err) << ',' << shortest(hpf_a) << ',' << shortest(hpf_b) << ','
              << shortest(hpf_b - hpf_a) << '\n';
    return kExitOk;
}

int cmd_mem(const MemArgs& a, std::ostream& out)
{
    const MemoryEstimate m =
        estimate_attention_memory(a.batch, a.heads, a.nq, a.nkv == 0 ? a.nq : a.nkv, a.bytes);
    out << format_memory(m) << '\n';
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Token-downsampled attention: benchmarks, kernels and redundancy analysis"};
    app.name("todo-attn");
    app.require_subcommand(1);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Time dense / todo / tome attention and emit CSV");
    b->add_option("--preset", bench.preset, "Run a named preset suite")->check(CLI::IsMember({"paper"}));
    b->add_option("--method", bench.method, "dense, todo or tome")
        ->check(CLI::IsMember({"dense", "todo", "tome"}));
    b->add_option("--tokens", bench.tokens, "Token grid HxW")->check(kShape);
    b->add_option("--dim", bench.dim, "Model dim")->check(CLI::PositiveNumber);
    b->add_option("--heads", bench.heads, "Attention heads")->check(CLI::PositiveNumber);
    b->add_option("--ratio", bench.ratio, "Merge ratio")->check(kRatio);
    b->add_option("--seed", bench.seed, "Workload seed");
    b->add_option("--repeats", bench.repeats, "Timed repeats")->check(CLI::Range(1, 1 << 20));
    b->add_option("--warmup", bench.warmup, "Untimed warmup runs")->check(CLI::Range(0, 1 << 20));
    b->add_option("--threads", bench.threads, "Kernel threads")->check(CLI::Range(1u, 1024u));
    b->add_option("--isa", bench.isa, "Kernel ISA")->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
    b->add_option("--out", bench.out, "CSV output path (default stdout)");

    AttnArgs attn;
    auto* at = app.add_subcommand("attn", "Run one attention method over TGRD inputs");
    at->add_option("--q", attn.q, "Query grid (TGRD)")->required()->check(CLI::ExistingFile);
    at->add_option("--k", attn.k, "Key grid (TGRD)")->check(CLI::ExistingFile);
    at->add_option("--v", attn.v, "Value grid (TGRD)")->check(CLI::ExistingFile);
    at->add_option("--method", attn.method, "dense, todo or tome")
        ->check(CLI::IsMember({"dense", "todo", "tome"}));
    at->add_option("--ratio", attn.ratio, "Merge ratio")->check(kRatio);
    at->add_option("--heads", attn.heads, "Attention heads")->check(CLI::PositiveNumber);
    at->add_option("--seed", attn.seed, "ToMe partition seed");
    at->add_option("--threads", attn.threads, "Kernel threads")->check(CLI::Range(1u, 1024u));
    at->add_option("--isa", attn.isa, "Kernel ISA")->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
    at->add_option("--out", attn.out, "Output grid (TGRD)")->required();

    AnalyzeArgs analyze;
    auto* an = app.add_subcommand("analyze", "Neighborhood cosine-similarity statistics of TGRD grids");
    an->add_option("files", analyze.files, "TGRD files")->required()->check(CLI::ExistingFile);
    an->add_option("--k", analyze.ks, "Neighborhood size(s), 3 and/or 5 (default both)")
        ->check(CLI::IsMember({3, 5}));
    an->add_option("--isa", analyze.isa, "Kernel ISA")->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
    an->add_option("--out", analyze.out, "CSV output path (default stdout)");

    CompareArgs compare;
    auto* cp = app.add_subcommand("compare", "MSE and high-pass magnitude of two TGRD grids");
    cp->add_option("a", compare.a, "Baseline grid")->required()->check(CLI::ExistingFile);
    cp->add_option("b", compare.b, "Candidate grid")->required()->check(CLI::ExistingFile);
    cp->add_option("--out", compare.out, "CSV output path (default stdout)");

    MemArgs mem;
    auto* me = app.add_subcommand("mem", "Bytes of a materialized attention map");
    me->add_option("--batch", mem.batch, "Batch size")->check(CLI::PositiveNumber);
    me->add_option("--heads", mem.heads, "Heads")->check(CLI::PositiveNumber);
    me->add_option("--nq", mem.nq, "Query tokens")->required()->check(CLI::PositiveNumber);
    me->add_option("--nkv", mem.nkv, "Key/value tokens (default: --nq)")->check(CLI::PositiveNumber);
    me->add_option("--bytes", mem.bytes, "Bytes per element")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
        if (at->parsed() && attn.method != "tome" && (attn.k.empty() || attn.v.empty()))
            throw CLI::ValidationError("--k/--v", "--k and --v are required for dense and todo");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (b->parsed())
            return cmd_bench(bench, out);
        if (at->parsed())
            return cmd_attn(attn, out);
        if (an->parsed())
            return cmd_analyze(analyze, out);
        if (cp->parsed())
            return cmd_compare(compare, out);
        return cmd_mem(mem, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace todo::cli
