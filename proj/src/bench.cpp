#include "todo/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>

#include "todo/error.hpp"
#include "todo/tome.hpp"

namespace todo {

namespace {

std::string format_fixed(double v, int precision)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

std::string format_shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void run_once(const BenchConfig& cfg, const Workload& w, const AttentionConfig& attn)
{
    switch (cfg.method) {
    case Method::dense:
        dense_attention(w.q, w.k, w.v, attn, cfg.run);
        break;
    case Method::todo:
        todo_attention(w.q, w.k, w.v, ratio_to_spec(MergeRatio(cfg.ratio), cfg.height, cfg.width), attn,
                       cfg.run);
        break;
    case Method::tome:
        tome_attention(w.q, tome_merge_count(MergeRatio(cfg.ratio), cfg.height, cfg.width), cfg.seed,
                       attn, cfg.run);
        break;
    }
}

} // namespace

std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::dense: return "dense";
    case Method::todo: return "todo";
    case Method::tome: return "tome";
    }
    return "unknown";
}

Method parse_method(std::string_view name)
{
    for (Method m : {Method::dense, Method::todo, Method::tome})
        if (to_string(m) == name)
            return m;
    throw RangeError("unknown method '" + std::string(name) + "' (expected dense, todo or tome)");
}

MemoryEstimate estimate_attention_memory(std::uint64_t batch, std::uint64_t heads, std::uint64_t n_q,
                                         std::uint64_t n_kv, std::uint64_t bytes_per_element)
{
    if (batch == 0 || heads == 0 || n_q == 0 || n_kv == 0 || bytes_per_element == 0)
        throw RangeError("memory estimate inputs must be positive");
    MemoryEstimate m{batch, heads, n_q, n_kv, bytes_per_element, 1};
    for (std::uint64_t f : {batch, heads, n_q, n_kv, bytes_per_element})
        if (__builtin_mul_overflow(m.total_bytes, f, &m.total_bytes))
            throw OverflowError("attention memory estimate exceeds 64 bits");
    return m;
}

std::string format_memory(const MemoryEstimate& m)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%llu bytes (%.2f GB, %.2f GiB)",
                  static_cast<unsigned long long>(m.total_bytes), m.gigabytes(), m.gibibytes());
    return buf;
}

Workload make_workload(std::size_t height, std::size_t width, std::size_t dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    auto grid = [&] {
        std::vector<float> data(height * width * dim);
        for (auto& x : data)
            x = normal(rng);
        return TokenGrid(height, width, dim, std::move(data));
    };
    TokenGrid q = grid();
    TokenGrid k = grid();
    TokenGrid v = grid();
    return {std::move(q), std::move(k), std::move(v)};
}

std::int64_t time_method(const BenchConfig& cfg, const Workload& workload)
{
    if (cfg.repeats < 1)
        throw RangeError("repeats must be at least 1");
    if (cfg.warmup < 0)
        throw RangeError("warmup must be non-negative");
    const AttentionConfig attn = AttentionConfig::for_model_dim(cfg.dim, cfg.heads);

    for (int i = 0; i < cfg.warmup; ++i)
        run_once(cfg, workload, attn);

    std::vector<std::int64_t> samples;
    samples.reserve(cfg.repeats);
    for (int i = 0; i < cfg.repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run_once(cfg, workload, attn);
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    const std::int64_t median =
        samples.size() % 2 ? samples[mid] : (samples[mid - 1] + samples[mid]) / 2;
    return std::max<std::int64_t>(median, 1);
}

BenchRecord run_bench(const BenchConfig& cfg)
{
    MergeRatio ratio(cfg.ratio);
    if (cfg.height == 0 || cfg.width == 0 || cfg.dim == 0)
        throw ShapeError("benchmark shape must be positive");
    // Surface shape errors before spending time on the workload.
    AttentionConfig::for_model_dim(cfg.dim, cfg.heads);
    if (cfg.method == Method::tome)
        (void)tome_merge_count(ratio, cfg.height, cfg.width);

    const Workload workload = make_workload(cfg.height, cfg.width, cfg.dim, cfg.seed);

    BenchRecord rec;
    rec.method = cfg.method;
    rec.height = cfg.height;
    rec.width = cfg.width;
    rec.dim = cfg.dim;
    rec.ratio = cfg.method == Method::dense ? 0.0 : cfg.ratio;
    rec.repeats = cfg.repeats;
    rec.wall_nanos = time_method(cfg, workload);
    rec.throughput = static_cast<double>(cfg.height * cfg.width) / (static_cast<double>(rec.wall_nanos) * 1e-9);

    if (cfg.method == Method::dense) {
        rec.speedup_vs_dense = 1.0;
    } else {
        std::int64_t dense = 0;
        if (cfg.dense_wall_nanos) {
            dense = *cfg.dense_wall_nanos;
        } else {
            BenchConfig base = cfg;
            base.method = Method::dense;
            dense = time_method(base, workload);
        }
        if (dense <= 0)
            throw RangeError("dense baseline wall time must be positive");
        rec.speedup_vs_dense = static_cast<double>(dense) / static_cast<double>(rec.wall_nanos);
    }
    return rec;
}

std::string_view bench_csv_header() noexcept
{
    return "method,height,width,dim,ratio,repeats,wall_nanos_median,throughput_tokens_per_s,speedup_vs_dense";
}

std::string to_csv_row(const BenchRecord& r)
{
    std::string row;
    row += to_string(r.method);
    row += ',' + std::to_string(r.height);
    row += ',' + std::to_string(r.width);
    row += ',' + std::to_string(r.dim);
    row += ',' + format_shortest(r.ratio);
    row += ',' + std::to_string(r.repeats);
    row += ',' + std::to_string(r.wall_nanos);
    row += ',' + format_fixed(r.throughput, 1);
    row += ',' + format_fixed(r.speedup_vs_dense, 4);
    return row;
}

std::vector<SuitePoint> paper_preset_plan()
{
    std::vector<SuitePoint> plan;
    for (std::size_t pixels : {1024u, 1536u, 2048u}) {
        const std::size_t side = latent_side(pixels);
        plan.push_back({Method::dense, side, 0.0});
        for (double ratio : {0.75, 0.89}) {
            plan.push_back({Method::todo, side, ratio});
            plan.push_back({Method::tome, side, ratio});
        }
    }
    return plan;
}

std::vector<BenchRecord> paper_preset_suite(const SuiteOptions& opts)
{
    std::vector<BenchRecord> records;
    std::map<std::size_t, std::int64_t> dense_nanos;
    for (const SuitePoint& p : paper_preset_plan()) {
        BenchConfig cfg;
        cfg.method = p.method;
        cfg.height = cfg.width = p.side;
        cfg.dim = opts.dim;
        cfg.heads = opts.heads;
        cfg.ratio = p.ratio;
        cfg.repeats = opts.repeats;
        cfg.warmup = opts.warmup;
        cfg.seed = opts.seed;
        cfg.run = opts.run;
        if (auto it = dense_nanos.find(p.side); it != dense_nanos.end())
            cfg.dense_wall_nanos = it->second;

        BenchRecord rec = run_bench(cfg);
        if (p.method == Method::dense)
            dense_nanos[p.side] = rec.wall_nanos;
        if (opts.on_record)
            opts.on_record(rec);
        records.push_back(rec);
    }
    return records;
}

bool todo_speedup_monotone(const std::vector<BenchRecord>& records)
{
    std::map<double, std::vector<const BenchRecord*>> by_ratio;
    for (const auto& r : records)
        if (r.method == Method::todo)
            by_ratio[r.ratio].push_back(&r);
    for (auto& [ratio, recs] : by_ratio) {
        std::sort(recs.begin(), recs.end(), [](const BenchRecord* a, const BenchRecord* b) {
            return a->height * a->width < b->height * b->width;
        });
        for (std::size_t i = 1; i < recs.size(); ++i)
            if (recs[i]->speedup_vs_dense < recs[i - 1]->speedup_vs_dense)
                return false;
    }
    return true;
}

} // namespace todo
