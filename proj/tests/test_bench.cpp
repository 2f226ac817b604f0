#include <cstring>

#include "doctest.h"
#include "todo/bench.hpp"
#include "todo/error.hpp"

using namespace todo;

TEST_CASE("memory estimate reproduces the half-precision figure")
{
    const auto m = estimate_attention_memory(1, 8, 65536, 65536, 2);
    CHECK(m.total_bytes == 68719476736ull);
    CHECK(format_memory(m) == "68719476736 bytes (68.72 GB, 64.00 GiB)");
    CHECK(estimate_attention_memory(1, 1, 1, 1, 1).total_bytes == 1);
    CHECK(estimate_attention_memory(1, 8, 65536, 65536 / 4, 2).total_bytes * 4 == m.total_bytes);
    CHECK_THROWS_AS(estimate_attention_memory(1u << 20, 1u << 20, 1u << 20, 1u << 20, 2), OverflowError);
    CHECK_THROWS_AS(estimate_attention_memory(0, 8, 1, 1, 2), RangeError);
}

TEST_CASE("method names")
{
    for (Method m : {Method::dense, Method::todo, Method::tome})
        CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_method("flash"), RangeError);
}

TEST_CASE("paper preset plan has fifteen points")
{
    const auto plan = paper_preset_plan();
    CHECK(plan.size() == 15);
    std::size_t dense = 0;
    for (const auto& p : plan) {
        dense += p.method == Method::dense;
        CHECK((p.side == 128 || p.side == 192 || p.side == 256));
        if (p.method == Method::dense)
            CHECK(p.ratio == 0.0);
        else
            CHECK((p.ratio == 0.75 || p.ratio == 0.89));
    }
    CHECK(dense == 3);
}

TEST_CASE("csv header and row shape")
{
    CHECK(bench_csv_header() ==
          "method,height,width,dim,ratio,repeats,wall_nanos_median,throughput_tokens_per_s,speedup_vs_dense");
    BenchRecord r;
    r.method = Method::todo;
    r.height = 64;
    r.width = 32;
    r.dim = 64;
    r.ratio = 0.75;
    r.repeats = 5;
    r.wall_nanos = 2000000;
    r.throughput = 1024000.0;
    r.speedup_vs_dense = 3.5;
    CHECK(to_csv_row(r) == "todo,64,32,64,0.75,5,2000000,1024000.0,3.5000");
}

TEST_CASE("workloads are deterministic per seed")
{
    const auto a = make_workload(4, 5, 6, 9), b = make_workload(4, 5, 6, 9), c = make_workload(4, 5, 6, 10);
    CHECK(std::memcmp(a.q.data().data(), b.q.data().data(), a.q.data().size_bytes()) == 0);
    CHECK(std::memcmp(a.v.data().data(), b.v.data().data(), a.v.data().size_bytes()) == 0);
    CHECK(std::memcmp(a.k.data().data(), c.k.data().data(), a.k.data().size_bytes()) != 0);
    CHECK(std::memcmp(a.q.data().data(), a.k.data().data(), a.q.data().size_bytes()) != 0);
}

TEST_CASE("run_bench echoes its inputs")
{
    BenchConfig cfg;
    cfg.method = Method::todo;
    cfg.height = 16;
    cfg.width = 16;
    cfg.dim = 32;
    cfg.heads = 2;
    cfg.ratio = 0.75;
    cfg.repeats = 3;
    cfg.warmup = 1;
    const auto r = run_bench(cfg);
    CHECK(r.method == Method::todo);
    CHECK(r.height == 16);
    CHECK(r.dim == 32);
    CHECK(r.ratio == 0.75);
    CHECK(r.repeats == 3);
    CHECK(r.wall_nanos > 0);
    CHECK(r.throughput > 0.0);
    // Four times fewer keys cannot buy more than the key-side work it removes.
    CHECK(r.speedup_vs_dense < 1.25 / (1.0 - 0.75));

    cfg.ratio = 1.0;
    CHECK_THROWS_AS(run_bench(cfg), RangeError);
    cfg.ratio = 0.5;
    cfg.repeats = 0;
    CHECK_THROWS_AS(run_bench(cfg), RangeError);
    cfg.repeats = 1;
    cfg.dim = 33;
    CHECK_THROWS_AS(run_bench(cfg), Error);
}

TEST_CASE("dense against itself is about one")
{
    BenchConfig cfg;
    cfg.method = Method::dense;
    cfg.height = cfg.width = 24;
    cfg.dim = 64;
    cfg.repeats = 9;
    cfg.warmup = 2;
    const Workload w = make_workload(24, 24, 64, 0);
    const double a = static_cast<double>(time_method(cfg, w));
    const double b = static_cast<double>(time_method(cfg, w));
    CHECK(a / b >= 0.5);
    CHECK(a / b <= 2.0);
}

TEST_CASE("monotone speedup check")
{
    auto rec = [](std::size_t side, double ratio, double speedup) {
        BenchRecord r;
        r.method = Method::todo;
        r.height = r.width = side;
        r.ratio = ratio;
        r.speedup_vs_dense = speedup;
        return r;
    };
    std::vector<BenchRecord> ok = {rec(256, 0.75, 3.0), rec(128, 0.75, 2.0), rec(192, 0.75, 2.5),
                                   rec(128, 0.89, 4.0), rec(256, 0.89, 5.0)};
    CHECK(todo_speedup_monotone(ok));
    ok.push_back(rec(192, 0.89, 3.0));
    CHECK_FALSE(todo_speedup_monotone(ok));
    BenchRecord tome = rec(512, 0.75, 0.1);
    tome.method = Method::tome;
    CHECK(todo_speedup_monotone({rec(128, 0.75, 2.0), tome}));
    CHECK(todo_speedup_monotone({}));
}
