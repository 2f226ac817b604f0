#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "todo/attention.hpp"
#include "todo/grid.hpp"

namespace todo {

enum class Method { dense, todo, tome };

std::string_view to_string(Method m) noexcept;
/// Throws RangeError on unknown names.
Method parse_method(std::string_view name);

// ---------------------------------------------------------------------------
// Attention-map memory

struct MemoryEstimate {
    std::uint64_t batch = 0;
    std::uint64_t heads = 0;
    std::uint64_t n_q = 0;
    std::uint64_t n_kv = 0;
    std::uint64_t bytes_per_element = 0;
    std::uint64_t total_bytes = 0;

    double gigabytes() const noexcept { return static_cast<double>(total_bytes) / 1e9; }
    double gibibytes() const noexcept { return static_cast<double>(total_bytes) / 1073741824.0; }
};

/// Bytes of a materialized batch x heads x n_q x n_kv attention map.
/// Exact; throws OverflowError instead of wrapping.
MemoryEstimate estimate_attention_memory(std::uint64_t batch, std::uint64_t heads, std::uint64_t n_q,
                                         std::uint64_t n_kv, std::uint64_t bytes_per_element);

/// "<bytes> bytes (<GB> GB, <GiB> GiB)" with two decimals.
std::string format_memory(const MemoryEstimate& m);

// ---------------------------------------------------------------------------
// Throughput harness

struct Workload {
    TokenGrid q;
    TokenGrid k;
    TokenGrid v;
};

/// Standard-normal Q, K, V grids drawn in that order from one seeded stream.
Workload make_workload(std::size_t height, std::size_t width, std::size_t dim, std::uint64_t seed);

struct BenchConfig {
    Method method = Method::dense;
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t dim = 320;
    std::size_t heads = 8;
    double ratio = 0.0;
    int repeats = 20;
    int warmup = 3;
    std::uint64_t seed = 0;
    RunOptions run{};
    /// Dense median for the same shape measured earlier in this session.
    /// When absent, non-dense runs measure their own dense baseline.
    std::optional<std::int64_t> dense_wall_nanos;
};

struct BenchRecord {
    Method method = Method::dense;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t dim = 0;
    double ratio = 0.0;
    int repeats = 0;
    std::int64_t wall_nanos = 0;
    /// Query tokens per second at the median wall time.
    double throughput = 0.0;
    double speedup_vs_dense = 1.0;
};

/// Median wall time of `repeats` timed runs after `warmup` untimed ones.
std::int64_t time_method(const BenchConfig& cfg, const Workload& workload);

BenchRecord run_bench(const BenchConfig& cfg);

/// Exact CSV header, no trailing newline.
std::string_view bench_csv_header() noexcept;
std::string to_csv_row(const BenchRecord& r);

struct SuitePoint {
    Method method;
    std::size_t side;
    double ratio;
};

/// Token grid side for a square image: latents are 8x smaller than pixels.
inline constexpr std::size_t latent_side(std::size_t pixels) noexcept { return pixels / 8; }

/// {dense, todo, tome} on 1024, 1536 and 2048 pixel images at ratios 0.75
/// and 0.89; dense is measured once per shape.
std::vector<SuitePoint> paper_preset_plan();

struct SuiteOptions {
    std::size_t dim = 320;
    std::size_t heads = 8;
    int repeats = 20;
    int warmup = 3;
    std::uint64_t seed = 0;
    RunOptions run{};
    /// Called as each record completes.
    std::function<void(const BenchRecord&)> on_record;
};

std::vector<BenchRecord> paper_preset_suite(const SuiteOptions& opts);

/// True when, for every ratio, todo speedup does not decrease as the grid grows.
bool todo_speedup_monotone(const std::vector<BenchRecord>& records);

} // namespace todo
