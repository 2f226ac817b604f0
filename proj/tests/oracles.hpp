#pragma once

// Independent reference implementations used as test oracles. Everything here
// is deliberately naive: plain loops, double precision, no shared code with
// the library beyond the TokenGrid container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "todo/grid.hpp"

namespace oracle {

inline todo::TokenGrid random_grid(std::size_t h, std::size_t w, std::size_t dim, std::uint64_t seed,
                                   float scale = 1.0f)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    std::vector<float> data(h * w * dim);
    for (auto& x : data)
        x = nd(rng) * scale;
    return todo::TokenGrid(h, w, dim, std::move(data));
}

// softmax(scale * q k^T) v per head, two nested loops, double throughout.
inline std::vector<double> attention(const todo::TokenGrid& q, const todo::TokenGrid& k,
                                     const todo::TokenGrid& v, std::size_t heads, std::size_t head_dim,
                                     double scale)
{
    const std::size_t nq = q.tokens();
    const std::size_t nk = k.tokens();
    const std::size_t dim = heads * head_dim;
    std::vector<double> out(nq * dim, 0.0);
    std::vector<double> logits(nk);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * head_dim;
        for (std::size_t i = 0; i < nq; ++i) {
            double mx = -INFINITY;
            for (std::size_t j = 0; j < nk; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < head_dim; ++c)
                    s += static_cast<double>(q.token(i)[off + c]) * k.token(j)[off + c];
                logits[j] = s * scale;
                mx = std::max(mx, logits[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                logits[j] = std::exp(logits[j] - mx);
                sum += logits[j];
            }
            for (std::size_t j = 0; j < nk; ++j)
                for (std::size_t c = 0; c < head_dim; ++c)
                    out[i * dim + off + c] += logits[j] / sum * v.token(j)[off + c];
        }
    }
    return out;
}

inline double cosine(const float* a, const float* b, std::size_t dim)
{
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        dot += static_cast<double>(a[c]) * b[c];
        na += static_cast<double>(a[c]) * a[c];
        nb += static_cast<double>(b[c]) * b[c];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Full n x n cosine matrix.
inline std::vector<double> cosine_matrix(const todo::TokenGrid& g)
{
    const std::size_t n = g.tokens();
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] = cosine(g.token(i).data(), g.token(j).data(), g.dim());
    return m;
}

struct Stats {
    double min_sim, mean_sim, max_sim, top3_fraction;
};

// Materializes the whole similarity matrix, then reads windows and rows out of it.
inline Stats neighborhood(const todo::TokenGrid& g, std::size_t k)
{
    const std::size_t h = g.height(), w = g.width(), n = g.tokens();
    const auto m = cosine_matrix(g);
    const long rad = static_cast<long>(k / 2);
    Stats s{0, 0, 0, 0};
    std::size_t contained = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long y = static_cast<long>(i / w), x = static_cast<long>(i % w);
        double lo = 2, hi = -2, sum = 0;
        std::size_t cnt = 0;
        for (long yy = y - rad; yy <= y + rad; ++yy)
            for (long xx = x - rad; xx <= x + rad; ++xx) {
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
                    continue;
                const std::size_t j = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
                if (j == i)
                    continue;
                lo = std::min(lo, m[i * n + j]);
                hi = std::max(hi, m[i * n + j]);
                sum += m[i * n + j];
                ++cnt;
            }
        s.min_sim += lo;
        s.max_sim += hi;
        s.mean_sim += sum / static_cast<double>(cnt);

        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                others.push_back(j);
        // Ranked on float-rounded values, the precision the library reports.
        auto key = [&](std::size_t j) { return static_cast<float>(m[i * n + j]); };
        std::stable_sort(others.begin(), others.end(),
                         [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
        bool all = true;
        for (std::size_t t = 0; t < 3 && t < others.size(); ++t) {
            const long yy = static_cast<long>(others[t] / w), xx = static_cast<long>(others[t] % w);
            all = all && std::abs(yy - y) <= 1 && std::abs(xx - x) <= 1;
        }
        contained += all ? 1 : 0;
    }
    const double dn = static_cast<double>(n);
    return {s.min_sim / dn, s.mean_sim / dn, s.max_sim / dn, static_cast<double>(contained) / dn};
}

struct Match {
    std::size_t src, dst;
    float sim;
};

// Exhaustive bipartite scoring: every src against every dst, then a full sort.
// Similarities are computed in double and rounded to float once, so ties are
// judged on the same float values the library reports.
inline std::vector<Match> tome_matches(const todo::TokenGrid& g, const std::vector<std::size_t>& src,
                                       const std::vector<std::size_t>& dst, std::size_t r)
{
    std::vector<Match> best;
    for (std::size_t s : src) {
        Match m{s, dst.front(), -2.0f};
        for (std::size_t d : dst) {
            const auto sim = static_cast<float>(cosine(g.token(s).data(), g.token(d).data(), g.dim()));
            if (sim > m.sim)
                m = {s, d, sim};
        }
        best.push_back(m);
    }
    std::sort(best.begin(), best.end(), [](const Match& a, const Match& b) {
        return a.sim != b.sim ? a.sim > b.sim : a.src < b.src;
    });
    best.resize(r);
    return best;
}

// Groups every dst with the src tokens merged into it and averages in double.
inline std::vector<std::vector<double>> group_means(const todo::TokenGrid& g,
                                                    const std::vector<std::size_t>& dst,
                                                    const std::vector<Match>& matches)
{
    std::vector<std::vector<double>> out;
    for (std::size_t d : dst) {
        std::vector<double> acc(g.dim(), 0.0);
        std::size_t members = 0;
        auto add = [&](std::size_t t) {
            for (std::size_t c = 0; c < g.dim(); ++c)
                acc[c] += g.token(t)[c];
            ++members;
        };
        add(d);
        for (const auto& m : matches)
            if (m.dst == d)
                add(m.src);
        for (auto& x : acc)
            x /= static_cast<double>(members);
        out.push_back(std::move(acc));
    }
    return out;
}

inline double mse(const std::vector<float>& a, const std::vector<float>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

// Valid-region 4-neighbour Laplacian, mean absolute response.
inline double hpf(const std::vector<float>& p, std::size_t h, std::size_t w)
{
    double s = 0.0;
    for (std::size_t y = 1; y + 1 < h; ++y)
        for (std::size_t x = 1; x + 1 < w; ++x) {
            const double r = 4.0 * p[y * w + x] - p[(y - 1) * w + x] - p[(y + 1) * w + x] -
                             p[y * w + x - 1] - p[y * w + x + 1];
            s += std::abs(r);
        }
    return s / static_cast<double>((h - 2) * (w - 2));
}

} // namespace oracle
