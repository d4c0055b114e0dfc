#include "netecon/moments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "netecon/rng.hpp"

namespace netecon {

double binom(double n, int k) {
    if (k < 0 || n < k) return 0.0;
    double r = 1.0;
    // multiply before dividing: for integer n every prefix is integral, so the
    // result is exact whenever it fits in a double
    for (int i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

TriadCensus triad_census(const Graph& g) {
    const int n = g.n();
    TriadCensus c;
    double triangles3 = 0;  // 3 * #triangles
    for (auto [i, j] : g.edges()) triangles3 += g.common_neighbors(i, j);
    double t = triangles3 / 3.0;
    double wedges = 0;  // two-star subgraph copies
    for (int i = 0; i < n; ++i) wedges += binom(g.degree(i), 2);
    double m = double(g.edge_count());
    c.triangle = t;
    c.twostar = wedges - 3.0 * t;
    c.oneedge = m * (n - 2) - 2.0 * c.twostar - 3.0 * t;
    c.empty = binom(n, 3) - c.oneedge - c.twostar - c.triangle;
    return c;
}

// ---- histograms of induced tuple masks -------------------------------------

namespace {

inline unsigned bit_at(const std::uint64_t* row, int m) { return (row[m >> 6] >> (m & 63)) & 1u; }

void hist5_rows(const Graph& g, int i, std::vector<long long>& cnt) {
    const int n = g.n();
    const std::uint64_t* ri = g.row(i);
    for (int j = i + 1; j < n; ++j) {
        const std::uint64_t* rj = g.row(j);
        unsigned b01 = bit_at(ri, j);
        for (int k = j + 1; k < n; ++k) {
            const std::uint64_t* rk = g.row(k);
            unsigned base3 = b01 | (bit_at(ri, k) << 1) | (bit_at(rj, k) << 2);
            for (int l = k + 1; l < n; ++l) {
                const std::uint64_t* rl = g.row(l);
                unsigned base6 =
                    base3 | (bit_at(ri, l) << 3) | (bit_at(rj, l) << 4) | (bit_at(rk, l) << 5);
                for (int m = l + 1; m < n; ++m) {
                    unsigned w = unsigned(m) >> 6, b = unsigned(m) & 63;
                    unsigned hi = unsigned((ri[w] >> b) & 1) | (unsigned((rj[w] >> b) & 1) << 1) |
                                  (unsigned((rk[w] >> b) & 1) << 2) |
                                  (unsigned((rl[w] >> b) & 1) << 3);
                    ++cnt[base6 | (hi << 6)];
                }
            }
        }
    }
}

void hist4_rows(const Graph& g, int i, std::vector<long long>& cnt) {
    const int n = g.n();
    const std::uint64_t* ri = g.row(i);
    for (int j = i + 1; j < n; ++j) {
        const std::uint64_t* rj = g.row(j);
        unsigned b01 = bit_at(ri, j);
        for (int k = j + 1; k < n; ++k) {
            const std::uint64_t* rk = g.row(k);
            unsigned base3 = b01 | (bit_at(ri, k) << 1) | (bit_at(rj, k) << 2);
            for (int l = k + 1; l < n; ++l) {
                unsigned w = unsigned(l) >> 6, b = unsigned(l) & 63;
                unsigned hi = unsigned((ri[w] >> b) & 1) | (unsigned((rj[w] >> b) & 1) << 1) |
                              (unsigned((rk[w] >> b) & 1) << 2);
                ++cnt[base3 | (hi << 3)];
            }
        }
    }
}

void hist3_rows(const Graph& g, int i, std::vector<long long>& cnt) {
    const int n = g.n();
    const std::uint64_t* ri = g.row(i);
    for (int j = i + 1; j < n; ++j) {
        const std::uint64_t* rj = g.row(j);
        unsigned b01 = bit_at(ri, j);
        for (int k = j + 1; k < n; ++k)
            ++cnt[b01 | (bit_at(ri, k) << 1) | (bit_at(rj, k) << 2)];
    }
}

}  // namespace

std::vector<long long> subset_histogram(const Graph& g, int p, int threads) {
    const int n = g.n();
    if (p < 3 || p > 5) throw std::invalid_argument("subset_histogram: p must be 3, 4, or 5");
    double sets = binom(n, p);
    double budget = p == 3 ? 2e9 : (p == 4 ? 6e8 : 1e9);
    if (sets > budget)
        throw std::runtime_error("exact enumeration too large at this n; use subsampling");
    std::vector<long long> cnt(std::size_t(1) << order_pairs(p), 0);
    int nt = std::max(1, std::min(threads, n));
    if (nt == 1) {
        for (int i = 0; i < n; ++i)
            p == 5 ? hist5_rows(g, i, cnt) : p == 4 ? hist4_rows(g, i, cnt) : hist3_rows(g, i, cnt);
        return cnt;
    }
    std::vector<std::vector<long long>> local(nt, std::vector<long long>(cnt.size(), 0));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) break;
                p == 5   ? hist5_rows(g, i, local[t])
                : p == 4 ? hist4_rows(g, i, local[t])
                         : hist3_rows(g, i, local[t]);
            }
        });
    for (auto& th : pool) th.join();
    for (auto& l : local)
        for (std::size_t m = 0; m < cnt.size(); ++m) cnt[m] += l[m];
    return cnt;
}

// ---- pattern counting -------------------------------------------------------

namespace {

std::vector<Mask> labeled_copies(const Graphlet& g) {
    int perm[7];
    std::iota(perm, perm + g.p, 0);
    std::vector<Mask> out{g.mask};
    while (std::next_permutation(perm, perm + g.p)) out.push_back(permute_mask(g.p, g.mask, perm));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MomentEstimate estimate_from_hist(const Graph& g, const Graphlet& pat,
                                  const std::vector<long long>& cnt) {
    const auto& dict = GraphletDict::instance();
    MomentEstimate e;
    e.name = dict.name(pat);
    e.order = pat.p;
    e.iso = pat.iso();
    Mask canon = pat.canon();
    auto copies = labeled_copies(pat);
    double induced = 0, emb = 0;
    for (Mask m = 0; m < Mask(cnt.size()); ++m) {
        if (!cnt[m]) continue;
        if (canonical_mask(pat.p, m) == canon) induced += double(cnt[m]);
        int sub = 0;
        for (Mask c : copies) sub += (c & ~m) == 0;
        emb += double(cnt[m]) * sub;
    }
    double denom = binom(g.n(), pat.p) * e.iso;
    e.induced_count = induced;
    e.subgraph_count = emb;
    e.p_hat = induced / denom;
    e.q_hat = emb / denom;
    return e;
}

}  // namespace

std::vector<MomentEstimate> count_patterns(const Graph& g, const std::vector<Graphlet>& pats,
                                           int threads) {
    const auto& dict = GraphletDict::instance();
    std::vector<MomentEstimate> out(pats.size());
    std::vector<long long> hist4, hist5;
    TriadCensus cen;
    bool have_cen = false;
    for (std::size_t idx = 0; idx < pats.size(); ++idx) {
        const Graphlet& pat = pats[idx];
        if (pat.p < 2 || pat.p > 5) throw std::invalid_argument("pattern order must be 2..5");
        MomentEstimate e;
        e.name = dict.name(pat);
        e.order = pat.p;
        e.iso = pat.iso();
        if (pat.p == 2) {
            double m = double(g.edge_count()), c2 = binom(g.n(), 2);
            bool is_edge = pat.mask != 0;
            e.induced_count = is_edge ? m : c2 - m;
            e.subgraph_count = is_edge ? m : c2;
            e.p_hat = e.induced_count / c2;
            e.q_hat = e.subgraph_count / c2;
            out[idx] = e;
            continue;
        }
        if (pat.p == 3) {
            if (!have_cen) cen = triad_census(g), have_cen = true;
            double c3 = binom(g.n(), 3);
            int ec = pat.edge_count();  // order-3 classes are determined by edge count
            double counts[4] = {cen.empty, cen.oneedge, cen.twostar, cen.triangle};
            // subgraph embeddings of pat inside each class representative
            static const Mask reps[4] = {0u, 1u, 3u, 7u};
            auto copies = labeled_copies(pat);
            double emb = 0;
            for (int c = 0; c < 4; ++c) {
                int sub = 0;
                for (Mask cp : copies) sub += (cp & ~reps[c]) == 0;
                emb += counts[c] * sub;
            }
            e.induced_count = counts[ec];
            e.subgraph_count = emb;
            e.p_hat = counts[ec] / (c3 * e.iso);
            e.q_hat = emb / (c3 * e.iso);
            out[idx] = e;
            continue;
        }
        if (pat.p == 4) {
            if (hist4.empty()) hist4 = subset_histogram(g, 4, threads);
            out[idx] = estimate_from_hist(g, pat, hist4);
            continue;
        }
        if (hist5.empty()) hist5 = subset_histogram(g, 5, threads);
        out[idx] = estimate_from_hist(g, pat, hist5);
    }
    return out;
}

MomentEstimate count_pattern(const Graph& g, const Graphlet& pat, int threads) {
    return count_patterns(g, {pat}, threads)[0];
}

// ---- stitching --------------------------------------------------------------

int StitchMultiset::total_nu() const {
    int t = 0;
    for (auto& e : entries) t += e.nu;
    return t;
}

StitchMultiset stitching_multiset(int q, const Graphlet& r, const Graphlet& s) {
    if (r.p != s.p) throw std::invalid_argument("stitching: patterns must have equal order");
    const int p = r.p;
    if (p < 2 || p > 4) throw std::invalid_argument("stitching: order must be 2..4");
    if (q < 1 || q > p) throw std::invalid_argument("stitching: q must be in 1..p");
    StitchMultiset ms;
    ms.p = p;
    ms.q = q;
    ms.v = 2 * p - q;
    ms.r = r;
    ms.s = s;
    const int v = ms.v, off = p - q;

    for (int b = 1; b < p; ++b)
        for (int a = 0; a < b; ++a) {
            ms.constrained |= Mask(1) << pair_index(a, b);
            ms.constrained |= Mask(1) << pair_index(a + off, b + off);
        }
    ms.free = (Mask(1) << order_pairs(v)) - 1u;
    ms.free &= ~ms.constrained;

    auto shift = [&](Mask m) {
        Mask out = 0;
        for (int b = 1; b < p; ++b)
            for (int a = 0; a < b; ++a)
                if ((m >> pair_index(a, b)) & 1u) out |= Mask(1) << pair_index(a + off, b + off);
        return out;
    };

    auto copiesR = labeled_copies(r);
    auto copiesS = labeled_copies(s);

    struct Acc {
        int nu = 0;
        Mask repr = 0;
    };
    std::map<std::pair<Mask, Mask>, Acc> groups;
    int perm[7];
    for (Mask mr : copiesR)
        for (Mask msk : copiesS) {
            bool ok = true;
            for (int b = off + 1; b < p && ok; ++b)
                for (int a = off; a < b && ok; ++a) {
                    unsigned br = (mr >> pair_index(a, b)) & 1u;
                    unsigned bs = (msk >> pair_index(a - off, b - off)) & 1u;
                    ok = br == bs;
                }
            if (!ok) continue;
            Mask uni = mr | shift(msk);
            std::iota(perm, perm + v, 0);
            std::pair<Mask, Mask> best{permute_mask(v, ms.free, perm), permute_mask(v, uni, perm)};
            while (std::next_permutation(perm, perm + v)) {
                std::pair<Mask, Mask> k{permute_mask(v, ms.free, perm), permute_mask(v, uni, perm)};
                if (k < best) best = k;
            }
            auto& acc = groups[best];
            if (acc.nu == 0) acc.repr = uni;
            ++acc.nu;
        }

    const auto& dict = GraphletDict::instance();
    for (auto& [key, acc] : groups) {
        StitchEntry e;
        e.union_g = Graphlet(v, acc.repr);
        e.name = dict.name(e.union_g);
        e.nu = acc.nu;
        ms.entries.push_back(e);
    }
    std::sort(ms.entries.begin(), ms.entries.end(), [](const StitchEntry& a, const StitchEntry& b) {
        if (a.union_g.edge_count() != b.union_g.edge_count())
            return a.union_g.edge_count() < b.union_g.edge_count();
        return a.union_g.canon() < b.union_g.canon();
    });
    return ms;
}

namespace {

// membership bitsets over patterns on p <= 4 slots (<= 6 pair bits)
std::uint64_t copies_bitset(const Graphlet& g) {
    std::uint64_t bits = 0;
    for (Mask m : labeled_copies(g)) bits |= 1ull << m;
    return bits;
}

// per-mask count, over all v! orderings of a v-set, of
// 1(first p positions induce R) * 1(last p positions induce S)
std::vector<std::uint16_t> ordering_table(int v, int p, std::uint64_t copiesR,
                                          std::uint64_t copiesS) {
    std::vector<int> perm(v);
    std::iota(perm.begin(), perm.end(), 0);
    struct PairMap {
        std::array<std::uint8_t, 6> r_src{}, s_src{};
    };
    std::vector<PairMap> maps;
    do {
        PairMap pm;
        int b = 0;
        for (int j = 1; j < p; ++j)
            for (int i = 0; i < j; ++i, ++b) {
                pm.r_src[b] = std::uint8_t(pair_index(perm[i], perm[j]));
                pm.s_src[b] = std::uint8_t(pair_index(perm[v - p + i], perm[v - p + j]));
            }
        maps.push_back(pm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const int nb = order_pairs(p);
    std::vector<std::uint16_t> table(std::size_t(1) << order_pairs(v), 0);
    for (Mask m = 0; m < Mask(table.size()); ++m) {
        int c = 0;
        for (const auto& pm : maps) {
            Mask pr = 0;
            for (int b = 0; b < nb; ++b) pr |= ((m >> pm.r_src[b]) & 1u) << b;
            if (!((copiesR >> pr) & 1ull)) continue;
            Mask ps = 0;
            for (int b = 0; b < nb; ++b) ps |= ((m >> pm.s_src[b]) & 1u) << b;
            c += (copiesS >> ps) & 1ull;
        }
        table[m] = std::uint16_t(c);
    }
    return table;
}

double factorial(int v) {
    double f = 1;
    for (int i = 2; i <= v; ++i) f *= i;
    return f;
}

}  // namespace

XiEstimate stitching_xi(const Graph& g, int q, const Graphlet& r, const Graphlet& s,
                        const XiOptions& opt) {
    StitchMultiset ms = stitching_multiset(q, r, s);
    const int v = ms.v, p = ms.p, n = g.n();
    if (n < v) throw std::invalid_argument("graph smaller than stitched tuple");
    std::uint64_t cR = copies_bitset(r), cS = copies_bitset(s);
    double isos = double(r.iso()) * s.iso();
    XiEstimate out;

    if (opt.mode == XiOptions::Mode::exact) {
        if (v > 5)
            throw std::runtime_error("exact stitching requires union order <= 5; use subsample");
        auto cnt = subset_histogram(g, v, opt.threads);
        auto table = ordering_table(v, p, cR, cS);
        double tally = 0;
        for (std::size_t m = 0; m < cnt.size(); ++m)
            if (cnt[m]) tally += double(cnt[m]) * table[m];
        out.xi = tally / (binom(n, v) * factorial(v) * isos);
        out.se = 0;
        out.sets = binom(n, v);
        out.mode = "exact";
    } else {
        Rng rng(opt.seed, "stitch-sample");
        long long m = std::max<long long>(1, opt.samples);
        double sum = 0, sumsq = 0;
        if (v <= 6) {
            auto table = ordering_table(v, p, cR, cS);
            double fact = factorial(v);
            std::vector<int> pick(v);
            for (long long it = 0; it < m; ++it) {
                for (int a = 0; a < v; ++a) {
                    bool fresh;
                    do {
                        pick[a] = int(rng.below(n));
                        fresh = true;
                        for (int b = 0; b < a; ++b) fresh &= pick[b] != pick[a];
                    } while (!fresh);
                }
                double val = table[g.tuple_mask(pick)] / fact;
                sum += val;
                sumsq += val * val;
            }
        } else {
            std::vector<int> pick(v);
            const int nb = order_pairs(p);
            for (long long it = 0; it < m; ++it) {
                for (int a = 0; a < v; ++a) {
                    bool fresh;
                    do {
                        pick[a] = int(rng.below(n));
                        fresh = true;
                        for (int b = 0; b < a; ++b) fresh &= pick[b] != pick[a];
                    } while (!fresh);
                }
                Mask pr = 0, ps = 0;
                int b = 0;
                for (int j = 1; j < p; ++j)
                    for (int i = 0; i < j; ++i, ++b) {
                        if (g.has_edge(pick[i], pick[j])) pr |= Mask(1) << b;
                        if (g.has_edge(pick[v - p + i], pick[v - p + j])) ps |= Mask(1) << b;
                    }
                (void)nb;
                double val = ((cR >> pr) & 1ull) && ((cS >> ps) & 1ull) ? 1.0 : 0.0;
                sum += val;
                sumsq += val * val;
            }
        }
        double mean = sum / m;
        double var = std::max(0.0, sumsq / m - mean * mean);
        out.xi = mean / isos;
        out.se = std::sqrt(var / m) / isos;
        out.sets = double(m);
        out.mode = "subsample";
    }

    // product-moment term for Sigma_q = Xi_q - P(R) P(S)
    double pr_hat, ps_hat;
    if (opt.mode == XiOptions::Mode::exact || p <= 3) {
        pr_hat = count_pattern(g, r, opt.threads).p_hat;
        ps_hat = r.same_class(s) ? pr_hat : count_pattern(g, s, opt.threads).p_hat;
    } else {
        // Monte Carlo with matched budget
        Rng rng(opt.seed, "stitch-p");
        std::uint64_t bits[2] = {cR, cS};
        double est[2] = {0, 0};
        for (int which = 0; which < 2; ++which) {
            if (which == 1 && r.same_class(s)) {
                est[1] = est[0];
                break;
            }
            long long hit = 0;
            std::vector<int> pick(p);
            for (long long it = 0; it < opt.samples; ++it) {
                for (int a = 0; a < p; ++a) {
                    bool fresh;
                    do {
                        pick[a] = int(rng.below(n));
                        fresh = true;
                        for (int b = 0; b < a; ++b) fresh &= pick[b] != pick[a];
                    } while (!fresh);
                }
                hit += (bits[which] >> g.tuple_mask(pick)) & 1ull;
            }
            est[which] = double(hit) / double(opt.samples);
        }
        pr_hat = est[0];
        ps_hat = est[1];
    }
    out.sigma = out.xi - pr_hat * ps_hat;
    return out;
}

// ---- covariance of triad moments ---------------------------------------------

namespace {

struct PairTables {
    // counts over the 30 (pentad) / 12 (tetrad) ordered triad pairs sharing
    // 1 / 2 vertices, by ordered pair of triad classes (class = edge count)
    std::array<std::array<std::uint8_t, 16>, 1024> t5{};
    std::array<std::array<std::uint8_t, 16>, 64> t4{};
};

const PairTables& pair_tables() {
    static PairTables tb = [] {
        PairTables t;
        // pentads: shared vertex s, T1 = {s,a,b}, T2 = {s,c,d}
        for (Mask m = 0; m < 1024; ++m) {
            auto bit = [&](int x, int y) { return int((m >> pair_index(x, y)) & 1u); };
            auto cls = [&](int x, int y, int z) { return bit(x, y) + bit(x, z) + bit(y, z); };
            for (int s = 0; s < 5; ++s) {
                int rest[4], ri = 0;
                for (int x = 0; x < 5; ++x)
                    if (x != s) rest[ri++] = x;
                for (int a = 0; a < 4; ++a)
                    for (int b = a + 1; b < 4; ++b) {
                        int c = -1, d = -1;
                        for (int x = 0; x < 4; ++x)
                            if (x != a && x != b) (c < 0 ? c : d) = x;
                        int c1 = cls(s, rest[a], rest[b]);
                        int c2 = cls(s, rest[c], rest[d]);
                        ++t.t5[m][c1 * 4 + c2];
                    }
            }
        }
        // tetrads: shared pair {a,b}, T1 = {a,b,c}, T2 = {a,b,d}, both orders
        for (Mask m = 0; m < 64; ++m) {
            auto bit = [&](int x, int y) { return int((m >> pair_index(x, y)) & 1u); };
            auto cls = [&](int x, int y, int z) { return bit(x, y) + bit(x, z) + bit(y, z); };
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b) {
                    int c = -1, d = -1;
                    for (int x = 0; x < 4; ++x)
                        if (x != a && x != b) (c < 0 ? c : d) = x;
                    int c1 = cls(a, b, c), c2 = cls(a, b, d);
                    ++t.t4[m][c1 * 4 + c2];
                    ++t.t4[m][c2 * 4 + c1];
                }
        }
        return t;
    }();
    return tb;
}

}  // namespace

TriadMomentCov triad_moment_cov(const Graph& g, const CovOptions& opt) {
    const int n = g.n();
    if (n < 5) throw std::invalid_argument("need at least 5 vertices for moment covariance");
    const auto& tb = pair_tables();
    TriadMomentCov out;
    out.mode = opt.mode == CovOptions::Mode::exact ? "exact" : "subsample";

    TriadCensus cen = triad_census(g);
    double c3 = binom(n, 3);
    double counts[4] = {cen.empty, cen.oneedge, cen.twostar, cen.triangle};
    for (int a = 0; a < 4; ++a) out.p_hat[a] = counts[a] / (c3 * out.iso[a]);

    Eigen::Matrix4d tally1 = Eigen::Matrix4d::Zero(), tally2 = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d sq1 = Eigen::Matrix4d::Zero();
    double denom1, denom2;

    if (opt.mode == CovOptions::Mode::exact) {
        auto h5 = subset_histogram(g, 5, opt.threads);
        for (Mask m = 0; m < 1024; ++m) {
            if (!h5[m]) continue;
            double w = double(h5[m]);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) tally1(a, b) += w * tb.t5[m][a * 4 + b];
        }
        auto h4 = subset_histogram(g, 4, opt.threads);
        for (Mask m = 0; m < 64; ++m) {
            if (!h4[m]) continue;
            double w = double(h4[m]);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) tally2(a, b) += w * tb.t4[m][a * 4 + b];
        }
        out.pentads = binom(n, 5);
        out.tetrads = binom(n, 4);
        denom1 = out.pentads * 30.0;
        denom2 = out.tetrads * 12.0;
    } else {
        Rng rng(opt.seed, "momentcov-pentads");
        long long m = std::max<long long>(1, opt.samples);
        int pick[5];
        for (long long it = 0; it < m; ++it) {
            for (int a = 0; a < 5; ++a) {
                bool fresh;
                do {
                    pick[a] = int(rng.below(n));
                    fresh = true;
                    for (int b = 0; b < a; ++b) fresh &= pick[b] != pick[a];
                } while (!fresh);
            }
            std::array<int, 5> t{pick[0], pick[1], pick[2], pick[3], pick[4]};
            Mask msk = g.tuple_mask(t);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    double x = tb.t5[msk][a * 4 + b];
                    tally1(a, b) += x;
                    sq1(a, b) += x * x;
                }
        }
        Rng rng4(opt.seed, "momentcov-tetrads");
        int pk[4];
        for (long long it = 0; it < m; ++it) {
            for (int a = 0; a < 4; ++a) {
                bool fresh;
                do {
                    pk[a] = int(rng4.below(n));
                    fresh = true;
                    for (int b = 0; b < a; ++b) fresh &= pk[b] != pk[a];
                } while (!fresh);
            }
            std::array<int, 4> t{pk[0], pk[1], pk[2], pk[3]};
            Mask msk = g.tuple_mask(t);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) tally2(a, b) += tb.t4[msk][a * 4 + b];
        }
        out.pentads = double(m);
        out.tetrads = double(m);
        denom1 = double(m) * 30.0;
        denom2 = double(m) * 12.0;
    }

    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double ii = out.iso[a] * out.iso[b];
            out.xi1(a, b) = tally1(a, b) / (denom1 * ii);
            out.xi2(a, b) = tally2(a, b) / (denom2 * ii);
            out.xi3(a, b) = (a == b) ? counts[a] / (c3 * ii) : 0.0;
        }

    if (opt.mode == CovOptions::Mode::subsample) {
        double m = out.pentads;
        double worst = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double mean = tally1(a, b) / m;
                double var = std::max(0.0, sq1(a, b) / m - mean * mean);
                worst = std::max(worst, std::sqrt(var / m) / (30.0 * out.iso[a] * out.iso[b]));
            }
        out.mc_se_xi1_max = worst;
    }

    Eigen::Vector4d pv(out.p_hat[0], out.p_hat[1], out.p_hat[2], out.p_hat[3]);
    Eigen::Matrix4d pp = pv * pv.transpose();
    out.sigma1 = out.xi1 - pp;
    out.sigma2 = out.xi2 - pp;
    out.sigma3 = out.xi3 - pp;

    double a1 = 3.0 * binom(n - 3, 2) / c3;
    double a2 = 3.0 * double(n - 3) / c3;
    double a3 = 1.0 / c3;
    double corr = 1.0 - binom(n - 3, 3) / c3;
    out.v_leading = a1 * out.xi1 - corr * pp;
    out.v_all = a1 * out.xi1 + a2 * out.xi2 + a3 * out.xi3 - corr * pp;
    for (int a = 0; a < 4; ++a) {
        out.se_leading[a] = std::sqrt(out.v_leading(a, a));
        out.se_all[a] = std::sqrt(out.v_all(a, a));
    }

    double p2 = out.p_hat[2], p3 = out.p_hat[3];
    out.ti = p3 / (p2 + p3);
    out.ti_qratio = (cen.triangle / c3) / ((cen.twostar + 3.0 * cen.triangle) / (3.0 * c3));
    double den = (p2 + p3) * (p2 + p3);
    double g2 = -p3 / den, g3 = p2 / den;
    auto ti_var = [&](const Eigen::Matrix4d& v) {
        return g2 * g2 * v(2, 2) + 2 * g2 * g3 * v(2, 3) + g3 * g3 * v(3, 3);
    };
    out.se_ti_leading = std::sqrt(ti_var(out.v_leading));
    out.se_ti_all = std::sqrt(ti_var(out.v_all));
    return out;
}

Eigen::Matrix2d er_xi(int q, double rho) {
    Eigen::Matrix2d m;
    double r = rho, o = 1 - rho;
    switch (q) {
        case 1:
            m << r * r * r * r * o * o, r * r * r * r * r * o,
                 r * r * r * r * r * o, r * r * r * r * r * r;
            break;
        case 2:
            m << (4.0 / 9) * r * r * r * o * o + (1.0 / 9) * r * r * r * r * o,
                 (2.0 / 3) * r * r * r * r * o,
                 (2.0 / 3) * r * r * r * r * o, r * r * r * r * r;
            break;
        case 3:
            m << (1.0 / 3) * r * r * o, 0, 0, r * r * r;
            break;
        default:
            throw std::invalid_argument("q must be 1..3");
    }
    return m;
}

double er_p(int cls, double rho) {
    if (cls == 2) return rho * rho * (1 - rho);
    if (cls == 3) return rho * rho * rho;
    if (cls == 1) return rho * (1 - rho) * (1 - rho);
    if (cls == 0) return (1 - rho) * (1 - rho) * (1 - rho);
    throw std::invalid_argument("triad class must be 0..3");
}

// ---- degree moments -----------------------------------------------------------

double surjections(int m, int k) {
    double s = 0;
    for (int j = 0; j <= k; ++j) {
        double term = binom(k, j) * std::pow(double(j), m);
        s += ((k - j) % 2 == 0) ? term : -term;
    }
    return s;
}

double star_q(const Graph& g, int k) {
    double s = 0;
    for (int i = 0; i < g.n(); ++i) s += binom(g.degree(i), k);
    return s / (binom(g.n(), k + 1) * (k + 1));
}

double degree_moment(const Graph& g, int m) {
    double s = 0;
    for (int i = 0; i < g.n(); ++i) s += std::pow(double(g.degree(i)), m);
    return s / g.n();
}

double degree_moment_stars(const Graph& g, int m) {
    double s = 0;
    for (int k = 1; k <= m; ++k)
        s += binom(g.n() - 1, k) * surjections(m, k) * star_q(g, k);
    return s;
}

double degree_variance_stars(const Graph& g) {
    double n = g.n();
    double p = g.density();
    double q2 = star_q(g, 2);
    return (n - 1) * (n - 2) * (q2 - p * p) + (n - 1) * p * (1 - p);
}

}  // namespace netecon
