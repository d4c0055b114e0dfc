#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>

#include "doctest.h"
#include "netecon/graphon.hpp"
#include "netecon/moments.hpp"
#include "netecon/rng.hpp"
#include "oracles.hpp"

using namespace netecon;

static Graphlet pat(const char* name) {
    Graphlet g;
    REQUIRE(GraphletDict::instance().lookup(name, &g));
    return g;
}

TEST_CASE("triad census matches direct enumeration") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto s = sample_graphon(GraphonSpec::beta_normal(-0.6, 0.9), 28, seed);
        TriadCensus c = triad_census(s.g);
        double want[4] = {0, 0, 0, 0};
        oracle::for_subsets(28, 3, [&](const std::vector<int>& t) {
            int e = s.g.has_edge(t[0], t[1]) + s.g.has_edge(t[0], t[2]) + s.g.has_edge(t[1], t[2]);
            want[e] += 1;
        });
        CHECK(c.empty == want[0]);
        CHECK(c.oneedge == want[1]);
        CHECK(c.twostar == want[2]);
        CHECK(c.triangle == want[3]);
        CHECK(c.total() == binom(28, 3));
    }
}

TEST_CASE("subset histograms match per-mask enumeration") {
    auto s = sample_graphon(GraphonSpec::er(0.4), 11, 4);
    for (int p : {3, 4, 5}) {
        auto h = subset_histogram(s.g, p);
        std::vector<long long> want(h.size(), 0);
        oracle::for_subsets(11, p, [&](const std::vector<int>& t) {
            ++want[oracle::tuple_mask_naive(s.g, t)];
        });
        CHECK(h == want);
        long long total = 0;
        for (auto c : h) total += c;
        CHECK(double(total) == binom(11, p));
    }
}

TEST_CASE("threaded histogram equals single-threaded") {
    auto s = sample_graphon(GraphonSpec::er(0.3), 40, 8);
    CHECK(subset_histogram(s.g, 4, 1) == subset_histogram(s.g, 4, 3));
    CHECK(subset_histogram(s.g, 5, 1) == subset_histogram(s.g, 5, 4));
}

TEST_CASE("pattern counts match brute force") {
    auto s = sample_graphon(GraphonSpec::er(0.35), 12, 6);
    const char* names[] = {"edge",        "empty2",   "oneedge",     "twostar",
                           "triangle",    "empty3",   "fourpath",    "chordalcycle",
                           "fourclique",  "matching", "twostar_plus"};
    for (const char* nm : names) {
        Graphlet g = pat(nm);
        MomentEstimate e = count_pattern(s.g, g);
        double induced = oracle::count_induced_naive(s.g, g);
        double copies = oracle::count_copies_naive(s.g, g);
        CAPTURE(nm);
        CHECK(e.induced_count == doctest::Approx(induced).epsilon(1e-12));
        CHECK(e.subgraph_count == doctest::Approx(copies).epsilon(1e-12));
        CHECK(e.p_hat == doctest::Approx(induced / (binom(12, g.p) * oracle::iso_naive(g))));
        CHECK(e.iso == oracle::iso_naive(g));
    }
    // order 5 on a smaller graph
    auto s5 = sample_graphon(GraphonSpec::er(0.45), 10, 9);
    for (const char* nm : {"fivepath", "twotriangle", "fourstar", "g5_20"}) {
        Graphlet g = pat(nm);
        MomentEstimate e = count_pattern(s5.g, g);
        CAPTURE(nm);
        CHECK(e.induced_count == doctest::Approx(oracle::count_induced_naive(s5.g, g)));
        CHECK(e.subgraph_count == doctest::Approx(oracle::count_copies_naive(s5.g, g)));
    }
}

TEST_CASE("induced frequencies weighted by labeled copies sum to one") {
    auto s = sample_graphon(GraphonSpec::beta_normal(-0.8, 0.7), 16, 10);
    const auto& dict = GraphletDict::instance();
    for (int p : {3, 4, 5}) {
        std::vector<Graphlet> all(dict.classes(p).begin(), dict.classes(p).end());
        auto est = count_patterns(s.g, all);
        double total = 0;
        for (auto& e : est) total += e.iso * e.p_hat;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("two-star subgraph frequency splits into induced two-star plus triangle") {
    auto s = sample_graphon(GraphonSpec::er(0.3), 60, 12);
    auto est = count_patterns(s.g, {pat("twostar"), pat("triangle")});
    CHECK(est[0].q_hat == doctest::Approx(est[0].p_hat + est[1].p_hat).epsilon(1e-14));
    CHECK(est[1].q_hat == doctest::Approx(est[1].p_hat).epsilon(1e-14));
}

TEST_CASE("worked example: two-stars in the chordal cycle") {
    Graph g(4);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(2, 3);
    g.add_edge(3, 0);
    g.add_edge(0, 2);
    auto est = count_patterns(g, {pat("twostar")});
    CHECK(est[0].q_hat == doctest::Approx(8.0 / 12.0).epsilon(1e-15));
    CHECK(est[0].p_hat == doctest::Approx(2.0 / 12.0).epsilon(1e-15));
}

static std::map<std::string, int> table_of(const StitchMultiset& ms) {
    std::map<std::string, int> t;
    for (const auto& e : ms.entries) t[e.name] += e.nu;
    return t;
}

TEST_CASE("stitching multisets reproduce the published tables") {
    Graphlet w = pat("twostar"), tri = pat("triangle");
    using T = std::map<std::string, int>;

    CHECK(table_of(stitching_multiset(1, w, w)) ==
          T{{"fourstar", 1}, {"tailedthreestar", 4}, {"fivepath", 4}});
    CHECK(table_of(stitching_multiset(2, w, w)) ==
          T{{"threestar", 2}, {"fourpath", 2}, {"fourcycle", 1}});
    CHECK(table_of(stitching_multiset(3, w, w)) == T{{"twostar", 3}});

    CHECK(table_of(stitching_multiset(1, tri, tri)) == T{{"twotriangle", 1}});
    CHECK(table_of(stitching_multiset(2, tri, tri)) == T{{"chordalcycle", 1}});
    CHECK(table_of(stitching_multiset(3, tri, tri)) == T{{"triangle", 1}});

    CHECK(table_of(stitching_multiset(1, w, tri)) ==
          T{{"twotailedtriangle", 1}, {"rattailedtriangle", 2}});
    CHECK(table_of(stitching_multiset(2, w, tri)) == T{{"tailedtriangle", 2}});
    CHECK(stitching_multiset(3, w, tri).entries.empty());

    // order is immaterial
    CHECK(table_of(stitching_multiset(1, tri, w)) == table_of(stitching_multiset(1, w, tri)));
    CHECK(stitching_multiset(1, w, w).total_nu() == 9);

    // fully overlapped tuples give the diagonal multiset
    Graphlet fp = pat("fourpath");
    CHECK(table_of(stitching_multiset(4, fp, fp)) == T{{"fourpath", 12}});
    CHECK(stitching_multiset(4, fp, pat("fourcycle")).entries.empty());

    CHECK_THROWS(stitching_multiset(1, w, fp));
    CHECK_THROWS(stitching_multiset(0, w, w));
    CHECK_THROWS(stitching_multiset(5, fp, fp));
}

TEST_CASE("stitched moment estimates match brute force exactly") {
    auto s = sample_graphon(GraphonSpec::er(0.5), 8, 14);
    XiOptions exact;
    exact.mode = XiOptions::Mode::exact;
    for (auto [q, a, b] : {std::tuple{1, "twostar", "twostar"}, {1, "twostar", "triangle"},
                           {2, "twostar", "triangle"}, {2, "triangle", "triangle"},
                           {3, "twostar", "twostar"}, {3, "twostar", "triangle"},
                           {1, "oneedge", "twostar"}, {2, "oneedge", "oneedge"}}) {
        Graphlet r = pat(a), ss = pat(b);
        double want = oracle::xi_naive(s.g, q, r, ss);
        XiEstimate e = stitching_xi(s.g, q, r, ss, exact);
        CAPTURE(q);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(e.xi == doctest::Approx(want).epsilon(1e-12));
        CHECK(e.se == 0);
        CHECK(e.mode == "exact");
    }
    // order-4 patterns with q=3 stay within exact reach (union order 5)
    Graphlet fp = pat("fourpath"), cl = pat("threestar");
    double want = oracle::xi_naive(s.g, 3, fp, cl);
    CHECK(stitching_xi(s.g, 3, fp, cl, exact).xi == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("subsampled stitched moments agree with exact within Monte Carlo error") {
    auto s = sample_graphon(GraphonSpec::er(0.35), 40, 15);
    Graphlet w = pat("twostar"), tri = pat("triangle");
    XiOptions exact;
    exact.mode = XiOptions::Mode::exact;
    XiOptions sub;
    sub.mode = XiOptions::Mode::subsample;
    sub.samples = 200000;
    sub.seed = 99;
    for (int q : {1, 2}) {
        XiEstimate ex = stitching_xi(s.g, q, w, tri, exact);
        XiEstimate mc = stitching_xi(s.g, q, w, tri, sub);
        CAPTURE(q);
        CHECK(std::fabs(mc.xi - ex.xi) < 5 * mc.se + 1e-12);
        CHECK(mc.se > 0);
    }
    // union order 6 and 7 paths (order-4 patterns at small overlap)
    Graphlet fp = pat("fourpath");
    XiEstimate mc6 = stitching_xi(s.g, 2, fp, fp, sub);
    double naive6 = oracle::xi_naive(sample_graphon(GraphonSpec::er(0.5), 9, 16).g, 2, fp, fp);
    XiOptions sub9 = sub;
    XiEstimate mc6small =
        stitching_xi(sample_graphon(GraphonSpec::er(0.5), 9, 16).g, 2, fp, fp, sub9);
    CHECK(std::fabs(mc6small.xi - naive6) < 5 * mc6small.se + 1e-10);
    CHECK(mc6.xi >= 0);
    XiEstimate mc7 =
        stitching_xi(sample_graphon(GraphonSpec::er(0.5), 9, 16).g, 1, fp, fp, sub9);
    double naive7 = oracle::xi_naive(sample_graphon(GraphonSpec::er(0.5), 9, 16).g, 1, fp, fp);
    CHECK(std::fabs(mc7.xi - naive7) < 5 * mc7.se + 1e-10);
    CHECK_THROWS(stitching_xi(s.g, 2, fp, fp, exact));
}

TEST_CASE("triad moment covariance: exact shared-vertex moments match brute force") {
    auto s = sample_graphon(GraphonSpec::beta_normal(-0.3, 0.6), 12, 17);
    CovOptions opt;
    TriadMomentCov cov = triad_moment_cov(s.g, opt);
    Graphlet cls[4] = {pat("empty3"), pat("oneedge"), pat("twostar"), pat("triangle")};
    for (int a = 2; a < 4; ++a)
        for (int b = 2; b < 4; ++b) {
            CAPTURE(a);
            CAPTURE(b);
            CHECK(cov.xi1(a, b) == doctest::Approx(oracle::xi_naive(s.g, 1, cls[a], cls[b]))
                                        .epsilon(1e-12));
            CHECK(cov.xi2(a, b) == doctest::Approx(oracle::xi_naive(s.g, 2, cls[a], cls[b]))
                                        .epsilon(1e-12));
            CHECK(cov.xi3(a, b) == doctest::Approx(oracle::xi_naive(s.g, 3, cls[a], cls[b]))
                                        .epsilon(1e-12));
        }
    CHECK(cov.xi1(0, 1) == doctest::Approx(oracle::xi_naive(s.g, 1, cls[0], cls[1])));
    CHECK(cov.xi2(1, 2) == doctest::Approx(oracle::xi_naive(s.g, 2, cls[1], cls[2])));

    // the variance assemblies follow the displayed finite-N formula
    int n = 12;
    double c3 = binom(n, 3);
    double a1 = 3 * binom(n - 3, 2) / c3, a2 = 3.0 * (n - 3) / c3, a3 = 1 / c3;
    double corr = 1 - binom(n - 3, 3) / c3;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double pp = cov.p_hat[a] * cov.p_hat[b];
            CHECK(cov.v_leading(a, b) ==
                  doctest::Approx(a1 * cov.xi1(a, b) - corr * pp).epsilon(1e-12));
            CHECK(cov.v_all(a, b) ==
                  doctest::Approx(a1 * cov.xi1(a, b) + a2 * cov.xi2(a, b) + a3 * cov.xi3(a, b) -
                                  corr * pp)
                      .epsilon(1e-12));
            CHECK(cov.sigma1(a, b) == doctest::Approx(cov.xi1(a, b) - pp));
        }
    CHECK(cov.ti == doctest::Approx(cov.ti_qratio).epsilon(1e-14));
}

TEST_CASE("subsampled covariance tracks the exact one") {
    auto s = sample_graphon(GraphonSpec::er(0.25), 60, 18);
    CovOptions exact;
    TriadMomentCov ce = triad_moment_cov(s.g, exact);
    CovOptions sub;
    sub.mode = CovOptions::Mode::subsample;
    sub.samples = 150000;
    sub.seed = 5;
    TriadMomentCov cs = triad_moment_cov(s.g, sub);
    CHECK(cs.mc_se_xi1_max > 0);
    for (int a = 2; a < 4; ++a)
        for (int b = 2; b < 4; ++b)
            CHECK(std::fabs(cs.xi1(a, b) - ce.xi1(a, b)) < 6 * cs.mc_se_xi1_max + 1e-10);
    CHECK(cs.p_hat == ce.p_hat);  // census part stays exact
}

TEST_CASE("shared-vertex moments on simulated graphs hit the closed forms") {
    double rho = 0.3;
    int reps = 8, n = 55;
    Eigen::Matrix2d m1 = Eigen::Matrix2d::Zero(), m2 = m1, m3 = m1;
    for (int r = 0; r < reps; ++r) {
        auto s = sample_graphon(GraphonSpec::er(rho), n, 300 + r);
        CovOptions opt;
        TriadMomentCov cov = triad_moment_cov(s.g, opt);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                m1(a, b) += cov.xi1(a + 2, b + 2) / reps;
                m2(a, b) += cov.xi2(a + 2, b + 2) / reps;
                m3(a, b) += cov.xi3(a + 2, b + 2) / reps;
            }
    }
    Eigen::Matrix2d w1 = er_xi(1, rho), w2 = er_xi(2, rho), w3 = er_xi(3, rho);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            CAPTURE(a);
            CAPTURE(b);
            CHECK(std::fabs(m1(a, b) - w1(a, b)) < 0.12 * w1(a, b) + 2e-4);
            CHECK(std::fabs(m2(a, b) - w2(a, b)) < 0.12 * w2(a, b) + 2e-4);
            CHECK(std::fabs(m3(a, b) - w3(a, b)) < 0.12 * std::fabs(w3(a, b)) + 2e-4);
        }
    CHECK(er_p(2, rho) == doctest::Approx(rho * rho * (1 - rho)));
    CHECK(er_p(3, rho) == doctest::Approx(rho * rho * rho));
    // q=3 closed form ties to the induced frequencies exactly
    CHECK(er_xi(3, rho)(0, 0) == doctest::Approx(er_p(2, rho) / 3.0));
    CHECK(er_xi(3, rho)(1, 1) == doctest::Approx(er_p(3, rho)));
}

TEST_CASE("degree moment identities") {
    CHECK(surjections(4, 1) == 1);
    CHECK(surjections(4, 2) == 14);
    CHECK(surjections(4, 3) == 36);
    CHECK(surjections(4, 4) == 24);
    CHECK(surjections(6, 6) == 720);
    for (std::uint64_t seed : {21ull, 22ull}) {
        auto s = sample_graphon(GraphonSpec::beta_normal(-0.5, 1.0), 50, seed);
        for (int m = 1; m <= 6; ++m) {
            CAPTURE(m);
            double emp = degree_moment(s.g, m);
            double viaq = degree_moment_stars(s.g, m);
            CHECK(viaq == doctest::Approx(emp).epsilon(1e-10));
        }
        double mean = degree_moment(s.g, 1);
        double var_emp = degree_moment(s.g, 2) - mean * mean;
        CHECK(degree_variance_stars(s.g) == doctest::Approx(var_emp).epsilon(1e-10));
    }
}
