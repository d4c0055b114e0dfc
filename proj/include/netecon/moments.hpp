#pragma once
// Subgraph moment estimation: induced (P) and subgraph (Q) frequencies,
// transitivity, stitched-moment machinery for the covariance of low-order
// moment estimates, and degree-moment identities.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "netecon/graph.hpp"

namespace netecon {

double binom(double n, int k);

struct MomentEstimate {
    std::string name;
    int order = 0;
    int iso = 1;                // labeled copies on `order` fixed vertices
    double induced_count = 0;   // subsets inducing the class
    double subgraph_count = 0;  // unordered subgraph copies (isolated pattern
                                // vertices count as designated extra slots)
    double p_hat = 0;           // induced_count / (C(N,p) * iso)
    double q_hat = 0;           // subgraph embeddings / (C(N,p) * iso)
};

struct TriadCensus {
    double empty = 0, oneedge = 0, twostar = 0, triangle = 0;
    double total() const { return empty + oneedge + twostar + triangle; }
};
TriadCensus triad_census(const Graph& g);

// counts of induced subsets by pattern mask, p in {3,4,5}; index = tuple mask
std::vector<long long> subset_histogram(const Graph& g, int p, int threads = 1);

std::vector<MomentEstimate> count_patterns(const Graph& g, const std::vector<Graphlet>& pats,
                                           int threads = 1);
MomentEstimate count_pattern(const Graph& g, const Graphlet& pat, int threads = 1);

// ---- stitched moments ----------------------------------------------------

struct StitchEntry {
    Graphlet union_g;      // pattern on v vertices; edges only on constrained pairs
    std::string name;      // union class name
    int nu = 0;            // multiplicity
};

struct StitchMultiset {
    int p = 0, q = 0, v = 0;
    Graphlet r, s;
    Mask constrained = 0;  // pairs within either tuple
    Mask free = 0;         // cross pairs, unconstrained
    std::vector<StitchEntry> entries;
    int total_nu() const;
};

// patterns share q vertices: first tuple on {0..p-1}, second on {p-q..2p-q-1}.
// requires r.p == s.p, 1 <= q <= p, p <= 4
StitchMultiset stitching_multiset(int q, const Graphlet& r, const Graphlet& s);

struct XiOptions {
    enum class Mode { exact, subsample };
    Mode mode = Mode::subsample;
    long long samples = 1000000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct XiEstimate {
    double xi = 0;       // Xi_q(R,S)
    double se = 0;       // Monte Carlo error (0 in exact mode)
    double sigma = 0;    // xi - P_hat(R) P_hat(S)
    double sets = 0;     // tuples evaluated
    std::string mode;
};

// E[ 1(R = G[first tuple]) 1(S = G[second tuple]) ] / (iso(R) iso(S)) over
// ordered tuples of 2p-q distinct vertices sharing q
XiEstimate stitching_xi(const Graph& g, int q, const Graphlet& r, const Graphlet& s,
                        const XiOptions& opt = {});

// ---- covariance of triad moment estimates ---------------------------------

struct CovOptions {
    enum class Mode { exact, subsample };
    Mode mode = Mode::exact;
    long long samples = 1000000;
    std::uint64_t seed = 1;
    int threads = 1;
};

// triad classes ordered (empty, oneedge, twostar, triangle)
struct TriadMomentCov {
    std::array<double, 4> p_hat{};
    std::array<double, 4> iso{1, 3, 3, 1};
    Eigen::Matrix4d xi1, xi2, xi3;          // shared-vertex moments, q = 1,2,3
    Eigen::Matrix4d sigma1, sigma2, sigma3; // xi_q - p p'
    // Var of the P estimates: "leading" keeps the q=1 term and the
    // product-moment correction; "all" keeps q=1..3
    Eigen::Matrix4d v_leading, v_all;
    std::array<double, 4> se_leading{}, se_all{};
    double ti = 0;         // P(triangle) / (P(twostar) + P(triangle))
    double ti_qratio = 0;  // Q(triangle) / Q(twostar), algebraically equal
    double se_ti_leading = 0, se_ti_all = 0;
    double pentads = 0, tetrads = 0;
    double mc_se_xi1_max = 0;  // subsample mode: largest entrywise MC error
    std::string mode;
};

TriadMomentCov triad_moment_cov(const Graph& g, const CovOptions& opt = {});

// closed forms under an Erdos-Renyi graph, classes ordered (twostar, triangle)
Eigen::Matrix2d er_xi(int q, double rho);
double er_p(int cls, double rho);  // cls: 2 = twostar, 3 = triangle

// ---- degree moments --------------------------------------------------------

double surjections(int m, int k);              // k! * Stirling2(m,k)
double star_q(const Graph& g, int k);          // Q_N of the (k+1)-star
double degree_moment(const Graph& g, int m);   // (1/N) sum_i d_i^m
double degree_moment_stars(const Graph& g, int m);
double degree_variance_stars(const Graph& g);

}  // namespace netecon
