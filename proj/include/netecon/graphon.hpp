#pragma once
// Random-graph samplers: Erdos-Renyi, the logistic degree-heterogeneity
// (beta) model, a homophily threshold graphon, and piecewise-constant grid
// graphons loaded from file. All samplers are deterministic in (spec, n, seed).

#include <cstdint>
#include <string>
#include <vector>

#include "netecon/graph.hpp"

namespace netecon {

struct GraphonSpec {
    enum class Kind { er, beta, threshold, grid };
    enum class UDist { normal, twopoint };

    Kind kind = Kind::er;
    double rho = 0.1;  // er link probability

    // beta model: P(Y_ij=1|U) = Lambda(U_i + U_j); U_i iid from udist
    UDist udist = UDist::normal;
    double mu = 0.0, sigma = 1.0;        // normal
    double lo = -1.0, hi = 1.0, plo = 0.5;  // twopoint: lo w.p. plo else hi

    double alpha = 0.25;  // threshold: edge iff |U_i - U_j| <= alpha, U ~ U(0,1)

    // grid: k x k symmetric link probabilities, scaled by `scale`, cells from
    // U ~ U(0,1)
    int k = 1;
    std::vector<double> w;  // row-major k*k
    double scale = 1.0;

    static GraphonSpec er(double rho);
    static GraphonSpec beta_normal(double mu, double sigma);
    static GraphonSpec beta_twopoint(double lo, double hi, double plo);
    static GraphonSpec threshold(double alpha);
};

struct GraphonSample {
    Graph g;
    std::vector<double> u;  // latent node positions / effects
};

GraphonSample sample_graphon(const GraphonSpec& spec, int n, std::uint64_t seed);

// link probability W(u_i, u_j) under the spec (deterministic part)
double graphon_value(const GraphonSpec& spec, double ui, double uj);

// log likelihood of g under the beta model at the given node effects
double beta_loglik(const Graph& g, const std::vector<double>& u);

// file format: first line "k scale", then k rows of k probabilities
GraphonSpec load_grid_graphon(const std::string& path);

}  // namespace netecon
