#pragma once
// Strategic network formation. Three models:
//  - a transferable-utility model where agents value links and common
//    neighbors: pairwise-stability checks, monotone fixed-point bounds on the
//    equilibrium set, and simulated-minimum-distance estimation from subgraph
//    moments;
//  - an incomplete-information game estimated in two steps (cell-mean beliefs,
//    then a probit composite likelihood on belief-augmented regressors);
//  - a sequential meeting process whose stationary distribution is an
//    exponential random graph model, with an exact small-n oracle.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "netecon/dyadic.hpp"
#include "netecon/graph.hpp"

namespace netecon {

// ---- transferable-utility transitivity model ------------------------------

struct MiyauchiParams {
    double alpha = 0.0;
    double beta = 0.0;  // taste for common neighbors; lattice tools need beta >= 0
};

// payoff of agent i: sum over i's links of (alpha - u(i, j)) plus beta per
// common neighbor summed over those links
double agent_utility(const Eigen::MatrixXd& adj, int i, const MiyauchiParams& p,
                     const Eigen::MatrixXd& u);

// gain to i from having the (i, j) link relative to not having it, holding
// the rest of the graph fixed: alpha + beta * common(i, j) - u(i, j)
double marginal_utility(const Eigen::MatrixXd& adj, int i, int j, const MiyauchiParams& p,
                        const Eigen::MatrixXd& u);

struct Violation {
    int i = 0, j = 0;
    bool present = false;  // offending link exists (should drop) vs missing (should form)
    double gain = 0.0;     // transfers: joint surplus of the deviation
};
struct StabilityReport {
    bool stable = true;
    std::vector<Violation> violations;  // first max_report offenders
};

// transfers = true: a link is stable iff mu_i + mu_j >= 0 (present) or
// mu_i + mu_j < 0 (absent). transfers = false: every present link needs
// mu_i >= 0 and mu_j >= 0; an absent link is a violation when both sides
// strictly gain.
StabilityReport is_pairwise_stable(const Eigen::MatrixXd& adj, const MiyauchiParams& p,
                                   const Eigen::MatrixXd& u, bool transfers,
                                   int max_report = 16);

// one synchronous sweep of the transfers link rule over all dyads
Eigen::MatrixXd phi_map(const Eigen::MatrixXd& adj, const MiyauchiParams& p,
                        const Eigen::MatrixXd& u);

struct EquilibriumPair {
    Eigen::MatrixXd dmin, dmax;
    int sweeps_min = 0, sweeps_max = 0;
};

// iterate phi from the empty graph (nondecreasing) and the complete graph
// (nonincreasing) to the extremal fixed points; beta < 0 is refused
EquilibriumPair min_max_equilibria(const MiyauchiParams& p, const Eigen::MatrixXd& u);

// symmetric shock matrix whose dyad totals u(i,j) + u(j,i) are iid standard
// logistic, so an isolated link forms with probability Lambda(2 alpha); the
// (seed, id) pair keys an independent substream per replicate
Eigen::MatrixXd logistic_shocks(int n, std::uint64_t seed, std::uint64_t id);

struct MomentOptions {
    std::vector<std::string> patterns{"edge", "twopath", "triangle"};
    int b = 200;  // independent shock draws
    std::string selection = "both";  // "min", "max", or "both"
    std::uint64_t seed = 1;
};
struct SimulatedMoments {
    Eigen::VectorXd upper, lower;  // mean subgraph frequencies of max / min equilibria;
                                   // a side skipped by `selection` has size 0
    std::vector<std::string> patterns;
    int b = 0;
};
SimulatedMoments simulate_moments(const MiyauchiParams& p, int n, const MomentOptions& opt = {});

struct SmdOptions {
    std::vector<Eigen::VectorXd> grid;  // candidate (alpha, beta) points
    std::string mode = "point";         // "point" or "bounds"
    std::string selection = "max";      // equilibrium matched by the point criterion
    int n = 0;                          // agents per simulated network
    int b = 200;
    std::uint64_t seed = 1;
    std::vector<std::string> patterns{"edge", "twopath", "triangle"};
    bool refine = false;   // Nelder-Mead polish from the best grid point
    double slack = 0.0;    // additive tolerance for the bounds inequalities
};
struct SmdResult {
    Eigen::VectorXd theta;  // point mode argmin (refined when requested)
    double criterion = 0.0;
    std::vector<double> values;               // point-mode criterion per grid point
    std::vector<Eigen::VectorXd> identified;  // bounds mode: accepted grid points
    bool empty_set = false;
};

// point mode: minimize (pi(theta) - pi_obs)' pinv(omega_pi) (pi(theta) - pi_obs)
// over the grid using common random numbers across theta; bounds mode: keep
// grid points with upper(theta) >= pi_obs >= lower(theta) componentwise
SmdResult smd_fit(const Eigen::VectorXd& pi_obs, const Eigen::MatrixXd& omega_pi,
                  const SmdOptions& opt);

// ---- incomplete-information two-step estimator ----------------------------

struct LeungParams {
    double alpha = 0.0;     // intercept
    double beta = 0.0;      // weight on the reciprocal-link belief
    double gamma = 0.0;     // weight on the supported-link belief
    Eigen::VectorXd delta;  // loadings on the covariate terms
};

struct LeungBeliefs {
    Eigen::MatrixXd p;  // ex ante linking probabilities
    double residual = 0.0;  // sup-norm of the final fixed-point update
    int iterations = 0;
    bool converged = false;
};

// damped fixed point of
//   P_ij = Phi(alpha + beta P_ji + gamma sum_{k != i,j} P_ki P_kj + t_ij' delta)
LeungBeliefs leung_beliefs(const DyadicData& skel, const Recipe& t, const LeungParams& theta);

// draws each directed link independently at the belief solution
DyadicData simulate_leung(const DyadicData& skel, const Recipe& t, const LeungParams& theta,
                          std::uint64_t seed, LeungBeliefs* beliefs = nullptr);

struct LeungFit {
    FitResult fit;  // probit on (const, reciprocal belief, supported belief, t terms)
    VarianceReport var;
    Eigen::MatrixXd phat;  // step-1 cell-mean beliefs
    int cells = 0;
    std::vector<std::string> labels;
};

// step 1 replaces beliefs by cell means of the outcome over ordered dyads with
// identical covariate terms; min_cell guards against effectively continuous
// covariates (every cell must hold at least that many ordered dyads)
LeungFit leung_fit(const DyadicData& d, const Recipe& t, int min_cell = 2,
                   const std::string& omega = "fg");

// ---- sequential meeting chain and its exact stationary law ----------------

struct MeleParams {
    Eigen::VectorXd alpha;  // loadings on r_ij + r_ji from the recipe terms
    double beta = 0.0;      // degree externality, scaled by 1 / n
};

// lex rank of the unordered dyad {i, j}; bit position in small-n state ids
int dyad_rank(int i, int j, int n);

// potential whose exponential is the stationary law:
//   Q(d) = sum_{i<j} d_ij (r_ij + r_ji)' alpha + (beta / n) sum_j deg_j^2
double mele_potential(const Eigen::MatrixXd& adj, const std::vector<Eigen::MatrixXd>& feat,
                      const MeleParams& p);

struct MeleOptions {
    long long steps = 100000;
    long long burnin = -1;    // -1 means steps / 10
    std::uint64_t seed = 1;
    Eigen::VectorXd meeting;  // C(n,2) positive probabilities summing to 1; empty = uniform
};
struct MeleChainResult {
    Eigen::MatrixXd terminal;
    Eigen::VectorXd state_counts;  // post-burn-in visits per state id when n <= 5
    long long steps = 0, burnin = 0;
};

// each step meets one dyad and redraws its link from the logistic conditional
// implied by the potential, so the chain is reversible with stationary law
// proportional to exp(Q)
MeleChainResult mele_chain(const Eigen::MatrixXd& start, const DyadicData& skel,
                           const Recipe& r, const MeleParams& p, const MeleOptions& opt = {});

// full 2^C(n,2)-state stationary distribution; refuses n > 5
Eigen::VectorXd ergm_exact(const DyadicData& skel, const Recipe& r, const MeleParams& p);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace netecon
