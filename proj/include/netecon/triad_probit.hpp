#pragma once
// Correlated-random-effects probit estimated by a composite likelihood over
// pairs of directed dyads sharing one agent. Each triad contributes the
// simulated log probability of the four outcomes (Y_ij, Y_ji, Y_ik, Y_ki)
// under a tetra-variate normal with a structured correlation matrix.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "netecon/asf.hpp"
#include "netecon/dyadic.hpp"

namespace netecon {

// correlation matrix of the latent vector (V_ij, V_ji, V_ik, V_ki);
// throws std::domain_error when the parameters leave the PSD region
Eigen::Matrix4d sigma_matrix(double zeta, double sa, double sb, double rho);

// GHK estimate of P(Z_c < upper_c for y_c = 1, Z_c >= upper_c for y_c = 0),
// Z ~ N(0, sigma). Antithetic pairs; uniforms drawn from a stream keyed by
// seed so repeated calls (and calls at different parameters) share draws.
double orthant_prob(const Eigen::Matrix4d& sigma, const Eigen::Vector4d& upper,
                    const std::array<int, 4>& y, int draws, std::uint64_t seed);

// symmetrized triad kernel l_ijk = (1/3)(l*_ijk + l*_jik + l*_kij) evaluated
// from precomputed feature matrices; invariant to permutations of (i,j,k)
double triad_kernel(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                    const Eigen::VectorXd& theta, int i, int j, int k, int draws,
                    std::uint64_t seed);

struct TriadProbitOptions {
    int draws = 512;
    std::uint64_t seed = 1;
    int max_iter = 600;    // Nelder-Mead budget
    double tol = 1e-8;     // simplex value spread
    double nm_step = 0.2;  // initial simplex edge
    Eigen::VectorXd init;  // full (eta, zeta, sa, sb, rho); empty -> dyadic probit + 0.1
    int sigma_pool = 150;  // triads scored for the Sigma_q subsample
    double fd_step = 1e-4;
};

struct TriadProbitFit {
    Eigen::VectorXd theta;  // (eta', zeta, sa, sb, rho)
    int eta_dim = 0;
    double loglik = 0;  // average triad kernel at theta-hat
    bool converged = false;
    int iterations = 0;
    Eigen::MatrixXd gamma;                   // finite-difference Hessian of the criterion
    Eigen::MatrixXd sigma1, sigma2, sigma3;  // score covariances by shared-index count
    int pool = 0, pairs1 = 0, pairs2 = 0;    // subsample tallies behind sigma estimates
    Eigen::MatrixXd vcov_limit;  // 9 G^+ S1 G^+ (scale of sqrt(N)(theta - theta0))
    Eigen::MatrixXd vcov_all;    // finite-N form keeping the q = 2, 3 terms
    Eigen::VectorXd se_limit, se_all;  // sqrt(diag(vcov)/N)
    std::vector<std::string> labels;
};

// directed binary outcomes; recipe builds T_ij from node covariates
TriadProbitFit fit_triad_probit(const DyadicData& d, const Recipe& r,
                                const TriadProbitOptions& opt = {});

// wraps the index part of a triad probit fit as a first-stage PVR so the ASF
// machinery can average Phi(T'eta-hat); vcov_limit's eta block supplies the
// first-stage variance
AsfFit pvr_from_triad(const TriadProbitFit& tp, const Recipe& r, const PolicyData& d);

// simulation process: Y_ij = 1(T_ij' eta_struct + A_i + B_j + eps_ij >= 0)
// with Var(eps) = 1, corr(eps_ij, eps_ji) = zeta, (A_i, B_i) joint normal
// (sa, sb, corr rho). Node covariate "x" is iid standard normal. The
// scale-normalized index coefficient is eta_struct / sqrt(1 + sa^2 + sb^2).
struct CreDgpParams {
    Eigen::VectorXd eta_struct;
    double zeta = 0, sa = 0, sb = 0, rho = 0;
};
DyadicData simulate_cre_probit(int n, const Recipe& r, const CreDgpParams& p,
                               std::uint64_t seed);

}  // namespace netecon
