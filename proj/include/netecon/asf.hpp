#pragma once
// Average structural function (ASF) estimation for dyadic outcomes: fit a
// parametric proxy-variable regression (PVR) by composite likelihood, then
// average its fitted values over the empirical proxy distribution with the
// treatment pair pinned at policy values. Standard errors combine the
// projection variance of the double average with the first-stage delta term.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "netecon/dyadic.hpp"

namespace netecon {

// Node covariates carry the ego treatment, the alter treatment, and proxies.
// Role convention: the ego treatment enters the recipe through sender-side
// terms (send(w), cross(w,.)) and the alter treatment through receiver-side
// terms (recv(x)); asf() pins both columns to the policy values for every
// node, so any term respecting the role convention evaluates at (w, x).
struct PolicyData {
    DyadicData dyads;
    std::string wcol = "w";
    std::string xcol = "x";
};

struct AsfFit {
    Recipe recipe;
    Family family = Family::probit;
    FitResult fit;
    VarianceReport var;      // scale of sqrt(N)(gamma-hat - gamma0)
    int design_rank = 0;     // rank of the ordered-dyad feature Gram matrix
    bool identified = true;  // design_rank equals the number of terms
};

// omega selects the first-stage variance: "fg" (default), "limit" for the
// leading-term form, or any other dyadic_variance selector.
AsfFit fit_pvr(const PolicyData& d, Family f, const Recipe& r,
               const std::string& omega = "fg");

struct AsfEstimate {
    double w = 0, x = 0;
    double value = 0;  // m-hat(w, x)
    double se = 0;
    Eigen::VectorXd psi;          // per-node influence values, mean 0
    Eigen::RowVectorXd jac;       // 1 x J Jacobian of m-hat in gamma
    double xi = 0;                // (1/N) sum psi_i^2
    double var_first_stage = 0;   // jac * vtheta * jac'
    double min_propensity = 1.0;  // overlap diagnostic across proxy cells
    bool proxies_discrete = true; // false -> propensities are per-node, diagnostic weak
};

// kappa > 0 makes the overlap diagnostic a hard error naming failing cells
AsfEstimate asf(const PolicyData& d, const AsfFit& fit, double w, double x,
                double kappa = 0.0);

struct AsfContrast {
    double value = 0;
    double se = 0;
    Eigen::VectorXd psi;
    Eigen::RowVectorXd jac;
};

// linear combination of estimated cells; covariances flow through the shared
// influence values and the shared first-stage fit
AsfContrast asf_contrast(const AsfFit& fit, const std::vector<AsfEstimate>& cells,
                         const std::vector<double>& weights);

// test / demonstration process with additive effects and confounded binary
// treatments: Y_ij = a + b W_i + g X_j + d W_i X_j + A_i + B_j + noise, with
// W, X, A, B all driven by a binary proxy r so the PVR
//   const + send(w) + recv(x) + cross(w,x) + send(r) + recv(r)
// is correctly specified. ASF(1,1) - ASF(0,0) = b + g + d.
PolicyData simulate_policy_linear(int n, double a, double b, double g, double d,
                                  double lam_a, double lam_b, double noise_sd,
                                  std::uint64_t seed);
Recipe policy_linear_recipe();

}  // namespace netecon
