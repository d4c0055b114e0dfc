#pragma once
// Dyadic regression by composite likelihood: directed or undirected outcomes
// y_ij modeled through an index w_ij' theta, with standard errors that respect
// dependence between dyads sharing an agent, and resampling schemes.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "netecon/graph.hpp"

namespace netecon {

enum class Family { poisson, logit, probit, linear };
Family family_from_string(const std::string& s);
std::string family_name(Family f);
double family_mean(Family f, double index);

struct NodeData {
    Eigen::MatrixXd x;  // n rows, one column per covariate
    std::vector<std::string> names;
    int col(const std::string& name) const;
};

struct DyadicData {
    int n = 0;
    bool directed = true;
    Eigen::MatrixXd y;  // n x n outcomes, diagonal ignored
    NodeData nodes;

    static DyadicData from_graph(const Graph& g, NodeData nodes = {});
};

// dyad regressors derived from node covariates:
//   const            1
//   send(x)          x_i
//   recv(x)          x_j
//   sum(x)           x_i + x_j
//   absdiff(x)       |x_i - x_j|
//   prod(x)          x_i * x_j
//   cross(x,z)       x_i * z_j
//   match(x)         1{x_i = x_j}
//   logdist(x)       log(1 + |x_i - x_j|)
struct Term {
    enum class Kind { constant, send, recv, sum, absdiff, prod, cross, match, logdist };
    Kind kind = Kind::constant;
    std::string a, b;
    std::string label() const;
};

struct Recipe {
    std::vector<Term> terms;
    // e.g. "const + send(age) + absdiff(wealth) + cross(age,wealth)"
    static Recipe parse(const std::string& text);
    std::vector<std::string> labels() const;
    int size() const { return int(terms.size()); }
};

// feature matrices, one n x n matrix per term (entry (i,j) = w_ij component)
std::vector<Eigen::MatrixXd> build_features(const DyadicData& d, const Recipe& r);

struct FitOptions {
    int max_iter = 100;
    double tol = 1e-12;  // sup-norm of the score
    Eigen::VectorXd init;
};

struct FitResult {
    Eigen::VectorXd theta;
    double loglik = 0;        // per ordered dyad average
    Eigen::VectorXd score;    // S_N(theta)
    Eigen::MatrixXd hessian;  // H_N(theta)
    bool converged = false;
    int iterations = 0;
    Family family = Family::logit;
    std::vector<std::string> labels;
};

FitResult fit_composite(const DyadicData& d, const Recipe& r, Family f,
                        const FitOptions& opt = {});

// same fit on caller-supplied feature matrices (dyad-level regressors that a
// node recipe cannot express)
FitResult fit_composite(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                        const std::vector<std::string>& labels, Family f,
                        const FitOptions& opt = {});

// ordered-dyad scores s_ij = dl(y_ij, w_ij'theta)/dtheta; column dyad_col(i,j)
Eigen::MatrixXd dyad_scores(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                            Family f, const Eigen::VectorXd& theta);

struct VarianceReport {
    Eigen::MatrixXd sigma1;        // shared-agent score covariance
    Eigen::MatrixXd sigma23;       // own-dyad score second moment
    Eigen::MatrixXd sigma1_jack;   // jackknife-style estimate of sigma1
    Eigen::MatrixXd omega_analog;  // 4*S1 + 2/(N-1) (S23 - 2*S1)
    Eigen::MatrixXd omega_fg;      // (2*S23 + 4(N-2)*S1) / (N-1)
    Eigen::MatrixXd omega_jack;    // scaled leave-one-agent-out jackknife
    Eigen::MatrixXd omega_jack_bc; // bias-corrected jackknife
    Eigen::MatrixXd omega_limit;   // 4*S1
    Eigen::MatrixXd omega;         // the selected one
    Eigen::MatrixXd vtheta;        // (Gamma' Omega^+ Gamma)^+, scale of sqrt(N)(theta-theta0)
    Eigen::VectorXd se;            // sqrt(diag(vtheta)/N)
    std::string omega_used;
};

// omega: "fg" (default), "analog", "jackknife", "jackknife_bc", "limit"
VarianceReport dyadic_variance(const DyadicData& d, const Recipe& r, Family f,
                               const FitResult& fit, const std::string& omega = "fg");
VarianceReport dyadic_variance(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                               Family f, const FitResult& fit, const std::string& omega = "fg");

struct BootstrapResult {
    std::string method;
    int requested = 0;
    int completed = 0;  // replicates that converged
    Eigen::MatrixXd replicates;  // completed x J (theta draws, or scores for menzel)
    Eigen::VectorXd se;          // per-coefficient standard error
    Eigen::VectorXd ci_lo, ci_hi;  // 95 percent
    Eigen::MatrixXd omega_boot;  // menzel: N * cov of score replicates
};

// method: "weighted" (iid exponential weights), "weighted_multinomial",
// "pigeonhole", "menzel"
BootstrapResult dyadic_bootstrap(const DyadicData& d, const Recipe& r, Family f,
                                 const FitResult& fit, const std::string& method, int b,
                                 std::uint64_t seed);

// test / demonstration process: logistic marginal Pr(y=1|w) with extra
// dependence between dyads sharing an agent (gaussian copula with agent
// effects of scale tau). Covariate "x" is iid standard normal; regressors are
// const + absdiff(x); undirected outcomes.
DyadicData simulate_shared_agent_logit(int n, const Eigen::VectorXd& theta, double tau,
                                       std::uint64_t seed);
Recipe shared_agent_logit_recipe();

}  // namespace netecon
