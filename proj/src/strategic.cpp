#include "netecon/strategic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "netecon/linalg.hpp"
#include "netecon/moments.hpp"
#include "netecon/optim.hpp"
#include "netecon/rng.hpp"

namespace netecon {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_adjacency(const Eigen::MatrixXd& adj, const char* who) {
    const int n = int(adj.rows());
    if (adj.cols() != n) throw std::invalid_argument(std::string(who) + ": adjacency must be square");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = adj(i, j);
            if (v != 0.0 && v != 1.0)
                throw std::invalid_argument(std::string(who) + ": adjacency entries must be 0 or 1");
            if (i == j && v != 0.0)
                throw std::invalid_argument(std::string(who) + ": self links are not allowed");
            if (adj(j, i) != v)
                throw std::invalid_argument(std::string(who) + ": adjacency must be symmetric");
        }
}

int common_neighbors(const Eigen::MatrixXd& adj, int i, int j) {
    const int n = int(adj.rows());
    int c = 0;
    for (int k = 0; k < n; ++k)
        if (k != i && k != j && adj(i, k) > 0.5 && adj(j, k) > 0.5) ++c;
    return c;
}

Graph to_graph(const Eigen::MatrixXd& adj) {
    const int n = int(adj.rows());
    Graph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (adj(i, j) > 0.5) g.add_edge(i, j);
    return g;
}

std::vector<Graphlet> resolve_patterns(const std::vector<std::string>& names) {
    std::vector<Graphlet> out;
    for (const auto& nm : names) {
        Graphlet g;
        if (!GraphletDict::instance().lookup(nm, &g))
            throw std::invalid_argument("unknown pattern name: " + nm);
        out.push_back(g);
    }
    return out;
}

Eigen::VectorXd pattern_freqs(const Eigen::MatrixXd& adj, const std::vector<Graphlet>& pats) {
    Graph g = to_graph(adj);
    auto est = count_patterns(g, pats);
    Eigen::VectorXd v(int(est.size()));
    for (int k = 0; k < v.size(); ++k) v(k) = est[size_t(k)].q_hat;
    return v;
}

}  // namespace

double agent_utility(const Eigen::MatrixXd& adj, int i, const MiyauchiParams& p,
                     const Eigen::MatrixXd& u) {
    const int n = int(adj.rows());
    double total = 0.0;
    for (int j = 0; j < n; ++j)
        if (j != i && adj(i, j) > 0.5) total += p.alpha - u(i, j);
    // beta per triangle the agent participates in
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
            if (j != i && k != i && adj(i, j) > 0.5 && adj(i, k) > 0.5 && adj(j, k) > 0.5)
                total += p.beta;
    return total;
}

double marginal_utility(const Eigen::MatrixXd& adj, int i, int j, const MiyauchiParams& p,
                        const Eigen::MatrixXd& u) {
    if (i == j) throw std::invalid_argument("marginal_utility: i and j must differ");
    return p.alpha + p.beta * common_neighbors(adj, i, j) - u(i, j);
}

StabilityReport is_pairwise_stable(const Eigen::MatrixXd& adj, const MiyauchiParams& p,
                                   const Eigen::MatrixXd& u, bool transfers, int max_report) {
    check_adjacency(adj, "is_pairwise_stable");
    const int n = int(adj.rows());
    StabilityReport rep;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double mi = marginal_utility(adj, i, j, p, u);
            double mj = marginal_utility(adj, j, i, p, u);
            bool present = adj(i, j) > 0.5;
            bool bad;
            double gain;
            if (transfers) {
                gain = mi + mj;
                bad = present ? gain < 0.0 : gain >= 0.0;
            } else {
                gain = std::min(mi, mj);
                bad = present ? (mi < 0.0 || mj < 0.0) : (mi > 0.0 && mj > 0.0);
            }
            if (bad) {
                rep.stable = false;
                if (int(rep.violations.size()) < max_report)
                    rep.violations.push_back({i, j, present, gain});
            }
        }
    return rep;
}

Eigen::MatrixXd phi_map(const Eigen::MatrixXd& adj, const MiyauchiParams& p,
                        const Eigen::MatrixXd& u) {
    const int n = int(adj.rows());
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double gain = marginal_utility(adj, i, j, p, u) + marginal_utility(adj, j, i, p, u);
            if (gain >= 0.0) next(i, j) = next(j, i) = 1.0;
        }
    return next;
}

EquilibriumPair min_max_equilibria(const MiyauchiParams& p, const Eigen::MatrixXd& u) {
    if (p.beta < 0.0)
        throw std::invalid_argument(
            "min_max_equilibria: negative externality breaks the monotone link map");
    const int n = int(u.rows());
    if (u.cols() != n || n < 2)
        throw std::invalid_argument("min_max_equilibria: shock matrix must be square, n >= 2");
    const int cap = n * (n - 1) / 2 + 2;
    EquilibriumPair out;
    out.dmin = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < cap; ++s) {
        Eigen::MatrixXd next = phi_map(out.dmin, p, u);
        ++out.sweeps_min;
        if ((next.array() == out.dmin.array()).all()) break;
        out.dmin = next;
    }
    out.dmax = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    for (int s = 0; s < cap; ++s) {
        Eigen::MatrixXd next = phi_map(out.dmax, p, u);
        ++out.sweeps_max;
        if ((next.array() == out.dmax.array()).all()) break;
        out.dmax = next;
    }
    return out;
}

Eigen::MatrixXd logistic_shocks(int n, std::uint64_t seed, std::uint64_t id) {
    Rng rng(seed, "smd-shocks", id);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = rng.uniform();
            double shock = std::log(v / (1.0 - v));
            u(i, j) = u(j, i) = 0.5 * shock;
        }
    return u;
}

SimulatedMoments simulate_moments(const MiyauchiParams& p, int n, const MomentOptions& opt) {
    if (opt.b < 1) throw std::invalid_argument("simulate_moments: need at least one draw");
    if (opt.selection != "min" && opt.selection != "max" && opt.selection != "both")
        throw std::invalid_argument("simulate_moments: selection must be min, max, or both");
    auto pats = resolve_patterns(opt.patterns);
    const int J = int(pats.size());
    const bool want_max = opt.selection != "min", want_min = opt.selection != "max";
    SimulatedMoments out;
    out.patterns = opt.patterns;
    out.b = opt.b;
    if (want_max) out.upper = Eigen::VectorXd::Zero(J);
    if (want_min) out.lower = Eigen::VectorXd::Zero(J);
    for (int rep = 0; rep < opt.b; ++rep) {
        Eigen::MatrixXd u = logistic_shocks(n, opt.seed, std::uint64_t(rep));
        EquilibriumPair eq = min_max_equilibria(p, u);
        if (want_max) out.upper += pattern_freqs(eq.dmax, pats);
        if (want_min) out.lower += pattern_freqs(eq.dmin, pats);
    }
    if (want_max) out.upper /= double(opt.b);
    if (want_min) out.lower /= double(opt.b);
    return out;
}

SmdResult smd_fit(const Eigen::VectorXd& pi_obs, const Eigen::MatrixXd& omega_pi,
                  const SmdOptions& opt) {
    const int J = int(pi_obs.size());
    if (int(opt.patterns.size()) != J)
        throw std::invalid_argument("smd_fit: moment vector and pattern list sizes differ");
    if (omega_pi.rows() != J || omega_pi.cols() != J)
        throw std::invalid_argument("smd_fit: weight matrix has the wrong shape");
    if (opt.grid.empty()) throw std::invalid_argument("smd_fit: empty parameter grid");
    if (opt.n < 2) throw std::invalid_argument("smd_fit: need the simulated network size n");
    if (opt.mode != "point" && opt.mode != "bounds")
        throw std::invalid_argument("smd_fit: mode must be point or bounds");
    if (opt.selection != "max" && opt.selection != "min")
        throw std::invalid_argument("smd_fit: selection must be max or min");

    MomentOptions mo;
    mo.patterns = opt.patterns;
    mo.b = opt.b;
    mo.seed = opt.seed;

    SmdResult out;
    if (opt.mode == "point") {
        mo.selection = opt.selection;
        Eigen::MatrixXd w = pinv(omega_pi);
        auto crit = [&](const Eigen::VectorXd& th) {
            if (th(1) < 0.0) return std::numeric_limits<double>::infinity();
            MiyauchiParams p{th(0), th(1)};
            SimulatedMoments sm = simulate_moments(p, opt.n, mo);
            Eigen::VectorXd q = (opt.selection == "max" ? sm.upper : sm.lower) - pi_obs;
            return double(q.transpose() * w * q);
        };
        out.criterion = std::numeric_limits<double>::infinity();
        for (const auto& th : opt.grid) {
            if (th.size() != 2) throw std::invalid_argument("smd_fit: grid points must be (alpha, beta)");
            double v = crit(th);
            out.values.push_back(v);
            if (v < out.criterion) {
                out.criterion = v;
                out.theta = th;
            }
        }
        if (opt.refine) {
            auto res = nelder_mead(crit, out.theta);
            if (res.value < out.criterion) {
                out.theta = res.x;
                out.criterion = res.value;
            }
        }
    } else {
        for (const auto& th : opt.grid) {
            if (th.size() != 2) throw std::invalid_argument("smd_fit: grid points must be (alpha, beta)");
            MiyauchiParams p{th(0), th(1)};
            SimulatedMoments sm = simulate_moments(p, opt.n, mo);
            double viol = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < J; ++k) {
                viol = std::max(viol, pi_obs(k) - sm.upper(k) - opt.slack);
                viol = std::max(viol, sm.lower(k) - pi_obs(k) - opt.slack);
            }
            out.values.push_back(viol);
            if (viol <= 0.0) out.identified.push_back(th);
        }
        out.empty_set = out.identified.empty();
    }
    return out;
}

// ---- incomplete-information two-step estimator ----------------------------

namespace {

// index matrix given beliefs: alpha + beta P_ji + gamma sum_k P_ki P_kj + t'delta
Eigen::MatrixXd leung_index(const Eigen::MatrixXd& base, const Eigen::MatrixXd& p, double beta,
                            double gamma) {
    Eigen::MatrixXd s = p.transpose() * p;  // zero diagonal of p removes k = i, j terms
    Eigen::MatrixXd idx = base + beta * p.transpose() + gamma * s;
    idx.diagonal().setZero();
    return idx;
}

}  // namespace

LeungBeliefs leung_beliefs(const DyadicData& skel, const Recipe& t, const LeungParams& theta) {
    const int n = skel.n;
    if (theta.delta.size() != t.size())
        throw std::invalid_argument("leung_beliefs: delta does not match the covariate terms");
    auto tfeat = build_features(skel, t);
    Eigen::MatrixXd base = Eigen::MatrixXd::Constant(n, n, theta.alpha);
    for (int k = 0; k < t.size(); ++k) base += theta.delta(k) * tfeat[size_t(k)];
    base.diagonal().setZero();

    LeungBeliefs out;
    out.p = Eigen::MatrixXd::Zero(n, n);
    // start at the no-externality solution
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) out.p(i, j) = norm_cdf(base(i, j));

    const int max_iter = 10000;
    const double tol = 1e-10;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        Eigen::MatrixXd idx = leung_index(base, out.p, theta.beta, theta.gamma);
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) next(i, j) = norm_cdf(idx(i, j));
        out.residual = (next - out.p).cwiseAbs().maxCoeff();
        if (out.residual < tol) {
            out.converged = true;
            break;
        }
        out.p = 0.5 * out.p + 0.5 * next;  // damped update
    }
    return out;
}

DyadicData simulate_leung(const DyadicData& skel, const Recipe& t, const LeungParams& theta,
                          std::uint64_t seed, LeungBeliefs* beliefs) {
    const int n = skel.n;
    LeungBeliefs b = leung_beliefs(skel, t, theta);
    auto tfeat = build_features(skel, t);
    Eigen::MatrixXd base = Eigen::MatrixXd::Constant(n, n, theta.alpha);
    for (int k = 0; k < t.size(); ++k) base += theta.delta(k) * tfeat[size_t(k)];
    Eigen::MatrixXd idx = leung_index(base, b.p, theta.beta, theta.gamma);

    DyadicData out = skel;
    out.directed = true;
    out.y = Eigen::MatrixXd::Zero(n, n);
    Rng rng(seed, "leung-sim");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            out.y(i, j) = rng.normal() <= idx(i, j) ? 1.0 : 0.0;
        }
    if (beliefs) *beliefs = b;
    return out;
}

LeungFit leung_fit(const DyadicData& d, const Recipe& t, int min_cell, const std::string& omega) {
    const int n = d.n;
    if (n < 3) throw std::invalid_argument("leung_fit: need at least 3 agents");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && d.y(i, j) != 0.0 && d.y(i, j) != 1.0)
                throw std::invalid_argument("leung_fit: outcomes must be binary");
    auto tfeat = build_features(d, t);
    const int T = t.size();

    // step 1: cell means over ordered dyads sharing the covariate-term vector
    std::map<std::vector<double>, std::pair<double, int>> cells;
    std::vector<double> key;
    key.resize(size_t(T));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (int k = 0; k < T; ++k) key[size_t(k)] = tfeat[size_t(k)](i, j);
            auto& cell = cells[key];
            cell.first += d.y(i, j);
            cell.second += 1;
        }
    std::vector<std::string> small;
    for (const auto& [k, v] : cells)
        if (v.second < min_cell && int(small.size()) < 8) {
            std::ostringstream os;
            os << "(";
            for (size_t q = 0; q < k.size(); ++q) os << (q ? "," : "") << k[q];
            os << "): " << v.second;
            small.push_back(os.str());
        }
    if (!small.empty()) {
        std::ostringstream os;
        os << "leung_fit: covariate cells with fewer than " << min_cell << " ordered dyads:";
        for (const auto& s : small) os << "\n  " << s;
        throw std::invalid_argument(os.str());
    }

    LeungFit out;
    out.cells = int(cells.size());
    out.phat = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (int k = 0; k < T; ++k) key[size_t(k)] = tfeat[size_t(k)](i, j);
            const auto& cell = cells.at(key);
            out.phat(i, j) = cell.first / cell.second;
        }

    // step 2: probit composite likelihood on belief-augmented regressors
    std::vector<Eigen::MatrixXd> feat;
    feat.push_back(Eigen::MatrixXd::Ones(n, n));
    feat.push_back(out.phat.transpose());
    Eigen::MatrixXd support = out.phat.transpose() * out.phat;
    support.diagonal().setZero();
    feat.push_back(support);
    for (int k = 0; k < T; ++k) feat.push_back(tfeat[size_t(k)]);
    out.labels = {"const", "recip_belief", "support_belief"};
    for (const auto& l : t.labels()) out.labels.push_back(l);

    out.fit = fit_composite(d, feat, out.labels, Family::probit);
    out.var = dyadic_variance(d, feat, Family::probit, out.fit, omega);
    return out;
}

// ---- sequential meeting chain ----------------------------------------------

int dyad_rank(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

double mele_potential(const Eigen::MatrixXd& adj, const std::vector<Eigen::MatrixXd>& feat,
                      const MeleParams& p) {
    const int n = int(adj.rows());
    double q = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (adj(i, j) > 0.5)
                for (int t = 0; t < int(feat.size()); ++t)
                    q += p.alpha(t) * (feat[size_t(t)](i, j) + feat[size_t(t)](j, i));
    Eigen::VectorXd deg = adj.rowwise().sum();
    q += p.beta / double(n) * deg.squaredNorm();
    return q;
}

namespace {

Eigen::MatrixXd mele_ralpha(const DyadicData& skel, const Recipe& r, const MeleParams& p) {
    if (p.alpha.size() != r.size())
        throw std::invalid_argument("mele: alpha does not match the recipe terms");
    auto feat = build_features(skel, r);
    Eigen::MatrixXd ra = Eigen::MatrixXd::Zero(skel.n, skel.n);
    for (int t = 0; t < r.size(); ++t)
        ra += p.alpha(t) * (feat[size_t(t)] + feat[size_t(t)].transpose());
    return ra;
}

}  // namespace

MeleChainResult mele_chain(const Eigen::MatrixXd& start, const DyadicData& skel,
                           const Recipe& r, const MeleParams& p, const MeleOptions& opt) {
    check_adjacency(start, "mele_chain");
    const int n = skel.n;
    if (int(start.rows()) != n)
        throw std::invalid_argument("mele_chain: start graph does not match the node data");
    const int m = n * (n - 1) / 2;
    Eigen::MatrixXd ra = mele_ralpha(skel, r, p);

    std::vector<std::pair<int, int>> dyads;
    dyads.resize(size_t(m));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dyads[size_t(dyad_rank(i, j, n))] = {i, j};

    std::vector<double> cum;
    if (opt.meeting.size() != 0) {
        if (int(opt.meeting.size()) != m)
            throw std::invalid_argument("mele_chain: meeting probabilities need one entry per dyad");
        if (opt.meeting.minCoeff() <= 0.0)
            throw std::invalid_argument("mele_chain: meeting probabilities must be positive");
        if (std::abs(opt.meeting.sum() - 1.0) > 1e-9)
            throw std::invalid_argument("mele_chain: meeting probabilities must sum to 1");
        cum.resize(size_t(m));
        double acc = 0.0;
        for (int k = 0; k < m; ++k) cum[size_t(k)] = (acc += opt.meeting(k));
    }

    MeleChainResult out;
    out.steps = opt.steps;
    out.burnin = opt.burnin < 0 ? opt.steps / 10 : opt.burnin;
    Eigen::MatrixXd adj = start;
    Eigen::VectorXd deg = adj.rowwise().sum();
    std::uint64_t state = 0;
    bool track = n <= 5;
    if (track) {
        for (int k = 0; k < m; ++k)
            if (adj(dyads[size_t(k)].first, dyads[size_t(k)].second) > 0.5)
                state |= std::uint64_t(1) << k;
        out.state_counts = Eigen::VectorXd::Zero(std::int64_t(1) << m);
    }

    Rng rng(opt.seed, "mele-chain");
    for (long long step = 0; step < opt.steps; ++step) {
        int k;
        if (cum.empty()) {
            k = int(rng.below(std::uint64_t(m)));
        } else {
            double v = rng.uniform();
            k = int(std::lower_bound(cum.begin(), cum.end(), v) - cum.begin());
            if (k >= m) k = m - 1;
        }
        auto [i, j] = dyads[size_t(k)];
        double cur = adj(i, j);
        double si = deg(i) - cur, sj = deg(j) - cur;  // degrees excluding this link
        double dq = ra(i, j) + 2.0 * p.beta / double(n) * (si + sj + 1.0);
        double bit = rng.uniform() < logistic(dq) ? 1.0 : 0.0;
        if (bit != cur) {
            adj(i, j) = adj(j, i) = bit;
            deg(i) += bit - cur;
            deg(j) += bit - cur;
            if (track) state ^= std::uint64_t(1) << k;
        }
        if (track && step >= out.burnin) out.state_counts(std::int64_t(state)) += 1.0;
    }
    out.terminal = adj;
    return out;
}

Eigen::VectorXd ergm_exact(const DyadicData& skel, const Recipe& r, const MeleParams& p) {
    const int n = skel.n;
    if (n > 5) throw std::invalid_argument("ergm_exact: exhaustive enumeration stops at n = 5");
    if (n < 2) throw std::invalid_argument("ergm_exact: need at least 2 agents");
    const int m = n * (n - 1) / 2;
    Eigen::MatrixXd ra = mele_ralpha(skel, r, p);

    std::vector<std::pair<int, int>> dyads;
    dyads.resize(size_t(m));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dyads[size_t(dyad_rank(i, j, n))] = {i, j};

    const std::int64_t states = std::int64_t(1) << m;
    Eigen::VectorXd logw(states);
    for (std::int64_t s = 0; s < states; ++s) {
        double q = 0.0;
        Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < m; ++k)
            if ((s >> k) & 1) {
                auto [i, j] = dyads[size_t(k)];
                q += ra(i, j);
                deg(i) += 1.0;
                deg(j) += 1.0;
            }
        q += p.beta / double(n) * deg.squaredNorm();
        logw(s) = q;
    }
    Eigen::ArrayXd w = (logw.array() - logw.maxCoeff()).exp();
    return (w / w.sum()).matrix();
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: distributions differ in length");
    return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace netecon
