#include "netecon/triad_probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "netecon/linalg.hpp"
#include "netecon/optim.hpp"
#include "netecon/rng.hpp"

namespace netecon {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

// Wichura's AS 241 (PPND16) inverse normal cdf, accurate to ~1e-15
double norm_quantile(double p) {
    double q = p - 0.5, r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) *
                        r +
                    4.5921953931549871457e4) *
                       r +
                   1.3731693765509461125e4) *
                      r +
                  1.9715909503065514427e3) *
                     r +
                 1.3314166789178437745e2) *
                    r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) *
                        r +
                    2.1213794301586595867e4) *
                       r +
                   5.3941960214247511077e3) *
                      r +
                  6.8718700749205790830e2) *
                     r +
                 4.2313330701600911252e1) *
                    r +
                1.0);
    }
    r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) *
                     r +
                 1.27045825245236838258e0) *
                    r +
                3.64784832476320460504e0) *
                   r +
               5.76949722146069140550e0) *
                  r +
              4.63033784615654529590e0) *
                 r +
             1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) *
                     r +
                 1.48103976427480074590e-1) *
                    r +
                6.89767334985100004550e-1) *
                   r +
               1.67638483018380384940e0) *
                  r +
              2.05319162663775882187e0) *
                 r +
             1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) *
                     r +
                 2.65321895265761230930e-2) *
                    r +
                2.96560571828504891230e-1) *
                   r +
               1.78482653991729133580e0) *
                  r +
              5.46378491116411436990e0) *
                 r +
             6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) *
                     r +
                 7.86869131145613259100e-4) *
                    r +
                1.48753612908506148525e-2) *
                   r +
               1.36929880922735805310e-1) *
                  r +
              5.99832206555887937690e-1) *
                 r +
             1.0);
    }
    return q < 0 ? -v : v;
}

double ghk_core(const Eigen::Matrix4d& L, const Eigen::Vector4d& upper,
                const std::array<int, 4>& y, int draws, Rng& rng) {
    const double qhi = std::nextafter(1.0, 0.0), qlo = std::nextafter(0.0, 1.0);
    double acc = 0.0;
    int used = 0, half = (draws + 1) / 2;
    for (int d = 0; d < half; ++d) {
        double u[3];
        for (double& v : u) v = rng.uniform();
        for (int anti = 0; anti < 2 && used < draws; ++anti) {
            double eta[3];
            double w = 1.0;
            for (int c = 0; c < 4; ++c) {
                double mu = 0.0;
                for (int m = 0; m < c; ++m) mu += L(c, m) * eta[m];
                double ct = norm_cdf((upper[c] - mu) / L(c, c));
                double lo = y[c] == 1 ? 0.0 : ct;
                double width = y[c] == 1 ? ct : 1.0 - ct;
                if (!(width > 0.0)) {
                    w = 0.0;
                    break;
                }
                w *= width;
                if (c < 3) {
                    double v = anti ? 1.0 - u[c] : u[c];
                    double q = std::min(std::max(lo + v * width, qlo), qhi);
                    eta[c] = norm_quantile(q);
                }
            }
            acc += w;
            ++used;
        }
    }
    return acc / double(used);
}

// stream id for the GHK draws of one ordering of one triad; keyed by the
// sorted triad so the symmetrized kernel is invariant to argument order
std::uint64_t slot_seed(std::uint64_t seed, int n, int a, int b, int c, int slot) {
    std::uint64_t key = ((std::uint64_t(a) * n + b) * n + c) * 3 + slot;
    return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (key + 1));
}

// dyads entering l* when `slot` picks which agent of the sorted triad is shared
void slot_dyads(int a, int b, int c, int slot, int dy[4][2]) {
    int sh = slot == 0 ? a : (slot == 1 ? b : c);
    int o1 = slot == 0 ? b : a;
    int o2 = slot == 2 ? b : c;
    dy[0][0] = sh, dy[0][1] = o1;
    dy[1][0] = o1, dy[1][1] = sh;
    dy[2][0] = sh, dy[2][1] = o2;
    dy[3][0] = o2, dy[3][1] = sh;
}

double dyad_index(const std::vector<Eigen::MatrixXd>& feat, const Eigen::VectorXd& theta,
                  int eta_dim, int i, int j) {
    double acc = 0.0;
    for (int t = 0; t < eta_dim; ++t) acc += theta(t) * feat[t](i, j);
    return acc;
}

double kernel_at(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                 const Eigen::VectorXd& theta, int eta_dim, int a, int b, int c, int draws,
                 std::uint64_t seed) {
    Eigen::Matrix4d sigma = sigma_matrix(theta(eta_dim), theta(eta_dim + 1),
                                         theta(eta_dim + 2), theta(eta_dim + 3));
    Eigen::LLT<Eigen::Matrix4d> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("triad probit: correlation matrix not positive definite");
    Eigen::Matrix4d L = llt.matrixL();

    double acc = 0.0;
    for (int slot = 0; slot < 3; ++slot) {
        int dy[4][2];
        slot_dyads(a, b, c, slot, dy);
        Eigen::Vector4d upper;
        std::array<int, 4> yy;
        for (int q = 0; q < 4; ++q) {
            upper(q) = dyad_index(feat, theta, eta_dim, dy[q][0], dy[q][1]);
            yy[q] = d.y(dy[q][0], dy[q][1]) > 0.5 ? 1 : 0;
        }
        Rng rng(slot_seed(seed, d.n, a, b, c, slot), "ghk");
        acc += std::log(std::max(ghk_core(L, upper, yy, draws, rng), 1e-300));
    }
    return acc / 3.0;
}

// average kernel over all sorted triads; index matrix built once per theta
double criterion(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                 const Eigen::VectorXd& theta, int eta_dim, int draws, std::uint64_t seed) {
    const int n = d.n;
    Eigen::Matrix4d sigma = sigma_matrix(theta(eta_dim), theta(eta_dim + 1),
                                         theta(eta_dim + 2), theta(eta_dim + 3));
    Eigen::LLT<Eigen::Matrix4d> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("triad probit: correlation matrix not positive definite");
    Eigen::Matrix4d L = llt.matrixL();

    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < eta_dim; ++t) U += theta(t) * feat[t];

    double total = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c) {
                double acc = 0.0;
                for (int slot = 0; slot < 3; ++slot) {
                    int dy[4][2];
                    slot_dyads(a, b, c, slot, dy);
                    Eigen::Vector4d upper;
                    std::array<int, 4> yy;
                    for (int q = 0; q < 4; ++q) {
                        upper(q) = U(dy[q][0], dy[q][1]);
                        yy[q] = d.y(dy[q][0], dy[q][1]) > 0.5 ? 1 : 0;
                    }
                    Rng rng(slot_seed(seed, n, a, b, c, slot), "ghk");
                    acc += std::log(std::max(ghk_core(L, upper, yy, draws, rng), 1e-300));
                }
                total += acc / 3.0;
            }
    double triads = double(n) * (n - 1) * (n - 2) / 6.0;
    return total / triads;
}

std::array<int, 3> unrank_triad(long long r, int n) {
    int a = 0;
    while (true) {
        long long cnt = (long long)(n - 1 - a) * (n - 2 - a) / 2;
        if (r < cnt) break;
        r -= cnt;
        ++a;
    }
    int b = a + 1;
    while (true) {
        long long cnt = n - 1 - b;
        if (r < cnt) break;
        r -= cnt;
        ++b;
    }
    return {a, b, b + 1 + int(r)};
}

int shared_count(const std::array<int, 3>& s, const std::array<int, 3>& t) {
    int cnt = 0;
    for (int v : s) cnt += std::count(t.begin(), t.end(), v);
    return cnt;
}

}  // namespace

Eigen::Matrix4d sigma_matrix(double zeta, double sa, double sb, double rho) {
    if (!std::isfinite(zeta) || !std::isfinite(sa) || !std::isfinite(sb) || !std::isfinite(rho))
        throw std::domain_error("sigma_matrix: parameters must be finite");
    double denom = 1.0 + sa * sa + sb * sb;
    double same = (zeta + 2.0 * rho * sa * sb) / denom;
    double ego = sa * sa / denom;
    double alter = sb * sb / denom;
    double mix = rho * sa * sb / denom;
    Eigen::Matrix4d m;
    m << 1.0, same, ego, mix,  //
        same, 1.0, mix, alter,  //
        ego, mix, 1.0, same,    //
        mix, alter, same, 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw std::domain_error("sigma_matrix: parameters outside the positive semidefinite region");
    return m;
}

double orthant_prob(const Eigen::Matrix4d& sigma, const Eigen::Vector4d& upper,
                    const std::array<int, 4>& y, int draws, std::uint64_t seed) {
    if (draws < 1) throw std::invalid_argument("orthant_prob: draws must be positive");
    Eigen::LLT<Eigen::Matrix4d> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("orthant_prob: covariance not positive definite");
    Eigen::Matrix4d L = llt.matrixL();
    Rng rng(seed, "ghk");
    return ghk_core(L, upper, y, draws, rng);
}

double triad_kernel(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                    const Eigen::VectorXd& theta, int i, int j, int k, int draws,
                    std::uint64_t seed) {
    int eta_dim = int(feat.size());
    if (theta.size() != eta_dim + 4)
        throw std::invalid_argument("triad_kernel: theta must stack (eta, zeta, sa, sb, rho)");
    std::array<int, 3> t{i, j, k};
    std::sort(t.begin(), t.end());
    if (t[0] < 0 || t[2] >= d.n || t[0] == t[1] || t[1] == t[2])
        throw std::invalid_argument("triad_kernel: indices must be three distinct agents");
    return kernel_at(d, feat, theta, eta_dim, t[0], t[1], t[2], draws, seed);
}

TriadProbitFit fit_triad_probit(const DyadicData& d, const Recipe& r,
                                const TriadProbitOptions& opt) {
    const int n = d.n;
    if (n < 3) throw std::invalid_argument("fit_triad_probit: need at least 3 agents");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && d.y(i, j) != 0.0 && d.y(i, j) != 1.0)
                throw std::invalid_argument("fit_triad_probit: outcomes must be binary");
    auto feat = build_features(d, r);
    const int eta_dim = r.size(), dim = eta_dim + 4;

    Eigen::VectorXd th0;
    if (opt.init.size() == dim) {
        th0 = opt.init;
    } else if (opt.init.size() != 0) {
        throw std::invalid_argument("fit_triad_probit: init has the wrong length");
    } else {
        auto probit = fit_composite(d, r, Family::probit);
        th0 = Eigen::VectorXd(dim);
        th0.head(eta_dim) = probit.theta;
        th0.tail(4).setConstant(0.1);
    }

    const double inf = std::numeric_limits<double>::infinity();
    ScalarFn obj = [&](const Eigen::VectorXd& th) {
        try {
            double v = criterion(d, feat, th, eta_dim, opt.draws, opt.seed);
            return std::isfinite(v) ? -v : inf;
        } catch (const std::domain_error&) {
            return inf;
        }
    };
    NelderMeadOptions nm;
    nm.max_iter = opt.max_iter;
    nm.tol = opt.tol;
    nm.step = opt.nm_step;
    auto res = nelder_mead(obj, th0, nm);

    TriadProbitFit out;
    out.theta = res.x;
    out.eta_dim = eta_dim;
    out.loglik = -res.value;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.labels = r.labels();
    out.labels.insert(out.labels.end(), {"zeta", "sigma_a", "sigma_b", "rho"});

    auto crit_safe = [&](const Eigen::VectorXd& th) {
        try {
            return criterion(d, feat, th, eta_dim, opt.draws, opt.seed);
        } catch (const std::domain_error&) {
            return -inf;
        }
    };
    out.gamma = fd_hessian(crit_safe, out.theta, opt.fd_step);

    // score pool: kernel gradients for a subsample of triads; covariances of
    // centered scores over pairs sharing 1, 2, or all 3 agents estimate the
    // Sigma_q entering the variance of the criterion score
    long long total = (long long)n * (n - 1) * (n - 2) / 6;
    std::vector<long long> ranks;
    if (total <= opt.sigma_pool) {
        ranks.resize(size_t(total));
        for (long long i = 0; i < total; ++i) ranks[size_t(i)] = i;
    } else {
        std::set<long long> chosen;
        Rng rp(opt.seed, "triad-pool");
        while (int(chosen.size()) < opt.sigma_pool)
            chosen.insert((long long)rp.below(std::uint64_t(total)));
        ranks.assign(chosen.begin(), chosen.end());
    }
    const int K = int(ranks.size());
    std::vector<std::array<int, 3>> pool(K);
    Eigen::MatrixXd S(K, dim);
    for (int p = 0; p < K; ++p) {
        pool[p] = unrank_triad(ranks[size_t(p)], n);
        auto [a, b, c] = pool[p];
        S.row(p) = fd_gradient(
            [&](const Eigen::VectorXd& th) {
                return kernel_at(d, feat, th, eta_dim, a, b, c, opt.draws, opt.seed);
            },
            out.theta, opt.fd_step);
    }
    Eigen::RowVectorXd sbar = S.colwise().mean();
    Eigen::MatrixXd C = S.rowwise() - sbar;
    out.pool = K;
    out.sigma3 = symmetrize(C.transpose() * C / double(K));
    out.sigma1 = Eigen::MatrixXd::Zero(dim, dim);
    out.sigma2 = Eigen::MatrixXd::Zero(dim, dim);
    for (int p = 0; p < K; ++p)
        for (int q = p + 1; q < K; ++q) {
            int sh = shared_count(pool[p], pool[q]);
            if (sh != 1 && sh != 2) continue;
            Eigen::MatrixXd cross = C.row(p).transpose() * C.row(q);
            if (sh == 1) {
                out.sigma1 += cross + cross.transpose();
                ++out.pairs1;
            } else {
                out.sigma2 += cross + cross.transpose();
                ++out.pairs2;
            }
        }
    if (out.pairs1) out.sigma1 /= 2.0 * out.pairs1;
    if (out.pairs2) out.sigma2 /= 2.0 * out.pairs2;

    Eigen::MatrixXd gp = pinv(out.gamma);
    out.vcov_limit = symmetrize(9.0 * gp * out.sigma1 * gp.transpose());
    double n1 = n - 1.0, n2 = n - 2.0;
    Eigen::MatrixXd vs = 9.0 * out.sigma1 + (18.0 / n1) * (out.sigma2 - 2.0 * out.sigma1) +
                         (6.0 / (n1 * n2)) * (out.sigma3 + 3.0 * out.sigma1);
    out.vcov_all = symmetrize(gp * vs * gp.transpose());
    out.se_limit = (out.vcov_limit.diagonal() / double(n)).cwiseMax(0.0).cwiseSqrt();
    out.se_all = (out.vcov_all.diagonal() / double(n)).cwiseMax(0.0).cwiseSqrt();
    return out;
}

AsfFit pvr_from_triad(const TriadProbitFit& tp, const Recipe& r, const PolicyData& d) {
    if (r.size() != tp.eta_dim)
        throw std::invalid_argument("pvr_from_triad: recipe does not match the fitted index");
    AsfFit out;
    out.recipe = r;
    out.family = Family::probit;
    out.fit.theta = tp.theta.head(tp.eta_dim);
    out.fit.loglik = tp.loglik;
    out.fit.score = Eigen::VectorXd::Zero(tp.eta_dim);
    out.fit.hessian = tp.gamma.topLeftCorner(tp.eta_dim, tp.eta_dim);
    out.fit.converged = tp.converged;
    out.fit.iterations = tp.iterations;
    out.fit.family = Family::probit;
    out.fit.labels = r.labels();
    out.var.vtheta = tp.vcov_limit.topLeftCorner(tp.eta_dim, tp.eta_dim);
    out.var.se = (out.var.vtheta.diagonal() / double(d.dyads.n)).cwiseMax(0.0).cwiseSqrt();
    out.var.omega_used = "triad_limit";

    auto feat = build_features(d.dyads, r);
    const int n = d.dyads.n, J = r.size();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(J, J);
    Eigen::VectorXd v(J);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (int k = 0; k < J; ++k) v(k) = feat[k](i, j);
            gram.noalias() += v * v.transpose();
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    out.design_rank = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > 1e-9 * top) ++out.design_rank;
    out.identified = out.design_rank == J;
    return out;
}

DyadicData simulate_cre_probit(int n, const Recipe& r, const CreDgpParams& p,
                               std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("simulate_cre_probit: need at least 2 agents");
    if (p.eta_struct.size() != r.size())
        throw std::invalid_argument("simulate_cre_probit: eta_struct does not match the recipe");
    if (std::abs(p.zeta) > 1.0 || std::abs(p.rho) > 1.0 || p.sa < 0.0 || p.sb < 0.0)
        throw std::invalid_argument("simulate_cre_probit: invalid variance parameters");

    DyadicData d;
    d.n = n;
    d.directed = true;
    d.nodes.x = Eigen::MatrixXd(n, 1);
    d.nodes.names = {"x"};
    Rng rx(seed, "cre-x");
    for (int i = 0; i < n; ++i) d.nodes.x(i, 0) = rx.normal();

    Eigen::VectorXd A(n), B(n);
    Rng ra(seed, "cre-agent");
    double rc = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    for (int i = 0; i < n; ++i) {
        double za = ra.normal(), zb = ra.normal();
        A(i) = p.sa * za;
        B(i) = p.sb * (p.rho * za + rc * zb);
    }

    auto feat = build_features(d, r);
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < r.size(); ++t) U += p.eta_struct(t) * feat[t];

    d.y = Eigen::MatrixXd::Zero(n, n);
    Rng re(seed, "cre-eps");
    double zc = std::sqrt(std::max(0.0, 1.0 - p.zeta * p.zeta));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double z1 = re.normal(), z2 = re.normal();
            double eij = z1, eji = p.zeta * z1 + zc * z2;
            d.y(i, j) = U(i, j) + A(i) + B(j) + eij >= 0.0 ? 1.0 : 0.0;
            d.y(j, i) = U(j, i) + A(j) + B(i) + eji >= 0.0 ? 1.0 : 0.0;
        }
    return d;
}

}  // namespace netecon
