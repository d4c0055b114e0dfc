#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "netecon/dyadic.hpp"
#include "netecon/linalg.hpp"
#include "netecon/rng.hpp"

using namespace netecon;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double phi_inv(double p) {
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (phi_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int poisson_draw(Rng& rng, double mean) {
    double l = std::exp(-mean), p = 1.0;
    int k = 0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > l);
    return k - 1;
}

// independent directed data with node covariate "x"
DyadicData independent_dgp(int n, Family f, const Recipe& r, const Eigen::VectorXd& theta,
                           std::uint64_t seed) {
    DyadicData d;
    d.n = n;
    d.directed = true;
    d.nodes.names = {"x"};
    d.nodes.x.resize(n, 1);
    Rng rng(seed, "test-dgp");
    for (int i = 0; i < n; ++i) d.nodes.x(i, 0) = rng.normal();
    auto feat = build_features(d, r);
    d.y.setZero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double x = 0;
            for (int k = 0; k < r.size(); ++k) x += feat[k](i, j) * theta(k);
            switch (f) {
                case Family::logit: d.y(i, j) = rng.uniform() < logistic(x); break;
                case Family::probit: d.y(i, j) = x + rng.normal() >= 0; break;
                case Family::poisson: d.y(i, j) = poisson_draw(rng, std::exp(x)); break;
                case Family::linear: d.y(i, j) = x + rng.normal(); break;
            }
        }
    return d;
}

Eigen::MatrixXd sbar_matrix(const DyadicData& d, const Recipe& r, Family f,
                            const Eigen::VectorXd& theta) {
    auto feat = build_features(d, r);
    Eigen::MatrixXd s = dyad_scores(d, feat, f, theta);
    const int n = d.n;
    Eigen::MatrixXd sb(r.size(), n * (n - 1) / 2);
    int c = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++c)
            sb.col(c) = 0.5 * (s.col(i * n + j) + s.col(j * n + i));
    return sb;
}

int pair_col(int i, int j, int n) {  // index of {i<j} in the i<j iteration order
    int c = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b, ++c)
            if (a == i && b == j) return c;
    return -1;
}

}  // namespace

TEST_CASE("recipe parsing and feature construction") {
    Recipe r = Recipe::parse("const + send(age) + absdiff(wealth) + cross(age, wealth) + match(grp)");
    REQUIRE(r.size() == 5);
    CHECK(r.labels()[0] == "const");
    CHECK(r.labels()[1] == "send(age)");
    CHECK(r.labels()[2] == "absdiff(wealth)");
    CHECK(r.labels()[3] == "cross(age,wealth)");
    CHECK(r.labels()[4] == "match(grp)");

    DyadicData d;
    d.n = 3;
    d.y = Eigen::MatrixXd::Zero(3, 3);
    d.nodes.names = {"age", "wealth", "grp"};
    d.nodes.x.resize(3, 3);
    d.nodes.x << 1, 10, 0,
                 2, 40, 1,
                 3, 20, 1;
    auto feat = build_features(d, r);
    CHECK(feat[0](0, 1) == 1.0);
    CHECK(feat[1](0, 1) == 1.0);   // sender age
    CHECK(feat[1](1, 0) == 2.0);
    CHECK(feat[2](0, 1) == 30.0);  // |10-40|
    CHECK(feat[3](2, 0) == 3.0 * 10.0);
    CHECK(feat[4](1, 2) == 1.0);
    CHECK(feat[4](0, 2) == 0.0);

    Recipe more = Recipe::parse("sum(age) + recv(age) + prod(age) + logdist(wealth)");
    auto feat2 = build_features(d, more);
    CHECK(feat2[0](0, 2) == 4.0);
    CHECK(feat2[1](0, 2) == 3.0);
    CHECK(feat2[2](1, 2) == 6.0);
    CHECK(feat2[3](0, 1) == doctest::Approx(std::log1p(30.0)).epsilon(1e-15));

    CHECK_THROWS(Recipe::parse(""));
    CHECK_THROWS(Recipe::parse("frob(x)"));
    CHECK_THROWS(Recipe::parse("send(x"));
    CHECK_THROWS(Recipe::parse("cross(x)"));
    CHECK_THROWS(Recipe::parse("send(x,y)"));
    CHECK_THROWS(build_features(d, Recipe::parse("send(height)")));
}

TEST_CASE("constant-only fits match closed forms for every family") {
    const int n = 9;
    DyadicData d;
    d.n = n;
    d.nodes.names = {};
    Rng rng(21, "const-fit");
    Recipe r = Recipe::parse("const");

    // binary outcome for logit / probit
    d.y.setZero(n, n);
    int ones = 0, total = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            d.y(i, j) = rng.bernoulli(0.3);
            ones += int(d.y(i, j));
            ++total;
        }
    double p = double(ones) / total;

    FitResult flog = fit_composite(d, r, Family::logit);
    CHECK(flog.converged);
    CHECK(flog.theta(0) == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-9));
    CHECK(flog.score.lpNorm<Eigen::Infinity>() <= 1e-12);

    FitResult fpro = fit_composite(d, r, Family::probit);
    CHECK(fpro.converged);
    CHECK(fpro.theta(0) == doctest::Approx(phi_inv(p)).epsilon(1e-8));

    // counts for poisson
    DyadicData dp = d;
    double ybar = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            dp.y(i, j) = double(rng.below(7));
            ybar += dp.y(i, j);
        }
    ybar /= total;
    FitResult fpoi = fit_composite(dp, r, Family::poisson);
    CHECK(fpoi.converged);
    CHECK(fpoi.theta(0) == doctest::Approx(std::log(ybar)).epsilon(1e-10));

    FitResult flin = fit_composite(dp, r, Family::linear);
    CHECK(flin.converged);
    CHECK(flin.theta(0) == doctest::Approx(ybar).epsilon(1e-12));
}

TEST_CASE("linear family reproduces least squares") {
    Recipe r = Recipe::parse("const + absdiff(x) + prod(x)");
    Eigen::VectorXd theta(3);
    theta << 0.5, -0.3, 0.2;
    DyadicData d = independent_dgp(25, Family::linear, r, theta, 99);
    auto feat = build_features(d, r);

    // stacked normal equations over ordered dyads
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) {
            if (i == j) continue;
            Eigen::Vector3d w(feat[0](i, j), feat[1](i, j), feat[2](i, j));
            xtx += w * w.transpose();
            xty += w * d.y(i, j);
        }
    Eigen::VectorXd ols = xtx.ldlt().solve(xty);

    FitResult fit = fit_composite(d, r, Family::linear);
    CHECK(fit.converged);
    CHECK((fit.theta - ols).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("fits recover independent data generating processes") {
    Recipe r = Recipe::parse("const + absdiff(x)");
    struct Case {
        Family f;
        double t0, t1;
    };
    for (Case c : {Case{Family::logit, -0.6, 0.7}, Case{Family::probit, -0.4, 0.45},
                   Case{Family::poisson, -0.3, 0.5}}) {
        Eigen::VectorXd theta(2);
        theta << c.t0, c.t1;
        DyadicData d = independent_dgp(150, c.f, r, theta, 1234 + int(c.f));
        FitResult fit = fit_composite(d, r, c.f);
        REQUIRE(fit.converged);
        VarianceReport v = dyadic_variance(d, r, c.f, fit, "fg");
        for (int k = 0; k < 2; ++k) {
            CHECK(std::fabs(fit.theta(k) - theta(k)) <= 4.5 * v.se(k));
            CHECK(v.se(k) > 0);
        }
    }
}

TEST_CASE("score matrix matches finite differences of the likelihood") {
    Recipe r = Recipe::parse("const + prod(x)");
    Eigen::VectorXd theta(2);
    theta << 0.2, -0.4;
    DyadicData d = independent_dgp(7, Family::poisson, r, theta, 5);
    auto feat = build_features(d, r);

    Eigen::VectorXd at(2);
    at << 0.05, 0.1;  // not the optimum
    Eigen::MatrixXd s = dyad_scores(d, feat, Family::poisson, at);

    auto loglik = [&](const Eigen::VectorXd& th) {
        double tot = 0;
        for (int i = 0; i < d.n; ++i)
            for (int j = 0; j < d.n; ++j) {
                if (i == j) continue;
                double x = feat[0](i, j) * th(0) + feat[1](i, j) * th(1);
                tot += d.y(i, j) * x - std::exp(x) - std::lgamma(d.y(i, j) + 1.0);
            }
        return tot;
    };
    double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd up = at, dn = at;
        up(k) += h;
        dn(k) -= h;
        double fd = (loglik(up) - loglik(dn)) / (2 * h);
        double sum = 0;
        for (int c = 0; c < d.n * d.n; ++c) sum += s(k, c);
        CHECK(sum == doctest::Approx(fd).epsilon(1e-6));
    }
    // per-dyad: a specific entry equals u * w
    double x01 = feat[0](0, 1) * at(0) + feat[1](0, 1) * at(1);
    double u01 = d.y(0, 1) - std::exp(x01);
    CHECK(s(1, 0 * d.n + 1) == doctest::Approx(u01 * feat[1](0, 1)).epsilon(1e-14));
}

TEST_CASE("variance components match brute-force triad and quadruple sums") {
    const int n = 13;
    Eigen::VectorXd theta(2);
    theta << -0.5, 0.6;
    DyadicData d = simulate_shared_agent_logit(n, theta, 0.8, 77);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d, r, Family::logit);
    REQUIRE(fit.converged);
    VarianceReport rep = dyadic_variance(d, r, Family::logit, fit, "fg");

    Eigen::MatrixXd sb = sbar_matrix(d, r, Family::logit, fit.theta);
    const int J = 2;
    double c2 = n * (n - 1) / 2.0;
    double c3 = n * (n - 1) * (n - 2) / 6.0;

    // own-dyad second moment
    Eigen::MatrixXd s23 = Eigen::MatrixXd::Zero(J, J);
    for (int c = 0; c < int(c2); ++c) s23 += sb.col(c) * sb.col(c).transpose();
    s23 /= c2;
    CHECK((s23 - rep.sigma23).lpNorm<Eigen::Infinity>() <= 1e-12);

    // shared-agent cross moment: all six ordered dyad pairs inside each triad
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(J, J);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                int ij = pair_col(i, j, n), ik = pair_col(i, k, n), jk = pair_col(j, k, n);
                Eigen::MatrixXd x = sb.col(ij) * sb.col(ik).transpose() +
                                    sb.col(ij) * sb.col(jk).transpose() +
                                    sb.col(ik) * sb.col(jk).transpose();
                s1 += x + x.transpose();
            }
    s1 /= 6.0 * c3;
    CHECK((s1 - rep.sigma1).lpNorm<Eigen::Infinity>() <= 1e-12);

    // quadruple sum over ordered pairs of dyads sharing at least one agent
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(J, J);
    int c1 = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++c1) {
            int cc2 = 0;
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l, ++cc2) {
                    bool share = (i == k || i == l || j == k || j == l);
                    if (share) quad += sb.col(c1) * sb.col(cc2).transpose();
                }
        }
    Eigen::MatrixXd fg_oracle = 2.0 * quad / ((n - 1.0) * c2);
    CHECK((fg_oracle - rep.omega_fg).lpNorm<Eigen::Infinity>() <= 1e-12);

    // jackknife recomputed from scratch
    Eigen::VectorXd sn = Eigen::VectorXd::Zero(J);
    for (int c = 0; c < int(c2); ++c) sn += sb.col(c);
    sn /= c2;
    double c2m1 = (n - 1.0) * (n - 2.0) / 2.0;
    Eigen::MatrixXd jk = Eigen::MatrixXd::Zero(J, J);
    for (int a = 0; a < n; ++a) {
        Eigen::VectorXd drop = Eigen::VectorXd::Zero(J);
        int c = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j, ++c)
                if (i != a && j != a) drop += sb.col(c);
        Eigen::VectorXd diff = drop / c2m1 - sn;
        jk += diff * diff.transpose();
    }
    jk *= (n - 2.0) * (n - 2.0) / n;
    CHECK((jk - rep.omega_jack).lpNorm<Eigen::Infinity>() <= 1e-12);

    // identities among the assembled estimators
    CHECK((rep.omega_jack_bc - rep.omega_fg).lpNorm<Eigen::Infinity>() <= 1e-10);
    Eigen::MatrixXd jk_id = 4.0 * rep.sigma1_jack - 4.0 * sn * sn.transpose();
    CHECK((jk_id - rep.omega_jack).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((rep.omega_limit - 4.0 * rep.sigma1).lpNorm<Eigen::Infinity>() == 0.0);
    Eigen::MatrixXd analog =
        4.0 * rep.sigma1 + (2.0 / (n - 1.0)) * (rep.sigma23 - 2.0 * rep.sigma1);
    CHECK((analog - rep.omega_analog).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("omega selector picks the requested estimator") {
    Eigen::VectorXd theta(2);
    theta << -0.8, 0.5;
    DyadicData d = simulate_shared_agent_logit(40, theta, 1.0, 3);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d, r, Family::logit);
    REQUIRE(fit.converged);
    for (std::string which : {"fg", "analog", "jackknife", "jackknife_bc", "limit"}) {
        VarianceReport v = dyadic_variance(d, r, Family::logit, fit, which);
        CHECK(v.omega_used == which);
        const Eigen::MatrixXd& want =
            which == "fg" ? v.omega_fg
            : which == "analog" ? v.omega_analog
            : which == "jackknife" ? v.omega_jack
            : which == "jackknife_bc" ? v.omega_jack_bc
                                      : v.omega_limit;
        CHECK((v.omega - want).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(v.se.allFinite());
    }
    CHECK_THROWS(dyadic_variance(d, r, Family::logit, fit, "huh"));
}

TEST_CASE("weighted bootstrap is deterministic and tracks the analytic spread") {
    Eigen::VectorXd theta(2);
    theta << -0.7, 0.6;
    DyadicData d = simulate_shared_agent_logit(70, theta, 1.0, 11);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d, r, Family::logit);
    REQUIRE(fit.converged);
    VarianceReport v = dyadic_variance(d, r, Family::logit, fit, "fg");

    BootstrapResult a = dyadic_bootstrap(d, r, Family::logit, fit, "weighted", 48, 9001);
    BootstrapResult b = dyadic_bootstrap(d, r, Family::logit, fit, "weighted", 48, 9001);
    CHECK(a.completed == 48);
    CHECK((a.replicates - b.replicates).lpNorm<Eigen::Infinity>() == 0.0);
    for (int k = 0; k < 2; ++k) {
        CHECK(a.se(k) > 0.3 * v.se(k));
        CHECK(a.se(k) < 3.0 * v.se(k));
        CHECK(a.ci_lo(k) < a.ci_hi(k));
    }

    BootstrapResult m = dyadic_bootstrap(d, r, Family::logit, fit, "weighted_multinomial", 48, 9001);
    CHECK(m.completed >= 40);
    for (int k = 0; k < 2; ++k) {
        CHECK(m.se(k) > 0.3 * v.se(k));
        CHECK(m.se(k) < 3.0 * v.se(k));
    }
    CHECK_THROWS(dyadic_bootstrap(d, r, Family::logit, fit, "nope", 5, 1));
}

TEST_CASE("pigeonhole bootstrap resamples agents and stays near the estimate") {
    Eigen::VectorXd theta(2);
    theta << -0.6, 0.4;
    DyadicData d = simulate_shared_agent_logit(50, theta, 0.8, 23);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d, r, Family::logit);
    REQUIRE(fit.converged);

    BootstrapResult a = dyadic_bootstrap(d, r, Family::logit, fit, "pigeonhole", 40, 5150);
    BootstrapResult b = dyadic_bootstrap(d, r, Family::logit, fit, "pigeonhole", 40, 5150);
    CHECK(a.completed >= 36);
    CHECK((a.replicates - b.replicates).lpNorm<Eigen::Infinity>() == 0.0);
    Eigen::RowVectorXd mean = a.replicates.colwise().mean();
    for (int k = 0; k < 2; ++k) {
        CHECK(a.se(k) > 0);
        CHECK(std::fabs(mean(k) - fit.theta(k)) < 0.5);
    }
}

TEST_CASE("menzel score bootstrap matches a direct replay and the analytic omega") {
    const int n = 60;
    Eigen::VectorXd theta(2);
    theta << -0.8, 0.5;
    DyadicData d = simulate_shared_agent_logit(n, theta, 1.0, 31);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d, r, Family::logit);
    REQUIRE(fit.converged);
    const std::uint64_t seed = 424242;
    BootstrapResult bs = dyadic_bootstrap(d, r, Family::logit, fit, "menzel", 300, seed);
    CHECK(bs.completed == 300);

    // replay replicate 0 from the raw ordered scores
    auto feat = build_features(d, r);
    Eigen::MatrixXd s = dyad_scores(d, feat, Family::logit, fit.theta);
    Eigen::MatrixXd se_i = Eigen::MatrixXd::Zero(2, n), sa_j = Eigen::MatrixXd::Zero(2, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            se_i.col(i) += s.col(i * n + j) / (n - 1.0);
            sa_j.col(j) += s.col(i * n + j) / (n - 1.0);
        }
    const double sq5 = std::sqrt(5.0);
    Rng rng(seed, "boot-menzel", 0);
    std::vector<int> idx(n);
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) {
        idx[a] = int(rng.below(n));
        v(a) = rng.uniform() < (sq5 + 1) / (2 * sq5) ? -(sq5 - 1) / 2 : (sq5 + 1) / 2;
    }
    Eigen::VectorXd want = Eigen::VectorXd::Zero(2);
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            if (a == c) continue;
            Eigen::VectorXd star = se_i.col(idx[a]) + sa_j.col(idx[c]);
            if (idx[a] != idx[c])
                star += v(a) * v(c) *
                        (s.col(idx[a] * n + idx[c]) - se_i.col(idx[a]) - sa_j.col(idx[c]));
            want += star;
        }
    want /= double(n) * (n - 1);
    CHECK((bs.replicates.row(0).transpose() - want).lpNorm<Eigen::Infinity>() <= 1e-12);

    // scale: N * cov of score replicates should sit near the analytic omega
    VarianceReport rep = dyadic_variance(d, r, Family::logit, fit, "fg");
    for (int k = 0; k < 2; ++k) {
        double ratio = bs.omega_boot(k, k) / rep.omega_fg(k, k);
        CHECK(ratio > 0.4);
        CHECK(ratio < 2.5);
        CHECK(bs.se(k) > 0);
    }
    // normal-theory interval identity
    Eigen::VectorXd width = bs.ci_hi - fit.theta;
    CHECK((width - 1.959963984540054 * bs.se).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("shared-agent simulator keeps the logistic marginal and symmetry") {
    Eigen::VectorXd theta(2);
    theta << -1.0, 0.6;
    DyadicData d = simulate_shared_agent_logit(400, theta, 0.6, 2024);
    CHECK(d.n == 400);
    CHECK_FALSE(d.directed);
    double ybar = 0, pbar = 0;
    int pairs = 0;
    for (int i = 0; i < d.n; ++i) {
        CHECK(d.y(i, i) == 0.0);
        for (int j = i + 1; j < d.n; ++j) {
            CHECK(d.y(i, j) == d.y(j, i));
            double idx = theta(0) + theta(1) * std::fabs(d.nodes.x(i, 0) - d.nodes.x(j, 0));
            ybar += d.y(i, j);
            pbar += logistic(idx);
            ++pairs;
        }
    }
    ybar /= pairs;
    pbar /= pairs;
    CHECK(std::fabs(ybar - pbar) < 0.02);

    // tau = 0 removes the dependence entirely: plain logit recovery
    DyadicData d0 = simulate_shared_agent_logit(150, theta, 0.0, 7);
    Recipe r = shared_agent_logit_recipe();
    FitResult fit = fit_composite(d0, r, Family::logit);
    REQUIRE(fit.converged);
    VarianceReport v = dyadic_variance(d0, r, Family::logit, fit, "fg");
    for (int k = 0; k < 2; ++k) CHECK(std::fabs(fit.theta(k) - theta(k)) <= 4.5 * v.se(k));
}
