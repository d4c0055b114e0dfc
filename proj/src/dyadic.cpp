#include "netecon/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netecon/linalg.hpp"
#include "netecon/rng.hpp"

namespace netecon {

Family family_from_string(const std::string& s) {
    if (s == "poisson") return Family::poisson;
    if (s == "logit") return Family::logit;
    if (s == "probit") return Family::probit;
    if (s == "linear" || s == "gaussian") return Family::linear;
    throw std::invalid_argument("unknown family: " + s);
}

std::string family_name(Family f) {
    switch (f) {
        case Family::poisson: return "poisson";
        case Family::logit: return "logit";
        case Family::probit: return "probit";
        case Family::linear: return "linear";
    }
    return "?";
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }
double norm_pdf(double x) { return 0.39894228040143267794 * std::exp(-0.5 * x * x); }

double fam_loglik(Family f, double y, double x) {
    switch (f) {
        case Family::poisson: return y * x - std::exp(x) - std::lgamma(y + 1.0);
        case Family::logit: {
            double lse = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
            return y * x - lse;
        }
        case Family::probit: {
            double z = std::clamp(x, -37.0, 37.0);
            return y > 0.5 ? std::log(norm_cdf(z)) : std::log(norm_cdf(-z));
        }
        case Family::linear: return -0.5 * (y - x) * (y - x);
    }
    return 0;
}

double fam_score(Family f, double y, double x) {  // dl / dindex
    switch (f) {
        case Family::poisson: return y - std::exp(x);
        case Family::logit: return y - 1.0 / (1.0 + std::exp(-x));
        case Family::probit: {
            double z = std::clamp(x, -37.0, 37.0);
            return y > 0.5 ? norm_pdf(z) / norm_cdf(z) : -norm_pdf(z) / norm_cdf(-z);
        }
        case Family::linear: return y - x;
    }
    return 0;
}

double fam_neg_hess(Family f, double y, double x) {  // -d2l / dindex2
    switch (f) {
        case Family::poisson: return std::exp(x);
        case Family::logit: {
            double p = 1.0 / (1.0 + std::exp(-x));
            return p * (1 - p);
        }
        case Family::probit: {
            double z = std::clamp(x, -37.0, 37.0);
            double u = fam_score(f, y, z);
            return u * (z + u);  // exact for binary y
        }
        case Family::linear: return 1.0;
    }
    return 0;
}

}  // namespace

double family_mean(Family f, double index) {
    switch (f) {
        case Family::poisson: return std::exp(index);
        case Family::logit: return 1.0 / (1.0 + std::exp(-index));
        case Family::probit: return norm_cdf(index);
        case Family::linear: return index;
    }
    return 0;
}

int NodeData::col(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return int(k);
    return -1;
}

DyadicData DyadicData::from_graph(const Graph& g, NodeData nodes) {
    DyadicData d;
    d.n = g.n();
    d.directed = false;
    d.y = Eigen::MatrixXd::Zero(d.n, d.n);
    for (auto [i, j] : g.edges()) d.y(i, j) = d.y(j, i) = 1.0;
    d.nodes = std::move(nodes);
    return d;
}

std::string Term::label() const {
    switch (kind) {
        case Kind::constant: return "const";
        case Kind::send: return "send(" + a + ")";
        case Kind::recv: return "recv(" + a + ")";
        case Kind::sum: return "sum(" + a + ")";
        case Kind::absdiff: return "absdiff(" + a + ")";
        case Kind::prod: return "prod(" + a + ")";
        case Kind::cross: return "cross(" + a + "," + b + ")";
        case Kind::match: return "match(" + a + ")";
        case Kind::logdist: return "logdist(" + a + ")";
    }
    return "?";
}

Recipe Recipe::parse(const std::string& text) {
    Recipe r;
    std::string tok;
    auto flush = [&] {
        // trim
        std::size_t b = tok.find_first_not_of(" \t");
        std::size_t e = tok.find_last_not_of(" \t");
        if (b == std::string::npos) {
            tok.clear();
            return;
        }
        std::string t = tok.substr(b, e - b + 1);
        tok.clear();
        Term term;
        if (t == "const" || t == "1") {
            term.kind = Term::Kind::constant;
            r.terms.push_back(term);
            return;
        }
        auto lp = t.find('(');
        if (lp == std::string::npos || t.back() != ')')
            throw std::invalid_argument("bad recipe term: " + t);
        std::string fn = t.substr(0, lp);
        std::string args = t.substr(lp + 1, t.size() - lp - 2);
        auto comma = args.find(',');
        auto strip = [](std::string s) {
            std::size_t b2 = s.find_first_not_of(" \t");
            std::size_t e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        term.a = strip(comma == std::string::npos ? args : args.substr(0, comma));
        if (comma != std::string::npos) term.b = strip(args.substr(comma + 1));
        if (fn == "send") term.kind = Term::Kind::send;
        else if (fn == "recv") term.kind = Term::Kind::recv;
        else if (fn == "sum") term.kind = Term::Kind::sum;
        else if (fn == "absdiff") term.kind = Term::Kind::absdiff;
        else if (fn == "prod") term.kind = Term::Kind::prod;
        else if (fn == "cross") term.kind = Term::Kind::cross;
        else if (fn == "match") term.kind = Term::Kind::match;
        else if (fn == "logdist") term.kind = Term::Kind::logdist;
        else throw std::invalid_argument("unknown recipe function: " + fn);
        if (term.a.empty()) throw std::invalid_argument("recipe term needs a covariate: " + t);
        if ((term.kind == Term::Kind::cross) != !term.b.empty())
            throw std::invalid_argument("wrong arity in recipe term: " + t);
        r.terms.push_back(term);
    };
    for (char c : text) {
        if (c == '+') flush();
        else tok.push_back(c);
    }
    flush();
    if (r.terms.empty()) throw std::invalid_argument("empty recipe");
    return r;
}

std::vector<std::string> Recipe::labels() const {
    std::vector<std::string> out;
    for (const auto& t : terms) out.push_back(t.label());
    return out;
}

std::vector<Eigen::MatrixXd> build_features(const DyadicData& d, const Recipe& r) {
    const int n = d.n;
    std::vector<Eigen::MatrixXd> feat;
    feat.reserve(r.terms.size());
    for (const auto& t : r.terms) {
        Eigen::MatrixXd m(n, n);
        if (t.kind == Term::Kind::constant) {
            m.setOnes();
            feat.push_back(std::move(m));
            continue;
        }
        int ca = d.nodes.col(t.a);
        if (ca < 0) throw std::invalid_argument("unknown covariate: " + t.a);
        int cb = ca;
        if (t.kind == Term::Kind::cross) {
            cb = d.nodes.col(t.b);
            if (cb < 0) throw std::invalid_argument("unknown covariate: " + t.b);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double xi = d.nodes.x(i, ca), xj = d.nodes.x(j, ca);
                double v = 0;
                switch (t.kind) {
                    case Term::Kind::send: v = xi; break;
                    case Term::Kind::recv: v = xj; break;
                    case Term::Kind::sum: v = xi + xj; break;
                    case Term::Kind::absdiff: v = std::fabs(xi - xj); break;
                    case Term::Kind::prod: v = xi * xj; break;
                    case Term::Kind::cross: v = xi * d.nodes.x(j, cb); break;
                    case Term::Kind::match: v = xi == xj ? 1.0 : 0.0; break;
                    case Term::Kind::logdist: v = std::log1p(std::fabs(xi - xj)); break;
                    case Term::Kind::constant: break;
                }
                m(i, j) = v;
            }
        feat.push_back(std::move(m));
    }
    return feat;
}

namespace {

struct Objective {
    const DyadicData& d;
    const std::vector<Eigen::MatrixXd>& feat;
    Family f;
    const Eigen::MatrixXd* wgt;  // optional per-ordered-dyad weights

    int dim() const { return int(feat.size()); }

    // loglik, score, hessian at theta, averaged over weighted ordered dyads
    void eval(const Eigen::VectorXd& th, double* ll, Eigen::VectorXd* g,
              Eigen::MatrixXd* h) const {
        const int n = d.n, J = dim();
        double total = 0, wsum = 0;
        if (g) g->setZero(J);
        if (h) h->setZero(J, J);
        Eigen::VectorXd w(J);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double weight = wgt ? (*wgt)(i, j) : 1.0;
                if (weight == 0) { wsum += 0; continue; }
                double x = 0;
                for (int k = 0; k < J; ++k) {
                    w(k) = feat[k](i, j);
                    x += w(k) * th(k);
                }
                double y = d.y(i, j);
                total += weight * fam_loglik(f, y, x);
                if (g) *g += weight * fam_score(f, y, x) * w;
                if (h) h->noalias() -= weight * fam_neg_hess(f, y, x) * w * w.transpose();
                wsum += weight;
            }
        if (wsum <= 0) wsum = 1;
        if (ll) *ll = total / wsum;
        if (g) *g /= wsum;
        if (h) *h /= wsum;
    }
};

FitResult newton_fit(const Objective& obj, const FitOptions& opt) {
    const int J = obj.dim();
    FitResult out;
    out.family = obj.f;
    Eigen::VectorXd th = opt.init.size() == J ? opt.init : Eigen::VectorXd::Zero(J);
    double ll;
    Eigen::VectorXd g(J);
    Eigen::MatrixXd h(J, J);
    obj.eval(th, &ll, &g, &h);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= opt.tol) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd dir = pinv(-h) * g;
        if (!dir.allFinite()) break;
        double step = 1.0;
        bool improved = false;
        for (int halve = 0; halve < 45; ++halve) {
            Eigen::VectorXd cand = th + step * dir;
            double llc;
            obj.eval(cand, &llc, nullptr, nullptr);
            if (std::isfinite(llc) && llc >= ll - 1e-14 * (1 + std::fabs(ll))) {
                th = cand;
                improved = llc > ll;
                ll = llc;
                break;
            }
            step *= 0.5;
        }
        obj.eval(th, &ll, &g, &h);
        if (!improved && g.lpNorm<Eigen::Infinity>() <= opt.tol) {
            out.converged = true;
            ++it;
            break;
        }
        if (!improved) break;  // stalled
    }
    if (g.lpNorm<Eigen::Infinity>() <= opt.tol) out.converged = true;
    out.theta = th;
    out.loglik = ll;
    out.score = g;
    out.hessian = h;
    out.iterations = it;
    return out;
}

}  // namespace

FitResult fit_composite(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                        const std::vector<std::string>& labels, Family f, const FitOptions& opt) {
    Objective obj{d, feat, f, nullptr};
    FitResult out = newton_fit(obj, opt);
    out.labels = labels;
    return out;
}

FitResult fit_composite(const DyadicData& d, const Recipe& r, Family f, const FitOptions& opt) {
    return fit_composite(d, build_features(d, r), r.labels(), f, opt);
}

Eigen::MatrixXd dyad_scores(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                            Family f, const Eigen::VectorXd& theta) {
    const int n = d.n, J = int(feat.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(J, std::size_t(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double x = 0;
            for (int k = 0; k < J; ++k) x += feat[k](i, j) * theta(k);
            double u = fam_score(f, d.y(i, j), x);
            for (int k = 0; k < J; ++k) s(k, std::size_t(i) * n + j) = u * feat[k](i, j);
        }
    return s;
}

VarianceReport dyadic_variance(const DyadicData& d, const std::vector<Eigen::MatrixXd>& feat,
                               Family f, const FitResult& fit, const std::string& omega) {
    const int n = d.n;
    const int J = int(feat.size());
    Eigen::MatrixXd s = dyad_scores(d, feat, f, fit.theta);

    const long long npairs = (long long)n * (n - 1) / 2;
    Eigen::MatrixXd sbar(J, npairs);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(J, n);
    long long c = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++c) {
            sbar.col(c) = 0.5 * (s.col(std::size_t(i) * n + j) + s.col(std::size_t(j) * n + i));
            b.col(i) += sbar.col(c);
            b.col(j) += sbar.col(c);
        }

    double c2 = double(npairs);
    double c3 = double(n) * (n - 1) * (n - 2) / 6.0;
    Eigen::MatrixXd ss = sbar * sbar.transpose();
    Eigen::MatrixXd bb = b * b.transpose();

    VarianceReport rep;
    rep.sigma23 = ss / c2;
    rep.sigma1 = (bb - 2.0 * ss) / (6.0 * c3);
    rep.sigma1_jack = bb / (double(n) * (n - 1.0) * (n - 1.0));
    rep.omega_analog = 4.0 * rep.sigma1 + (2.0 / (n - 1.0)) * (rep.sigma23 - 2.0 * rep.sigma1);
    rep.omega_fg = (2.0 * rep.sigma23 + 4.0 * (n - 2.0) * rep.sigma1) / (n - 1.0);
    rep.omega_limit = 4.0 * rep.sigma1;

    Eigen::VectorXd sn = sbar.rowwise().sum() / c2;
    double c2m1 = double(n - 1) * (n - 2) / 2.0;
    Eigen::MatrixXd jk = Eigen::MatrixXd::Zero(J, J);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd di = (c2 * sn - b.col(i)) / c2m1 - sn;
        jk.noalias() += di * di.transpose();
    }
    rep.omega_jack = (double(n - 2) * (n - 2) / double(n)) * jk;
    rep.omega_jack_bc = rep.omega_jack - (2.0 / (n - 1.0)) * rep.sigma23;

    if (omega == "fg") rep.omega = rep.omega_fg;
    else if (omega == "analog") rep.omega = rep.omega_analog;
    else if (omega == "jackknife") rep.omega = rep.omega_jack;
    else if (omega == "jackknife_bc") rep.omega = rep.omega_jack_bc;
    else if (omega == "limit") rep.omega = rep.omega_limit;
    else throw std::invalid_argument("unknown omega selector: " + omega);
    rep.omega_used = omega;

    const Eigen::MatrixXd& gamma = fit.hessian;
    rep.vtheta = pinv(gamma.transpose() * pinv(rep.omega) * gamma);
    rep.se = (rep.vtheta.diagonal() / double(n)).cwiseMax(0.0).cwiseSqrt();
    return rep;
}

VarianceReport dyadic_variance(const DyadicData& d, const Recipe& r, Family f,
                               const FitResult& fit, const std::string& omega) {
    return dyadic_variance(d, build_features(d, r), f, fit, omega);
}

// ---- bootstraps ---------------------------------------------------------------

namespace {

Eigen::VectorXd column_sd(const Eigen::MatrixXd& m) {
    Eigen::VectorXd mu = m.colwise().mean();
    Eigen::VectorXd out(m.cols());
    for (int k = 0; k < m.cols(); ++k) {
        double s = (m.col(k).array() - mu(k)).square().sum();
        out(k) = std::sqrt(s / std::max<int>(1, int(m.rows()) - 1));
    }
    return out;
}

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0;
    double idx = p * (v.size() - 1);
    std::size_t lo = std::size_t(idx);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = idx - lo;
    return v[lo] * (1 - frac) + v[hi] * frac;
}

}  // namespace

BootstrapResult dyadic_bootstrap(const DyadicData& d, const Recipe& r, Family f,
                                 const FitResult& fit, const std::string& method, int b,
                                 std::uint64_t seed) {
    const int n = d.n, J = r.size();
    BootstrapResult out;
    out.method = method;
    out.requested = b;
    auto feat = build_features(d, r);

    if (method == "weighted" || method == "weighted_multinomial") {
        bool multinomial = method == "weighted_multinomial";
        std::vector<Eigen::VectorXd> thetas;
        for (int rep = 0; rep < b; ++rep) {
            Rng rng(seed, "boot-weighted", std::uint64_t(rep));
            Eigen::VectorXd v(n);
            if (multinomial) {
                v.setZero();
                for (int t = 0; t < n; ++t) v(int(rng.below(n))) += 1.0;
            } else {
                for (int i = 0; i < n; ++i) v(i) = rng.exponential();
            }
            Eigen::MatrixXd wgt(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) wgt(i, j) = i == j ? 0.0 : v(i) * v(j);
            Objective obj{d, feat, f, &wgt};
            FitOptions o;
            o.init = fit.theta;
            o.tol = 1e-10;
            FitResult fr = newton_fit(obj, o);
            if (fr.converged) thetas.push_back(fr.theta);
        }
        out.completed = int(thetas.size());
        out.replicates.resize(out.completed, J);
        for (int i = 0; i < out.completed; ++i) out.replicates.row(i) = thetas[i].transpose();
    } else if (method == "pigeonhole") {
        std::vector<Eigen::VectorXd> thetas;
        for (int rep = 0; rep < b; ++rep) {
            Rng rng(seed, "boot-pigeonhole", std::uint64_t(rep));
            std::vector<int> idx(n);
            for (int a = 0; a < n; ++a) idx[a] = int(rng.below(n));
            DyadicData db;
            db.n = n;
            db.directed = d.directed;
            db.y.resize(n, n);
            db.y.setZero();
            db.nodes.names = d.nodes.names;
            if (d.nodes.x.size()) {
                db.nodes.x.resize(n, d.nodes.x.cols());
                for (int a = 0; a < n; ++a) db.nodes.x.row(a) = d.nodes.x.row(idx[a]);
            }
            for (int a = 0; a < n; ++a)
                for (int c = 0; c < n; ++c) {
                    if (a == c) continue;
                    if (idx[a] != idx[c]) {
                        db.y(a, c) = d.y(idx[a], idx[c]);
                    } else {
                        int k, l;
                        do {
                            k = int(rng.below(n));
                            l = int(rng.below(n));
                        } while (k == l);
                        db.y(a, c) = d.y(k, l);
                    }
                }
            FitOptions o;
            o.init = fit.theta;
            o.tol = 1e-10;
            FitResult fr = fit_composite(db, r, f, o);
            if (fr.converged) thetas.push_back(fr.theta);
        }
        out.completed = int(thetas.size());
        out.replicates.resize(out.completed, J);
        for (int i = 0; i < out.completed; ++i) out.replicates.row(i) = thetas[i].transpose();
    } else if (method == "menzel") {
        Eigen::MatrixXd s = dyad_scores(d, feat, f, fit.theta);
        Eigen::MatrixXd se_i = Eigen::MatrixXd::Zero(J, n), sa_j = Eigen::MatrixXd::Zero(J, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                se_i.col(i) += s.col(std::size_t(i) * n + j);
                sa_j.col(j) += s.col(std::size_t(i) * n + j);
            }
        se_i /= double(n - 1);
        sa_j /= double(n - 1);

        const double sq5 = std::sqrt(5.0);
        const double wlo = -(sq5 - 1) / 2, whi = (sq5 + 1) / 2;
        const double plo = (sq5 + 1) / (2 * sq5);

        out.replicates.resize(b, J);
        for (int rep = 0; rep < b; ++rep) {
            Rng rng(seed, "boot-menzel", std::uint64_t(rep));
            std::vector<int> idx(n);
            Eigen::VectorXd v(n);
            for (int a = 0; a < n; ++a) {
                idx[a] = int(rng.below(n));
                v(a) = rng.uniform() < plo ? wlo : whi;
            }
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(J);
            for (int a = 0; a < n; ++a)
                for (int c = 0; c < n; ++c) {
                    if (a == c) continue;
                    acc += se_i.col(idx[a]) + sa_j.col(idx[c]);
                    if (idx[a] != idx[c]) {
                        Eigen::VectorXd e = s.col(std::size_t(idx[a]) * n + idx[c]) -
                                            se_i.col(idx[a]) - sa_j.col(idx[c]);
                        acc += v(a) * v(c) * e;
                    }
                }
            out.replicates.row(rep) = (acc / (double(n) * (n - 1))).transpose();
        }
        out.completed = b;
        Eigen::RowVectorXd mu = out.replicates.colwise().mean();
        Eigen::MatrixXd centered = out.replicates.rowwise() - mu;
        out.omega_boot = double(n) * (centered.transpose() * centered) / double(b);
        Eigen::MatrixXd vtheta =
            pinv(fit.hessian.transpose() * pinv(out.omega_boot) * fit.hessian);
        out.se = (vtheta.diagonal() / double(n)).cwiseMax(0.0).cwiseSqrt();
        out.ci_lo = fit.theta - 1.959963984540054 * out.se;
        out.ci_hi = fit.theta + 1.959963984540054 * out.se;
        return out;
    } else {
        throw std::invalid_argument("unknown bootstrap method: " + method);
    }

    // theta-replicate methods: spread of replicates gives se and percentile CI
    out.se.resize(J);
    out.ci_lo.resize(J);
    out.ci_hi.resize(J);
    if (out.completed >= 2) {
        out.se = column_sd(out.replicates);
        for (int k = 0; k < J; ++k) {
            std::vector<double> col(out.replicates.col(k).data(),
                                    out.replicates.col(k).data() + out.completed);
            out.ci_lo(k) = percentile(col, 0.025);
            out.ci_hi(k) = percentile(col, 0.975);
        }
    } else {
        out.se.setZero();
        out.ci_lo = fit.theta;
        out.ci_hi = fit.theta;
    }
    return out;
}

DyadicData simulate_shared_agent_logit(int n, const Eigen::VectorXd& theta, double tau,
                                       std::uint64_t seed) {
    if (theta.size() != 2) throw std::invalid_argument("theta must be (const, absdiff)");
    DyadicData d;
    d.n = n;
    d.directed = false;
    d.y = Eigen::MatrixXd::Zero(n, n);
    d.nodes.names = {"x"};
    d.nodes.x.resize(n, 1);
    Rng xr(seed, "dgp-x"), ar(seed, "dgp-agent"), er(seed, "dgp-eps");
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) {
        d.nodes.x(i, 0) = xr.normal();
        a(i) = tau * ar.normal();
    }
    double scale = std::sqrt(2 * tau * tau + 1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double z = (a(i) + a(j) + er.normal()) / scale;
            double pz = std::clamp(norm_cdf(z), 1e-15, 1 - 1e-15);
            double v = std::log(pz / (1 - pz));  // logistic marginal
            double index = theta(0) + theta(1) * std::fabs(d.nodes.x(i, 0) - d.nodes.x(j, 0));
            if (index >= v) d.y(i, j) = d.y(j, i) = 1.0;
        }
    return d;
}

Recipe shared_agent_logit_recipe() { return Recipe::parse("const + absdiff(x)"); }

}  // namespace netecon
