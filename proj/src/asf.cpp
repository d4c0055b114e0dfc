#include "netecon/asf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "netecon/linalg.hpp"
#include "netecon/rng.hpp"

namespace netecon {

namespace {

double mean_deriv(Family f, double index) {  // d family_mean / d index
    switch (f) {
        case Family::poisson: return std::exp(index);
        case Family::logit: {
            double p = 1.0 / (1.0 + std::exp(-index));
            return p * (1 - p);
        }
        case Family::probit: {
            double z = std::clamp(index, -37.0, 37.0);
            return 0.39894228040143267794 * std::exp(-0.5 * z * z);
        }
        case Family::linear: return 1.0;
    }
    return 0;
}

// nodes grouped by their proxy row (all columns except the treatments)
struct OverlapInfo {
    double min_product = 1.0;
    bool discrete = true;
    std::vector<std::string> failing;  // cells with propensity product below kappa
};

OverlapInfo overlap_scan(const PolicyData& d, double w, double x, double kappa) {
    OverlapInfo info;
    const auto& nodes = d.dyads.nodes;
    int cw = nodes.col(d.wcol), cx = nodes.col(d.xcol);
    if (cw < 0 || cx < 0) throw std::invalid_argument("treatment column missing");
    std::vector<int> proxy_cols;
    for (int k = 0; k < int(nodes.names.size()); ++k)
        if (k != cw && k != cx) proxy_cols.push_back(k);

    std::map<std::string, std::array<double, 3>> cells;  // key -> (count, #W=w, #X=x)
    for (int i = 0; i < d.dyads.n; ++i) {
        std::ostringstream key;
        for (int k : proxy_cols) key << nodes.x(i, k) << ",";
        auto& c = cells[key.str()];
        c[0] += 1;
        c[1] += nodes.x(i, cw) == w ? 1 : 0;
        c[2] += nodes.x(i, cx) == x ? 1 : 0;
    }
    info.discrete = int(cells.size()) <= d.dyads.n / 2 || proxy_cols.empty();
    double min_pw = 1.0, min_px = 1.0;
    std::string worst_r, worst_s;
    for (const auto& [key, c] : cells) {
        double pw = c[1] / c[0], px = c[2] / c[0];
        if (pw < min_pw) {
            min_pw = pw;
            worst_r = key;
        }
        if (px < min_px) {
            min_px = px;
            worst_s = key;
        }
    }
    info.min_product = min_pw * min_px;
    if (kappa > 0) {
        for (const auto& [rk, rc] : cells)
            for (const auto& [sk, sc] : cells) {
                double prod = (rc[1] / rc[0]) * (sc[2] / sc[0]);
                if (prod < kappa && info.failing.size() < 8) {
                    std::ostringstream cell;
                    cell << "(w=" << w << ",x=" << x << ",r=[" << rk << "],s=[" << sk
                         << "]): " << prod;
                    info.failing.push_back(cell.str());
                }
            }
    }
    return info;
}

}  // namespace

AsfFit fit_pvr(const PolicyData& d, Family f, const Recipe& r, const std::string& omega) {
    AsfFit out;
    out.recipe = r;
    out.family = f;
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

    out.fit = fit_composite(d.dyads, r, f);
    out.var = dyadic_variance(d.dyads, r, f, out.fit, omega);
    return out;
}

AsfEstimate asf(const PolicyData& d, const AsfFit& fitted, double w, double x,
                double kappa) {
    const int n = d.dyads.n, J = fitted.recipe.size();
    AsfEstimate out;
    out.w = w;
    out.x = x;

    OverlapInfo overlap = overlap_scan(d, w, x, kappa);
    out.min_propensity = overlap.min_product;
    out.proxies_discrete = overlap.discrete;
    if (kappa > 0 && !overlap.failing.empty()) {
        std::ostringstream msg;
        msg << "overlap below " << kappa << " in " << overlap.failing.size()
            << " treatment/proxy cells:";
        for (const auto& c : overlap.failing) msg << "\n  " << c;
        throw std::runtime_error(msg.str());
    }

    // pin both treatment columns at the policy values and refresh the features
    PolicyData pinned = d;
    int cw = pinned.dyads.nodes.col(d.wcol), cx = pinned.dyads.nodes.col(d.xcol);
    pinned.dyads.nodes.x.col(cw).setConstant(w);
    pinned.dyads.nodes.x.col(cx).setConstant(x);
    auto feat = build_features(pinned.dyads, fitted.recipe);

    const Eigen::VectorXd& gamma = fitted.fit.theta;
    Eigen::MatrixXd qbar(n, n);  // pair-symmetrized fitted values, used upper-tri
    Eigen::RowVectorXd jac = Eigen::RowVectorXd::Zero(J);
    Eigen::VectorXd t(J);
    double msum = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double qij, qji;
            Eigen::RowVectorXd dq = Eigen::RowVectorXd::Zero(J);
            {
                double idx = 0;
                for (int k = 0; k < J; ++k) {
                    t(k) = feat[k](i, j);
                    idx += t(k) * gamma(k);
                }
                qij = family_mean(fitted.family, idx);
                dq += mean_deriv(fitted.family, idx) * t.transpose();
            }
            {
                double idx = 0;
                for (int k = 0; k < J; ++k) {
                    t(k) = feat[k](j, i);
                    idx += t(k) * gamma(k);
                }
                qji = family_mean(fitted.family, idx);
                dq += mean_deriv(fitted.family, idx) * t.transpose();
            }
            qbar(i, j) = 0.5 * (qij + qji);
            msum += qbar(i, j);
            jac += 0.5 * dq;
        }
    const double c2 = double(n) * (n - 1) / 2.0;
    out.value = msum / c2;
    out.jac = jac / c2;

    out.psi.resize(n);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            s += i < j ? qbar(i, j) : qbar(j, i);
        }
        out.psi(i) = s / (n - 1.0) - out.value;
    }
    out.xi = out.psi.squaredNorm() / n;
    out.var_first_stage = (out.jac * fitted.var.vtheta * out.jac.transpose())(0, 0);
    double v = 4.0 * out.xi + out.var_first_stage;
    out.se = std::sqrt(std::max(0.0, v) / n);
    return out;
}

AsfContrast asf_contrast(const AsfFit& fitted, const std::vector<AsfEstimate>& cells,
                         const std::vector<double>& weights) {
    if (cells.empty() || cells.size() != weights.size())
        throw std::invalid_argument("cells and weights must align and be nonempty");
    const int n = int(cells.front().psi.size());
    const int J = int(cells.front().jac.size());
    AsfContrast out;
    out.psi = Eigen::VectorXd::Zero(n);
    out.jac = Eigen::RowVectorXd::Zero(J);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].psi.size() != n) throw std::invalid_argument("cell size mismatch");
        out.value += weights[c] * cells[c].value;
        out.psi += weights[c] * cells[c].psi;
        out.jac += weights[c] * cells[c].jac;
    }
    double xi = out.psi.squaredNorm() / n;
    double vfs = (out.jac * fitted.var.vtheta * out.jac.transpose())(0, 0);
    out.se = std::sqrt(std::max(0.0, 4.0 * xi + vfs) / n);
    return out;
}

PolicyData simulate_policy_linear(int n, double a, double b, double g, double d,
                                  double lam_a, double lam_b, double noise_sd,
                                  std::uint64_t seed) {
    PolicyData out;
    out.dyads.n = n;
    out.dyads.directed = true;
    out.dyads.nodes.names = {"w", "x", "r"};
    out.dyads.nodes.x.resize(n, 3);
    Rng rng(seed, "policy-dgp");
    Eigen::VectorXd ai(n), bi(n);
    for (int i = 0; i < n; ++i) {
        double r = rng.bernoulli(0.5) ? 1.0 : 0.0;
        out.dyads.nodes.x(i, 2) = r;
        out.dyads.nodes.x(i, 0) = rng.bernoulli(0.3 + 0.4 * r) ? 1.0 : 0.0;
        out.dyads.nodes.x(i, 1) = rng.bernoulli(0.4 + 0.3 * r) ? 1.0 : 0.0;
        ai(i) = lam_a * (r - 0.5) + 0.3 * rng.normal();
        bi(i) = lam_b * (r - 0.5) + 0.3 * rng.normal();
    }
    out.dyads.y.setZero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double wi = out.dyads.nodes.x(i, 0), xj = out.dyads.nodes.x(j, 1);
            out.dyads.y(i, j) =
                a + b * wi + g * xj + d * wi * xj + ai(i) + bi(j) + noise_sd * rng.normal();
        }
    return out;
}

Recipe policy_linear_recipe() {
    return Recipe::parse("const + send(w) + recv(x) + cross(w,x) + send(r) + recv(r)");
}

}  // namespace netecon
