#pragma once
// Derivative-free minimization and finite-difference helpers for simulated
// likelihoods whose gradients are unavailable in closed form.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace netecon {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
    int max_iter = 2000;
    double tol = 1e-9;   // spread of simplex values
    double step = 0.25;  // initial simplex edge
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0;
    int iterations = 0;
    bool converged = false;
};

// minimizes f; infeasible points may return +inf
inline NelderMeadResult nelder_mead(const ScalarFn& f, const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opt = {}) {
    const int n = int(x0.size());
    std::vector<Eigen::VectorXd> x(n + 1, x0);
    std::vector<double> fx(n + 1);
    for (int i = 1; i <= n; ++i) x[i](i - 1) += opt.step;
    for (int i = 0; i <= n; ++i) fx[i] = f(x[i]);

    auto order = [&] {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        std::vector<Eigen::VectorXd> xs(n + 1);
        std::vector<double> fs(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs[i] = x[idx[i]];
            fs[i] = fx[idx[i]];
        }
        x.swap(xs);
        fx.swap(fs);
    };

    NelderMeadResult out;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        order();
        if (std::isfinite(fx[n]) && fx[n] - fx[0] <= opt.tol * (1 + std::fabs(fx[0]))) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += x[i];
        centroid /= n;

        Eigen::VectorXd xr = centroid + (centroid - x[n]);
        double fr = f(xr);
        if (fr < fx[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[n]);
            double fe = f(xe);
            if (fe < fr) {
                x[n] = xe;
                fx[n] = fe;
            } else {
                x[n] = xr;
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            x[n] = xr;
            fx[n] = fr;
        } else {
            double side = fr < fx[n] ? 0.5 : -0.5;
            Eigen::VectorXd xc = centroid + side * (centroid - x[n]);
            double fc = f(xc);
            if (fc < std::min(fr, fx[n])) {
                x[n] = xc;
                fx[n] = fc;
            } else {  // shrink toward the best vertex
                for (int i = 1; i <= n; ++i) {
                    x[i] = x[0] + 0.5 * (x[i] - x[0]);
                    fx[i] = f(x[i]);
                }
            }
        }
    }
    order();
    out.x = x[0];
    out.value = fx[0];
    out.iterations = it;
    return out;
}

inline Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& x,
                                   double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (int k = 0; k < x.size(); ++k) {
        Eigen::VectorXd up = x, dn = x;
        up(k) += h;
        dn(k) -= h;
        g(k) = (f(up) - f(dn)) / (2 * h);
    }
    return g;
}

inline Eigen::MatrixXd fd_hessian(const ScalarFn& f, const Eigen::VectorXd& x,
                                  double h = 1e-4) {
    const int n = int(x.size());
    Eigen::MatrixXd hess(n, n);
    double f0 = f(x);
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd up = x, dn = x;
        up(k) += h;
        dn(k) -= h;
        hess(k, k) = (f(up) - 2 * f0 + f(dn)) / (h * h);
        for (int l = k + 1; l < n; ++l) {
            Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
            pp(k) += h; pp(l) += h;
            pm(k) += h; pm(l) -= h;
            mp(k) -= h; mp(l) += h;
            mm(k) -= h; mm(l) -= h;
            hess(k, l) = hess(l, k) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
        }
    }
    return hess;
}

}  // namespace netecon
