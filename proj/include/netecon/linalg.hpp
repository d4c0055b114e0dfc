#pragma once
#include <Eigen/Dense>

namespace netecon {

// Moore-Penrose pseudo-inverse. Singular values below tol * max_sv are dropped.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double tol = 1e-10) {
    if (a.size() == 0) return a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cutoff = tol * sv(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

}  // namespace netecon
