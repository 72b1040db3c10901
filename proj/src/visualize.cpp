#include "stde/visualize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace stde {

RgbImage embedding_to_rgb(const Tensor3& e) {
    const int d = e.channels();
    const Eigen::Index n = static_cast<Eigen::Index>(e.plane_size());
    RgbImage out(e.height(), e.width(), 3, 0);
    if (n == 0 || d == 0) {
        return out;
    }
    Eigen::MatrixXd x(n, d);
    for (int c = 0; c < d; ++c) {
        x.col(c) = Eigen::Map<const Eigen::VectorXd>(e.plane(c), n);
    }
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);

    const int k = std::min(d, 3);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 3);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - j); // eigenvalues ascend
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) {
            v = -v;
        }
        basis.col(j) = v;
    }
    const Eigen::MatrixXd proj = x * basis;
    for (int j = 0; j < 3; ++j) {
        const double lo = proj.col(j).minCoeff();
        const double hi = proj.col(j).maxCoeff();
        const double span = hi - lo;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = span > 1e-12 ? (proj(i, j) - lo) / span : 0.0;
            out.data()[static_cast<std::size_t>(i) * 3 + j] =
                static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
        }
    }
    return out;
}

} // namespace stde
