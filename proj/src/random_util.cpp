#include "qsa/random_util.hpp"

namespace qsa {

Mat random_gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = cx(gauss(rng), gauss(rng));
    return m;
}

Mat random_unitary(int dim, std::mt19937_64& rng) {
    Mat g = random_gaussian_matrix(dim, dim, rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    // Fix the phase convention so the distribution is Haar-like.
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
        cx d = r(i, i);
        if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
    }
    return q;
}

Vec random_unit_vector(int dim, std::mt19937_64& rng) {
    Vec v = random_gaussian_matrix(dim, 1, rng).col(0);
    return v / v.norm();
}

}  // namespace qsa
