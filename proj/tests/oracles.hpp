#pragma once

// Independent reference implementations used to cross-check the library:
// a cyclic Jacobi eigensolver for symmetric matrices and small helpers.
// These deliberately avoid the code paths under test.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct EigenDecomposition {
    std::vector<double> values;           // descending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations on a dense symmetric matrix.
inline EigenDecomposition jacobi_eigen(std::vector<std::vector<double>> a) {
    const size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-300) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return a[i][i] > a[j][j]; });
    EigenDecomposition out;
    for (size_t r : order) {
        out.values.push_back(a[r][r]);
        std::vector<double> col(n);
        for (size_t k = 0; k < n; ++k) col[k] = v[k][r];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

// Sample covariance (n-1 denominator) computed entry by entry.
inline std::vector<std::vector<double>> covariance(const Eigen::MatrixXd& rows) {
    const auto n = rows.rows();
    const auto d = rows.cols();
    std::vector<double> mean(d, 0.0);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) mean[j] += rows(i, j);
        mean[j] /= static_cast<double>(n);
    }
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (Eigen::Index p = 0; p < d; ++p)
        for (Eigen::Index q = 0; q < d; ++q) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                s += (rows(i, p) - mean[p]) * (rows(i, q) - mean[q]);
            cov[p][q] = s / static_cast<double>(n - 1);
        }
    return cov;
}

// Projector onto the span of the top-k columns: P P^T as a dense matrix.
inline std::vector<std::vector<double>> projector(
    const std::vector<std::vector<double>>& top_vectors, size_t k, size_t d) {
    std::vector<std::vector<double>> proj(d, std::vector<double>(d, 0.0));
    for (size_t c = 0; c < k; ++c)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j)
                proj[i][j] += top_vectors[c][i] * top_vectors[c][j];
    return proj;
}

}  // namespace oracle
