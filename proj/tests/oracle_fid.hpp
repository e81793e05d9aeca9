#pragma once

// Test-only independent Frechet-distance oracle: Gaussian fit plus a
// Denman-Beavers iteration for the matrix square root (Gauss-Jordan
// inverses). Deliberately shares no code with the production fid_proxy.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "voken/core/types.hpp"

namespace voken_test {

inline std::vector<double> gj_inverse(std::vector<double> a, int n) {
    std::vector<double> inv(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[size_t(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[size_t(r) * n + col]) > std::fabs(a[size_t(piv) * n + col])) piv = r;
        if (std::fabs(a[size_t(piv) * n + col]) < 1e-12)
            throw std::runtime_error("fid oracle: singular matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a[size_t(piv) * n + j], a[size_t(col) * n + j]);
                std::swap(inv[size_t(piv) * n + j], inv[size_t(col) * n + j]);
            }
        const double d = a[size_t(col) * n + col];
        for (int j = 0; j < n; ++j) {
            a[size_t(col) * n + j] /= d;
            inv[size_t(col) * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[size_t(r) * n + col];
            if (f == 0) continue;
            for (int j = 0; j < n; ++j) {
                a[size_t(r) * n + j] -= f * a[size_t(col) * n + j];
                inv[size_t(r) * n + j] -= f * inv[size_t(col) * n + j];
            }
        }
    }
    return inv;
}

inline std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b,
                                   int n) {
    std::vector<double> c(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                c[size_t(i) * n + j] += a[size_t(i) * n + k] * b[size_t(k) * n + j];
    return c;
}

inline std::vector<double> db_sqrt(const std::vector<double>& a, int n) {
    std::vector<double> y = a, z(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) z[size_t(i) * n + i] = 1.0;
    for (int it = 0; it < 60; ++it) {
        const auto yi = gj_inverse(y, n);
        const auto zi = gj_inverse(z, n);
        for (size_t k = 0; k < y.size(); ++k) {
            const double ny = 0.5 * (y[k] + zi[k]);
            const double nz = 0.5 * (z[k] + yi[k]);
            y[k] = ny;
            z[k] = nz;
        }
    }
    return y;
}

inline double fid_oracle(const std::vector<std::vector<voken::real>>& sa,
                         const std::vector<std::vector<voken::real>>& sb) {
    const int d = int(sa[0].size());
    auto fit = [d](const std::vector<std::vector<voken::real>>& s, std::vector<double>& mu,
                   std::vector<double>& cov) {
        mu.assign(size_t(d), 0.0);
        for (const auto& x : s)
            for (int j = 0; j < d; ++j) mu[size_t(j)] += double(x[size_t(j)]);
        for (auto& m : mu) m /= double(s.size());
        cov.assign(size_t(d) * d, 0.0);
        for (const auto& x : s)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    cov[size_t(i) * d + j] += (double(x[size_t(i)]) - mu[size_t(i)]) *
                                              (double(x[size_t(j)]) - mu[size_t(j)]);
        for (auto& c : cov) c /= double(s.size() - 1);
    };
    std::vector<double> mu_a, cov_a, mu_b, cov_b;
    fit(sa, mu_a, cov_a);
    fit(sb, mu_b, cov_b);
    double mean_term = 0, tr = 0;
    for (int i = 0; i < d; ++i)
        mean_term += (mu_a[size_t(i)] - mu_b[size_t(i)]) * (mu_a[size_t(i)] - mu_b[size_t(i)]);
    const auto root = db_sqrt(mat_mul(cov_a, cov_b, d), d);
    for (int i = 0; i < d; ++i)
        tr += cov_a[size_t(i) * d + i] + cov_b[size_t(i) * d + i] - 2.0 * root[size_t(i) * d + i];
    return mean_term + tr;
}

}  // namespace voken_test
