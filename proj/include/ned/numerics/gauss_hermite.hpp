#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ned/errors.hpp"

namespace ned {

/// Nodes and weights for E[g(Z)] with Z standard normal:
/// E[g(Z)] ~= sum_i w_i g(x_i), weights summing to one.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule of order q via Golub-Welsch: the Jacobi
/// matrix for the weight e^{-x^2/2}/sqrt(2 pi) has zero diagonal and
/// off-diagonal sqrt(k).
inline GaussHermiteRule gauss_hermite(std::size_t q) {
    if (q == 0) throw DomainError("gauss-hermite order must be positive");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q),
                                              static_cast<Eigen::Index>(q));
    for (std::size_t k = 1; k < q; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
        J(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success)
        throw SolverError("eigen", "gauss-hermite eigen decomposition failed");

    GaussHermiteRule rule;
    rule.nodes.resize(q);
    rule.weights.resize(q);
    for (std::size_t i = 0; i < q; ++i) {
        rule.nodes[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
        const double v0 = es.eigenvectors()(0, static_cast<Eigen::Index>(i));
        rule.weights[i] = v0 * v0;
    }
    return rule;
}

}  // namespace ned
