#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace toruslab {

// Dense operator on a discretized Hilbert space.  Index maps to grid or
// lattice points are kept by the call sites that assemble the matrix.
struct FiniteOperator {
    Eigen::MatrixXcd mat;

    explicit FiniteOperator(Eigen::MatrixXcd m);
    Eigen::Index dim() const { return mat.rows(); }
};

// Singular values in decreasing order.
std::vector<double> singular_values(const Eigen::MatrixXcd& A);

// l^alpha norm of the singular value vector; alpha = inf gives the largest.
double schatten_norm(const Eigen::MatrixXcd& A, double alpha);
double schatten_norm(const FiniteOperator& op, double alpha);
double lalpha_norm(std::span<const double> v, double alpha);

}  // namespace toruslab
