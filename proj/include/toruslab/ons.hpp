#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "toruslab/field.hpp"
#include "toruslab/lattice.hpp"

namespace toruslab {

// Weighted orthonormal family on the truncated band: J coefficient columns
// with lambda_j >= 0.  This doubles as the finite-rank density matrix
// gamma = sum_j lambda_j |f_j><f_j|.
struct OrthonormalEnsemble {
    LatticePtr lattice;
    Eigen::MatrixXcd frames;      // lattice.size() x J, columns are a_j
    std::vector<double> weights;  // lambda_j

    int J() const { return static_cast<int>(frames.cols()); }
    SpectralField frame_field(int j) const;
    double weight_sum() const;
    void validate() const;
};

enum class OnsKind { plane_waves, random };

// plane_waves: first J lattice characters (exactly orthonormal).
// random: J columns of the Q factor of a seeded complex Gaussian matrix.
// Weights default to 1.
OrthonormalEnsemble make_ons(OnsKind kind, int J, LatticePtr lattice, std::uint64_t seed);

// max |<a_i, a_j> - delta_ij|
double gram_deviation(const OrthonormalEnsemble& ens);

// rho(t, z) = sum_j lambda_j |e^{it Delta} f_j(z)|^2 on the grid (real values)
std::vector<double> ons_density_samples(const OrthonormalEnsemble& ens, double t,
                                        const TorusGrid& grid);

// Same density, analyzed back onto a band-2N lattice as a spectral field.
SpectralField ons_density(const OrthonormalEnsemble& ens, double t, const TorusGrid& grid);

// ||gamma||_{S^{alpha',s}} = ||<grad>^s gamma <grad>^s||_{S^{alpha'}}, computed
// from the singular values of the weighted frame matrix (never materializes
// the full operator).
double sobolev_schatten_norm(const OrthonormalEnsemble& ens, double alpha_prime, double s);

}  // namespace toruslab
