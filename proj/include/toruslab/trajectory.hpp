#pragma once

#include <vector>

#include "toruslab/field.hpp"

namespace toruslab {

// Quadrature rule on a time interval.
struct TimeRule {
    std::vector<double> times;
    std::vector<double> weights;  // sum to the interval length

    // n equal weights on [t0, t0+len): exact for periodic integrands of
    // trigonometric degree < n over a full period.
    static TimeRule periodic_uniform(int n, double t0 = 0.0, double len = 1.0);
    // composite trapezoid on [t0, t1] with n+1 nodes
    static TimeRule closed_trapezoid(int n, double t0, double t1);
    // n-node Gauss-Legendre rule on [t0, t1]; spectrally accurate for the
    // smooth non-periodic window integrals of the localized probes
    static TimeRule gauss_legendre(int n, double t0, double t1);
};

// Time-sampled sequence of fields with its quadrature rule.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> weights;
    std::vector<SpectralField> fields;

    std::size_t size() const { return times.size(); }
    void validate() const;
};

// Free Schroedinger trajectory of f over the rule's nodes.
Trajectory free_trajectory(const SpectralField& f, const TimeRule& rule);

// Flat binary checkpoint {magic, d, k, N, M, node count, then per node the
// time, quadrature weight and interleaved coefficients}; layout in the README.
void save_trajectory(const Trajectory& traj, int M, const std::string& path);
std::pair<Trajectory, int> load_trajectory(const std::string& path);

}  // namespace toruslab
