#pragma once

#include <Eigen/Dense>
#include <vector>

#include "toruslab/nls.hpp"
#include "toruslab/ons.hpp"

namespace toruslab {

// Configuration for the self-consistent fermion flow.  Orbitals live on the
// full M^d grid spectrum so every substep is exactly unitary; initial data is
// band-limited to the ensemble's lattice.
struct HartreeConfig {
    explicit HartreeConfig(PotentialSpec pot) : w(std::move(pot)) {}

    double dt = 1e-3;
    int n_steps = 100;
    PotentialSpec w;
    TorusGrid grid;
    int cadence = 1;          // store every cadence-th step
    double alpha_prime = 2.0;  // Schatten exponent reported
    double s = 0.0;            // smoothness of the Sobolev-Schatten diagnostic
    double q = 4.0, r = 2.0, rt = 2.0;  // density space-time norm exponents

    void validate() const;
};

// Recorded orbital history: per stored step an M^d x J matrix of grid-spectrum
// coefficients (synthesis convention u(z_m) = sum_xi c(xi) e^{2 pi i m xi / M}).
struct HartreeTrajectory {
    TorusGrid grid;
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> orbitals;
    std::vector<double> lambda;

    std::size_t steps() const { return times.size(); }
};

struct HartreeDiagRow {
    int step = 0;
    double t = 0.0;
    double trace = 0.0;
    double gram_dev = 0.0;
    double lambda_schatten = 0.0;    // ||lambda||_{l^alpha'}, constant by construction
    double sobolev_schatten = 0.0;   // ||<D>^s gamma <D>^s||_{S^alpha'}
    double rho_running = 0.0;        // L^q_t L^r_x L^rt_y of rho over elapsed time
    double kinetic = 0.0;
    double interaction = 0.0;
    double energy = 0.0;             // kinetic - interaction, conserved to O(dt^2)
};

struct HartreeRun {
    HartreeTrajectory traj;
    std::vector<HartreeDiagRow> diagnostics;
};

// Strang splitting with the shared mean field: half potential phase with
// V = w * rho recomputed from the current density, exact free flight, second
// half phase with the refreshed density.
HartreeRun evolve_fermions(const OrthonormalEnsemble& gamma0, const HartreeConfig& cfg);

// || i d_t gamma - [K + w * rho, gamma] ||_{S^2} / ||gamma||_{S^2} with a
// central time difference at an interior stored index (cadence 1 required).
double commutator_residual(const HartreeTrajectory& traj, const SpectralField& w,
                           std::size_t t_index, int dense_cap = 4096);

std::vector<HartreeDiagRow> conservation_report(const HartreeTrajectory& traj,
                                                const HartreeConfig& cfg);

struct OperatorPicardConfig {
    double T = 0.1;
    int n_t = 64;
    int max_iter = 30;
    double tol = 1e-9;
    TorusGrid grid;
    double alpha_prime = 2.0;
    double s = 0.0;
    double q = 4.0, r = 2.0, rt = 2.0;  // the density part of the fixed-point norm
    int dense_cap = 4096;

    void validate() const;
};

struct OperatorPicardResult {
    std::vector<double> times;
    std::vector<double> weights;
    std::vector<Eigen::MatrixXcd> gamma;       // dense on the grid spectrum
    std::vector<std::vector<double>> rho;      // density samples per node
    PicardHistory history;
};

// Fixed point of the pair map (gamma, rho) -> (S + Duhamel[-i[w*rho, gamma]],
// density of the update) on a trapezoid time grid, dense on the grid modes.
OperatorPicardResult picard_operator_solve(const OrthonormalEnsemble& gamma0,
                                           const PotentialSpec& w,
                                           const OperatorPicardConfig& cfg);

// densities of a recorded splitting run, for cross-validation
std::vector<std::vector<double>> hartree_densities(const HartreeTrajectory& traj);

// rho(z) = sum_j lambda_j |u_j(z)|^2 for one stored step
std::vector<double> density_of(const HartreeTrajectory& traj, std::size_t index);

// Flat binary checkpoint {magic, d, k, M, J, stored steps, weights, then per
// step the time and the J orbital coefficient columns}; layout in the README.
void save_hartree_checkpoint(const HartreeTrajectory& traj, const std::string& path);
HartreeTrajectory load_hartree_checkpoint(const std::string& path);

}  // namespace toruslab
