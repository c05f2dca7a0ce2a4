#include "toruslab/ons.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "toruslab/errors.hpp"
#include "toruslab/rng.hpp"
#include "toruslab/schatten.hpp"

namespace toruslab {

SpectralField OrthonormalEnsemble::frame_field(int j) const {
    std::vector<cd> c(lattice->size());
    for (std::size_t i = 0; i < lattice->size(); ++i) c[i] = frames(static_cast<Eigen::Index>(i), j);
    return SpectralField(lattice, std::move(c));
}

double OrthonormalEnsemble::weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

void OrthonormalEnsemble::validate() const {
    if (!lattice) throw ParamError("ensemble without lattice");
    if (static_cast<std::size_t>(frames.rows()) != lattice->size())
        throw ParamError("frame rows do not match lattice size");
    if (weights.size() != static_cast<std::size_t>(frames.cols()))
        throw ParamError("one weight per frame required");
    for (double w : weights)
        if (!(w >= 0.0)) throw ParamError("weights must be nonnegative");
}

OrthonormalEnsemble make_ons(OnsKind kind, int J, LatticePtr lattice, std::uint64_t seed) {
    const auto P = static_cast<Eigen::Index>(lattice->size());
    if (J < 1 || J > P)
        throw ParamError("rank J must lie in [1, lattice size]");
    OrthonormalEnsemble ens;
    ens.lattice = std::move(lattice);
    ens.weights.assign(static_cast<std::size_t>(J), 1.0);
    if (kind == OnsKind::plane_waves) {
        ens.frames = Eigen::MatrixXcd::Zero(P, J);
        for (int j = 0; j < J; ++j) ens.frames(j, j) = 1.0;
    } else {
        auto eng = make_engine(seed, 0x0e5);
        auto g = gaussian_coeffs(static_cast<std::size_t>(P) * J, eng);
        Eigen::MatrixXcd A(P, J);
        for (Eigen::Index c = 0; c < J; ++c)
            for (Eigen::Index r = 0; r < P; ++r) A(r, c) = g[static_cast<std::size_t>(c) * P + r];
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
        ens.frames = qr.householderQ() * Eigen::MatrixXcd::Identity(P, J);
    }
    return ens;
}

double gram_deviation(const OrthonormalEnsemble& ens) {
    Eigen::MatrixXcd G = ens.frames.adjoint() * ens.frames;
    G -= Eigen::MatrixXcd::Identity(G.rows(), G.cols());
    return G.cwiseAbs().maxCoeff();
}

std::vector<double> ons_density_samples(const OrthonormalEnsemble& ens, double t,
                                        const TorusGrid& grid) {
    ens.validate();
    std::vector<double> rho(grid.points(), 0.0);
    const auto& lat = *ens.lattice;
    std::vector<cd> c(lat.size());
    for (int j = 0; j < ens.J(); ++j) {
        if (ens.weights[static_cast<std::size_t>(j)] == 0.0) continue;
        for (std::size_t i = 0; i < lat.size(); ++i)
            c[i] = ens.frames(static_cast<Eigen::Index>(i), j) *
                   phase_unit(t * static_cast<double>(lat.nsq(i)));
        auto s = synthesize(lat, c, grid);
        const double w = ens.weights[static_cast<std::size_t>(j)];
        for (std::size_t m = 0; m < s.size(); ++m) rho[m] += w * std::norm(s[m]);
    }
    return rho;
}

SpectralField ons_density(const OrthonormalEnsemble& ens, double t, const TorusGrid& grid) {
    auto rho = ons_density_samples(ens, t, grid);
    const auto& lat = *ens.lattice;
    auto out_lat = build_lattice(lat.d(), lat.k(), 2 * lat.N());
    if (grid.M < 2 * out_lat->N() + 1)
        throw AliasingError("grid too coarse to hold the density band");
    std::vector<cd> cs(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) cs[i] = rho[i];
    return analyze_field(std::move(out_lat), cs, grid);
}

double sobolev_schatten_norm(const OrthonormalEnsemble& ens, double alpha_prime, double s) {
    ens.validate();
    if (alpha_prime < 1.0) throw ParamError("Schatten exponent must be >= 1");
    const auto& lat = *ens.lattice;
    // columns sqrt(lambda_j) <grad>^s a_j; the weighted operator is B B^*,
    // whose singular values are the squares of B's
    Eigen::MatrixXcd B = ens.frames;
    for (int j = 0; j < ens.J(); ++j)
        B.col(j) *= std::sqrt(ens.weights[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < lat.size(); ++i)
        B.row(static_cast<Eigen::Index>(i)) *=
            std::pow(1.0 + static_cast<double>(lat.nsq(i)), 0.5 * s);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
    if (svd.info() != Eigen::Success) throw NumericError("SVD failed to converge");
    std::vector<double> sq(static_cast<std::size_t>(svd.singularValues().size()));
    for (std::size_t i = 0; i < sq.size(); ++i) {
        double v = svd.singularValues()(static_cast<Eigen::Index>(i));
        sq[i] = v * v;
    }
    return lalpha_norm(sq, alpha_prime);
}

}  // namespace toruslab
