#include "toruslab/hartree.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "toruslab/errors.hpp"
#include "toruslab/fft.hpp"
#include "toruslab/norms.hpp"
#include "toruslab/schatten.hpp"

namespace toruslab {

namespace {

// wrapped integer frequency of grid digit c in [0, M)
int wrap_freq(int c, int M) { return c <= M / 2 ? c : c - M; }

struct GridModes {
    std::vector<std::int64_t> nsq;         // |xi_w|^2 per flat index
    std::vector<std::vector<int>> digits;  // per flat index, per axis in [0, M)
};

GridModes grid_modes(const TorusGrid& grid) {
    GridModes gm;
    const std::size_t P = grid.points();
    gm.nsq.resize(P);
    gm.digits.assign(P, std::vector<int>(static_cast<std::size_t>(grid.d)));
    for (std::size_t m = 0; m < P; ++m) {
        std::size_t rem = m;
        std::int64_t s = 0;
        for (int c = grid.d - 1; c >= 0; --c) {
            int dig = static_cast<int>(rem % grid.M);
            rem /= grid.M;
            gm.digits[m][static_cast<std::size_t>(c)] = dig;
            std::int64_t f = wrap_freq(dig, grid.M);
            s += f * f;
        }
        gm.nsq[m] = s;
    }
    return gm;
}

// w-hat extended by zero to the grid modes
std::vector<cd> what_on_grid(const SpectralField& w, const TorusGrid& grid,
                             const GridModes& gm) {
    const auto& lat = w.lattice();
    std::vector<cd> out(grid.points(), cd(0.0, 0.0));
    std::vector<int> pt(static_cast<std::size_t>(grid.d));
    for (std::size_t m = 0; m < out.size(); ++m) {
        bool inside = true;
        for (int c = 0; c < grid.d; ++c) {
            pt[static_cast<std::size_t>(c)] = wrap_freq(gm.digits[m][static_cast<std::size_t>(c)], grid.M);
            inside = inside && std::abs(pt[static_cast<std::size_t>(c)]) <= lat.N();
        }
        if (inside) out[m] = w.coeffs()[lat.index_of(pt)];
    }
    return out;
}

std::vector<cd> column_to_samples(const Eigen::MatrixXcd& C, int j, const TorusGrid& grid) {
    std::vector<cd> buf(static_cast<std::size_t>(C.rows()));
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = C(static_cast<Eigen::Index>(i), j);
    fft::backward(buf, grid.d, grid.M);
    return buf;
}

std::vector<double> density_from_orbitals(const Eigen::MatrixXcd& C,
                                          const std::vector<double>& lambda,
                                          const TorusGrid& grid) {
    std::vector<double> rho(grid.points(), 0.0);
    for (int j = 0; j < C.cols(); ++j) {
        if (lambda[static_cast<std::size_t>(j)] == 0.0) continue;
        auto s = column_to_samples(C, j, grid);
        for (std::size_t m = 0; m < rho.size(); ++m)
            rho[m] += lambda[static_cast<std::size_t>(j)] * std::norm(s[m]);
    }
    return rho;
}

// V = w * rho as real samples
std::vector<double> mean_field(const std::vector<double>& rho, const std::vector<cd>& what,
                               const TorusGrid& grid) {
    std::vector<cd> buf(rho.size());
    for (std::size_t m = 0; m < rho.size(); ++m) buf[m] = rho[m];
    fft::forward(buf, grid.d, grid.M);
    const double scale = grid.cell_weight();
    for (std::size_t m = 0; m < buf.size(); ++m) buf[m] *= scale * what[m];
    fft::backward(buf, grid.d, grid.M);
    std::vector<double> V(rho.size());
    for (std::size_t m = 0; m < rho.size(); ++m) V[m] = buf[m].real();
    return V;
}

Eigen::MatrixXcd embed_ensemble(const OrthonormalEnsemble& ens, const TorusGrid& grid,
                                const GridModes& gm) {
    (void)gm;
    const auto& lat = *ens.lattice;
    if (grid.M < 2 * lat.N() + 1) throw AliasingError("grid undersamples the initial band");
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(grid.points()), ens.J());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        auto xi = lat.point(i);
        std::size_t flat = 0;
        for (int c = 0; c < grid.d; ++c) {
            int w = xi[c] % grid.M;
            if (w < 0) w += grid.M;
            flat = flat * static_cast<std::size_t>(grid.M) + static_cast<std::size_t>(w);
        }
        for (int j = 0; j < ens.J(); ++j)
            C(static_cast<Eigen::Index>(flat), j) = ens.frames(static_cast<Eigen::Index>(i), j);
    }
    return C;
}

double sobolev_schatten_of_orbitals(const Eigen::MatrixXcd& C, const std::vector<double>& lambda,
                                    const GridModes& gm, double alpha_prime, double s) {
    Eigen::MatrixXcd B = C;
    for (int j = 0; j < B.cols(); ++j)
        B.col(j) *= std::sqrt(lambda[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        B.row(i) *= std::pow(1.0 + static_cast<double>(gm.nsq[static_cast<std::size_t>(i)]), 0.5 * s);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
    std::vector<double> sq(static_cast<std::size_t>(svd.singularValues().size()));
    for (std::size_t i = 0; i < sq.size(); ++i) {
        double v = svd.singularValues()(static_cast<Eigen::Index>(i));
        sq[i] = v * v;
    }
    return lalpha_norm(sq, alpha_prime);
}

}  // namespace

void HartreeConfig::validate() const {
    if (!(dt > 0.0)) throw ParamError("dt must be positive");
    if (n_steps < 1) throw ParamError("need at least one step");
    if (dt * n_steps > 1.0 + 1e-12) throw ParamError("dt * n_steps must stay within one period");
    if (cadence < 1) throw ParamError("cadence must be >= 1");
    w.validate();
}

HartreeRun evolve_fermions(const OrthonormalEnsemble& gamma0, const HartreeConfig& cfg) {
    cfg.validate();
    gamma0.validate();
    const TorusGrid& grid = cfg.grid;
    GridModes gm = grid_modes(grid);
    auto what = what_on_grid(cfg.w.w, grid, gm);

    const std::size_t P = grid.points();
    std::vector<cd> kin_step(P);
    for (std::size_t m = 0; m < P; ++m)
        kin_step[m] = phase_unit(cfg.dt * static_cast<double>(gm.nsq[m]));

    Eigen::MatrixXcd C = embed_ensemble(gamma0, grid, gm);
    const int J = gamma0.J();

    HartreeRun run;
    run.traj.grid = grid;
    run.traj.lambda = gamma0.weights;
    auto store = [&](int step) {
        run.traj.times.push_back(cfg.dt * step);
        run.traj.orbitals.push_back(C);
    };
    store(0);

    std::vector<std::vector<cd>> samples(static_cast<std::size_t>(J));
    for (int step = 1; step <= cfg.n_steps; ++step) {
        // samples of every orbital, shared density, first half phase
        std::vector<double> rho(P, 0.0);
        for (int j = 0; j < J; ++j) {
            samples[static_cast<std::size_t>(j)] = column_to_samples(C, j, grid);
            const double lj = run.traj.lambda[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < P; ++m)
                rho[m] += lj * std::norm(samples[static_cast<std::size_t>(j)][m]);
        }
        auto V = mean_field(rho, what, grid);
        std::vector<cd> half_phase(P);
        for (std::size_t m = 0; m < P; ++m) {
            const double th = -0.5 * cfg.dt * V[m];
            half_phase[m] = {std::cos(th), std::sin(th)};
        }
        const double scale = grid.cell_weight();
        for (int j = 0; j < J; ++j) {
            auto& s = samples[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < P; ++m) s[m] *= half_phase[m];
            fft::forward(s, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m) s[m] *= scale * kin_step[m];
            fft::backward(s, grid.d, grid.M);
        }
        // refreshed density for the second half phase
        std::fill(rho.begin(), rho.end(), 0.0);
        for (int j = 0; j < J; ++j) {
            const double lj = run.traj.lambda[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < P; ++m)
                rho[m] += lj * std::norm(samples[static_cast<std::size_t>(j)][m]);
        }
        V = mean_field(rho, what, grid);
        for (std::size_t m = 0; m < P; ++m) {
            const double th = -0.5 * cfg.dt * V[m];
            half_phase[m] = {std::cos(th), std::sin(th)};
        }
        for (int j = 0; j < J; ++j) {
            auto& s = samples[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < P; ++m) s[m] *= half_phase[m];
            fft::forward(s, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m)
                C(static_cast<Eigen::Index>(m), j) = s[m] * scale;
        }
        if (!C.allFinite()) throw NumericError("orbital overflow at step " + std::to_string(step));
        if (step % cfg.cadence == 0) store(step);
    }
    run.diagnostics = conservation_report(run.traj, cfg);
    return run;
}

std::vector<double> density_of(const HartreeTrajectory& traj, std::size_t index) {
    return density_from_orbitals(traj.orbitals.at(index), traj.lambda, traj.grid);
}

std::vector<std::vector<double>> hartree_densities(const HartreeTrajectory& traj) {
    std::vector<std::vector<double>> out(traj.steps());
    for (std::size_t i = 0; i < traj.steps(); ++i) out[i] = density_of(traj, i);
    return out;
}

std::vector<HartreeDiagRow> conservation_report(const HartreeTrajectory& traj,
                                                const HartreeConfig& cfg) {
    if (traj.steps() == 0) throw ParamError("empty trajectory");
    const TorusGrid& grid = traj.grid;
    GridModes gm = grid_modes(grid);
    auto what = what_on_grid(cfg.w.w, grid, gm);
    std::vector<HartreeDiagRow> rows;
    std::vector<double> rho_norms;
    for (std::size_t i = 0; i < traj.steps(); ++i) {
        const auto& C = traj.orbitals[i];
        HartreeDiagRow row;
        row.step = static_cast<int>(i);
        row.t = traj.times[i];
        for (int j = 0; j < C.cols(); ++j)
            row.trace += traj.lambda[static_cast<std::size_t>(j)] * C.col(j).squaredNorm();
        Eigen::MatrixXcd G = C.adjoint() * C;
        G -= Eigen::MatrixXcd::Identity(G.rows(), G.cols());
        row.gram_dev = G.cwiseAbs().maxCoeff();
        row.lambda_schatten = lalpha_norm(traj.lambda, cfg.alpha_prime);
        row.sobolev_schatten =
            sobolev_schatten_of_orbitals(C, traj.lambda, gm, cfg.alpha_prime, cfg.s);

        auto rho = density_of(traj, i);
        std::vector<cd> rho_cd(rho.size());
        for (std::size_t m = 0; m < rho.size(); ++m) rho_cd[m] = rho[m];
        rho_norms.push_back(
            mixed_space_norm_samples(rho_cd, grid.d, grid.k, grid.M, cfg.r, cfg.rt));
        if (i > 0) {
            std::vector<double> tw(i + 1, 0.0);
            for (std::size_t s2 = 0; s2 + 1 <= i; ++s2) {
                const double h = traj.times[s2 + 1] - traj.times[s2];
                tw[s2] += 0.5 * h;
                tw[s2 + 1] += 0.5 * h;
            }
            row.rho_running = time_q_norm(std::span<const double>(rho_norms.data(), i + 1),
                                          tw, cfg.q);
        } else {
            row.rho_running = 0.0;
        }

        for (int j = 0; j < C.cols(); ++j) {
            double acc = 0.0;
            for (Eigen::Index m = 0; m < C.rows(); ++m)
                acc += static_cast<double>(gm.nsq[static_cast<std::size_t>(m)]) *
                       std::norm(C(m, j));
            row.kinetic += 2.0 * M_PI * traj.lambda[static_cast<std::size_t>(j)] * acc;
        }
        auto V = mean_field(rho, what, grid);
        double inter = 0.0;
        for (std::size_t m = 0; m < rho.size(); ++m) inter += V[m] * rho[m];
        row.interaction = 0.5 * inter * grid.cell_weight();
        row.energy = row.kinetic - row.interaction;
        rows.push_back(row);
    }
    return rows;
}

double commutator_residual(const HartreeTrajectory& traj, const SpectralField& w,
                           std::size_t t_index, int dense_cap) {
    if (t_index == 0 || t_index + 1 >= traj.steps())
        throw ParamError("central difference needs an interior stored index");
    const TorusGrid& grid = traj.grid;
    const std::size_t P = grid.points();
    if (P > static_cast<std::size_t>(dense_cap))
        throw SizeError("dense residual dimension " + std::to_string(P) + " exceeds cap");
    const double dt_l = traj.times[t_index] - traj.times[t_index - 1];
    const double dt_r = traj.times[t_index + 1] - traj.times[t_index];
    if (std::abs(dt_l - dt_r) > 1e-12 * std::max(dt_l, dt_r))
        throw ParamError("central difference needs uniformly stored steps (cadence 1)");

    GridModes gm = grid_modes(grid);
    auto what = what_on_grid(w, grid, gm);

    auto dense_gamma = [&](std::size_t i) -> Eigen::MatrixXcd {
        const auto& C = traj.orbitals[i];
        Eigen::MatrixXcd L = C;
        for (int j = 0; j < L.cols(); ++j)
            L.col(j) *= std::sqrt(traj.lambda[static_cast<std::size_t>(j)]);
        return L * L.adjoint();
    };
    Eigen::MatrixXcd gm1 = dense_gamma(t_index - 1);
    Eigen::MatrixXcd g0 = dense_gamma(t_index);
    Eigen::MatrixXcd gp1 = dense_gamma(t_index + 1);

    auto rho = density_of(traj, t_index);
    auto V = mean_field(rho, what, grid);

    // H gamma: per column c -> samples -> multiply by V -> back; plus kinetic diagonal
    auto apply_potential = [&](const Eigen::MatrixXcd& A) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd out(A.rows(), A.cols());
        const double scale = grid.cell_weight();
        std::vector<cd> buf(P);
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            for (std::size_t m = 0; m < P; ++m) buf[m] = A(static_cast<Eigen::Index>(m), j);
            fft::backward(buf, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m) buf[m] *= V[m];
            fft::forward(buf, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m)
                out(static_cast<Eigen::Index>(m), j) = buf[m] * scale;
        }
        return out;
    };
    // kinetic generator consistent with the e^{2 pi i t |xi|^2} flow: K = -2 pi |xi|^2
    Eigen::VectorXd kin(static_cast<Eigen::Index>(P));
    for (std::size_t m = 0; m < P; ++m)
        kin(static_cast<Eigen::Index>(m)) = -2.0 * M_PI * static_cast<double>(gm.nsq[m]);

    Eigen::MatrixXcd Hg = apply_potential(g0);
    Eigen::MatrixXcd gH = apply_potential(g0.adjoint()).adjoint();
    for (Eigen::Index i = 0; i < Hg.rows(); ++i) {
        Hg.row(i) += kin(i) * g0.row(i);
        gH.col(i) += kin(i) * g0.col(i);
    }
    Eigen::MatrixXcd R = cd(0.0, 1.0) / (2.0 * dt_l) * (gp1 - gm1) - (Hg - gH);
    const double base = g0.norm();
    if (base == 0.0) throw NumericError("zero density matrix");
    return R.norm() / base;
}

namespace {
constexpr char kCheckpointMagic[4] = {'T', 'H', 'C', '1'};
}

void save_hartree_checkpoint(const HartreeTrajectory& traj, const std::string& path) {
    if (traj.steps() == 0) throw ParamError("empty trajectory");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    const int J = static_cast<int>(traj.lambda.size());
    std::int32_t hdr[5] = {traj.grid.d, traj.grid.k, traj.grid.M, J,
                           static_cast<std::int32_t>(traj.steps())};
    bool ok = std::fwrite(kCheckpointMagic, 1, 4, fp) == 4 &&
              std::fwrite(hdr, sizeof(std::int32_t), 5, fp) == 5 &&
              std::fwrite(traj.lambda.data(), sizeof(double), traj.lambda.size(), fp) ==
                  traj.lambda.size();
    for (std::size_t s = 0; ok && s < traj.steps(); ++s) {
        ok = std::fwrite(&traj.times[s], sizeof(double), 1, fp) == 1;
        const auto& C = traj.orbitals[s];
        for (int j = 0; ok && j < J; ++j)
            for (Eigen::Index m = 0; ok && m < C.rows(); ++m) {
                double re_im[2] = {C(m, j).real(), C(m, j).imag()};
                ok = std::fwrite(re_im, sizeof(double), 2, fp) == 2;
            }
    }
    std::fclose(fp);
    if (!ok) throw std::runtime_error("short write: " + path);
}

HartreeTrajectory load_hartree_checkpoint(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4];
    std::int32_t hdr[5];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0 ||
        std::fread(hdr, sizeof(std::int32_t), 5, fp) != 5) {
        std::fclose(fp);
        throw std::runtime_error("bad checkpoint header: " + path);
    }
    HartreeTrajectory traj;
    traj.grid = TorusGrid(hdr[0], hdr[1], hdr[2]);
    traj.lambda.resize(static_cast<std::size_t>(hdr[3]));
    bool ok = std::fread(traj.lambda.data(), sizeof(double), traj.lambda.size(), fp) ==
              traj.lambda.size();
    const auto P = static_cast<Eigen::Index>(traj.grid.points());
    for (std::int32_t s = 0; ok && s < hdr[4]; ++s) {
        double t;
        ok = std::fread(&t, sizeof(double), 1, fp) == 1;
        Eigen::MatrixXcd C(P, hdr[3]);
        for (int j = 0; ok && j < hdr[3]; ++j)
            for (Eigen::Index m = 0; ok && m < P; ++m) {
                double re_im[2];
                ok = std::fread(re_im, sizeof(double), 2, fp) == 2;
                C(m, j) = {re_im[0], re_im[1]};
            }
        if (ok) {
            traj.times.push_back(t);
            traj.orbitals.push_back(std::move(C));
        }
    }
    std::fclose(fp);
    if (!ok) throw std::runtime_error("truncated checkpoint: " + path);
    return traj;
}

void OperatorPicardConfig::validate() const {
    if (!(T > 0.0)) throw ParamError("final time must be positive");
    if (n_t < 8) throw ParamError("need at least 8 time subintervals");
    if (!(tol > 0.0)) throw ParamError("tolerance must be positive");
}

OperatorPicardResult picard_operator_solve(const OrthonormalEnsemble& gamma0,
                                           const PotentialSpec& w,
                                           const OperatorPicardConfig& cfg) {
    cfg.validate();
    w.validate();
    gamma0.validate();
    const TorusGrid& grid = cfg.grid;
    const std::size_t P = grid.points();
    if (P > static_cast<std::size_t>(cfg.dense_cap))
        throw SizeError("dense dimension " + std::to_string(P) + " exceeds cap");
    GridModes gm = grid_modes(grid);
    auto what = what_on_grid(w.w, grid, gm);

    const int n_t = cfg.n_t;
    const double h = cfg.T / n_t;
    const std::size_t nodes = static_cast<std::size_t>(n_t) + 1;

    Eigen::MatrixXcd C0 = embed_ensemble(gamma0, grid, gm);
    for (int j = 0; j < C0.cols(); ++j)
        C0.col(j) *= std::sqrt(gamma0.weights[static_cast<std::size_t>(j)]);
    Eigen::MatrixXcd g_init = C0 * C0.adjoint();

    Eigen::VectorXcd step_phase(static_cast<Eigen::Index>(P));
    for (std::size_t m = 0; m < P; ++m)
        step_phase(static_cast<Eigen::Index>(m)) =
            phase_unit(h * static_cast<double>(gm.nsq[m]));

    auto conj_by_phase = [&](const Eigen::MatrixXcd& A) -> Eigen::MatrixXcd {
        // U A U^* with U = diag(step_phase)
        Eigen::MatrixXcd out = step_phase.asDiagonal() * A;
        out = out * step_phase.conjugate().asDiagonal();
        return out;
    };

    // free conjugation flow S(t_i)
    std::vector<Eigen::MatrixXcd> S(nodes);
    S[0] = g_init;
    for (std::size_t i = 1; i < nodes; ++i) S[i] = conj_by_phase(S[i - 1]);

    auto density_dense = [&](const Eigen::MatrixXcd& A) -> std::vector<double> {
        // rho(z) = sum_{xi,eta} A(xi,eta) e^{2 pi i z (xi - eta)}
        Eigen::MatrixXcd B(A.rows(), A.cols());
        std::vector<cd> buf(P);
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            for (std::size_t m = 0; m < P; ++m) buf[m] = A(static_cast<Eigen::Index>(m), j);
            fft::backward(buf, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m) B(static_cast<Eigen::Index>(m), j) = buf[m];
        }
        // per sample row z: sum_eta B(z, eta) conj(e^{2 pi i z eta})
        std::vector<double> rho(P, 0.0);
        std::vector<cd> roots(static_cast<std::size_t>(grid.M));
        for (int j = 0; j < grid.M; ++j)
            roots[static_cast<std::size_t>(j)] = phase_unit(static_cast<double>(j) / grid.M);
        for (std::size_t z = 0; z < P; ++z) {
            cd acc(0.0, 0.0);
            for (std::size_t e = 0; e < P; ++e) {
                long expo = 0;
                for (int c = 0; c < grid.d; ++c)
                    expo += static_cast<long>(gm.digits[z][static_cast<std::size_t>(c)]) *
                            gm.digits[e][static_cast<std::size_t>(c)];
                acc += B(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(e)) *
                       std::conj(roots[static_cast<std::size_t>(expo % grid.M)]);
            }
            rho[z] = acc.real();
        }
        return rho;
    };

    auto apply_V = [&](const std::vector<double>& V, const Eigen::MatrixXcd& A) {
        Eigen::MatrixXcd out(A.rows(), A.cols());
        const double scale = grid.cell_weight();
        std::vector<cd> buf(P);
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            for (std::size_t m = 0; m < P; ++m) buf[m] = A(static_cast<Eigen::Index>(m), j);
            fft::backward(buf, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m) buf[m] *= V[m];
            fft::forward(buf, grid.d, grid.M);
            for (std::size_t m = 0; m < P; ++m)
                out(static_cast<Eigen::Index>(m), j) = buf[m] * scale;
        }
        return out;
    };

    auto ss_norm = [&](const Eigen::MatrixXcd& A) {
        Eigen::MatrixXcd B = A;
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            const double wgt =
                std::pow(1.0 + static_cast<double>(gm.nsq[static_cast<std::size_t>(i)]), 0.5 * cfg.s);
            B.row(i) *= wgt;
            B.col(i) *= wgt;
        }
        return schatten_norm(B, cfg.alpha_prime);
    };

    OperatorPicardResult res;
    res.times.resize(nodes);
    res.weights.assign(nodes, h);
    res.weights.front() = 0.5 * h;
    res.weights.back() = 0.5 * h;
    for (std::size_t i = 0; i < nodes; ++i) res.times[i] = h * static_cast<double>(i);
    res.gamma = S;
    res.rho.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) res.rho[i] = density_dense(res.gamma[i]);
    res.history.n_t = n_t;

    std::vector<Eigen::MatrixXcd> R(nodes);
    int stall = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        for (std::size_t i = 0; i < nodes; ++i) {
            auto V = mean_field(res.rho[i], what, grid);
            Eigen::MatrixXcd Vg = apply_V(V, res.gamma[i]);
            Eigen::MatrixXcd gV = apply_V(V, res.gamma[i].adjoint()).adjoint();
            R[i] = cd(0.0, -1.0) * (Vg - gV);
        }
        // J_i = U (J_{i-1} + h/2 R_{i-1}) U^* + h/2 R_i
        Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(P),
                                                    static_cast<Eigen::Index>(P));
        double update = 0.0;
        std::vector<double> rho_dev(nodes, 0.0);
        std::vector<Eigen::MatrixXcd> gnew(nodes);
        gnew[0] = S[0];
        for (std::size_t i = 1; i < nodes; ++i) {
            J = conj_by_phase(J + 0.5 * h * R[i - 1]) + 0.5 * h * R[i];
            gnew[i] = S[i] + J;
        }
        std::vector<std::vector<double>> rho_new(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            rho_new[i] = density_dense(gnew[i]);
            update = std::max(update, ss_norm(gnew[i] - res.gamma[i]));
            std::vector<cd> diff(P);
            for (std::size_t m = 0; m < P; ++m) diff[m] = rho_new[i][m] - res.rho[i][m];
            rho_dev[i] = mixed_space_norm_samples(diff, grid.d, grid.k, grid.M, cfg.r, cfg.rt);
        }
        update += time_q_norm(rho_dev, res.weights, cfg.q);
        res.gamma.swap(gnew);
        res.rho.swap(rho_new);
        if (!res.history.distances.empty()) {
            const double prev = res.history.distances.back();
            res.history.contraction_ratio = prev > 0.0 ? update / prev : 0.0;
            stall = (prev > 0.0 && update >= prev) ? stall + 1 : 0;
        }
        res.history.distances.push_back(update);
        res.history.iterations = it;
        if (update < cfg.tol) {
            res.history.converged = true;
            break;
        }
        if (stall >= 3)
            throw DivergenceError("operator iteration stopped contracting (ratio " +
                                      std::to_string(res.history.contraction_ratio) +
                                      "); shrink T or the data",
                                  res.history.contraction_ratio);
    }
    return res;
}

}  // namespace toruslab
