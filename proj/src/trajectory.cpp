#include "toruslab/trajectory.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "toruslab/errors.hpp"

namespace toruslab {

TimeRule TimeRule::periodic_uniform(int n, double t0, double len) {
    if (n < 1) throw ParamError("need at least one time sample");
    TimeRule r;
    r.times.resize(n);
    r.weights.assign(n, len / n);
    for (int i = 0; i < n; ++i) r.times[i] = t0 + len * i / n;
    return r;
}

TimeRule TimeRule::closed_trapezoid(int n, double t0, double t1) {
    if (n < 1) throw ParamError("need at least one subinterval");
    TimeRule r;
    const double h = (t1 - t0) / n;
    r.times.resize(n + 1);
    r.weights.assign(n + 1, h);
    r.weights.front() = 0.5 * h;
    r.weights.back() = 0.5 * h;
    for (int i = 0; i <= n; ++i) r.times[i] = t0 + h * i;
    return r;
}

TimeRule TimeRule::gauss_legendre(int n, double t0, double t1) {
    if (n < 1) throw ParamError("need at least one node");
    TimeRule r;
    r.times.resize(n);
    r.weights.resize(n);
    // Newton on P_n with the usual Chebyshev-flavored initial guesses
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            if (n == 1) { p1 = x; }
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            double pn = (n == 1) ? x : p1;
            double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double half = 0.5 * (t1 - t0);
        r.times[static_cast<std::size_t>(n - 1 - i)] = t0 + half * (1.0 + x);
        r.weights[static_cast<std::size_t>(n - 1 - i)] =
            half * 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

void Trajectory::validate() const {
    if (times.empty()) throw ParamError("empty trajectory");
    if (times.size() != fields.size() || times.size() != weights.size())
        throw ParamError("trajectory arrays disagree in length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1]) throw ParamError("trajectory times must increase");
}

Trajectory free_trajectory(const SpectralField& f, const TimeRule& rule) {
    Trajectory tr;
    tr.times = rule.times;
    tr.weights = rule.weights;
    tr.fields.reserve(rule.times.size());
    for (double t : rule.times) tr.fields.push_back(free_propagate(f, t));
    return tr;
}

namespace {
constexpr char kTrajMagic[4] = {'T', 'S', 'T', '1'};
}

void save_trajectory(const Trajectory& traj, int M, const std::string& path) {
    traj.validate();
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    const auto& lat = traj.fields.front().lattice();
    std::int32_t hdr[5] = {lat.d(), lat.k(), lat.N(), M, static_cast<std::int32_t>(traj.size())};
    bool ok = std::fwrite(kTrajMagic, 1, 4, fp) == 4 &&
              std::fwrite(hdr, sizeof(std::int32_t), 5, fp) == 5;
    for (std::size_t i = 0; ok && i < traj.size(); ++i) {
        double tw[2] = {traj.times[i], traj.weights[i]};
        ok = std::fwrite(tw, sizeof(double), 2, fp) == 2;
        for (const cd& a : traj.fields[i].coeffs()) {
            double re_im[2] = {a.real(), a.imag()};
            ok = ok && std::fwrite(re_im, sizeof(double), 2, fp) == 2;
        }
    }
    std::fclose(fp);
    if (!ok) throw std::runtime_error("short write: " + path);
}

std::pair<Trajectory, int> load_trajectory(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4];
    std::int32_t hdr[5];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kTrajMagic, 4) != 0 ||
        std::fread(hdr, sizeof(std::int32_t), 5, fp) != 5) {
        std::fclose(fp);
        throw std::runtime_error("bad trajectory file header: " + path);
    }
    auto lat = build_lattice(hdr[0], hdr[1], hdr[2]);
    Trajectory traj;
    for (std::int32_t i = 0; i < hdr[4]; ++i) {
        double tw[2];
        std::vector<cd> coeffs(lat->size());
        bool ok = std::fread(tw, sizeof(double), 2, fp) == 2;
        for (cd& a : coeffs) {
            double re_im[2];
            ok = ok && std::fread(re_im, sizeof(double), 2, fp) == 2;
            a = {re_im[0], re_im[1]};
        }
        if (!ok) {
            std::fclose(fp);
            throw std::runtime_error("truncated trajectory file: " + path);
        }
        traj.times.push_back(tw[0]);
        traj.weights.push_back(tw[1]);
        traj.fields.emplace_back(lat, std::move(coeffs));
    }
    std::fclose(fp);
    return {std::move(traj), hdr[3]};
}

}  // namespace toruslab
