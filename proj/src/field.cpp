#include "toruslab/field.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "toruslab/errors.hpp"
#include "toruslab/rng.hpp"

namespace toruslab {

namespace {

// row-major index of the wrapped frequency xi mod M
std::size_t wrapped_index(std::span<const std::int32_t> xi, int d, int M) {
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
        int w = xi[i] % M;
        if (w < 0) w += M;
        idx = idx * static_cast<std::size_t>(M) + static_cast<std::size_t>(w);
    }
    return idx;
}

void check_band(const FrequencyLattice& lat, const TorusGrid& grid) {
    if (grid.d != lat.d())
        throw ParamError("grid dimension does not match lattice");
    if (grid.M < 2 * lat.N() + 1)
        throw AliasingError("grid with M=" + std::to_string(grid.M) +
                            " undersamples band N=" + std::to_string(lat.N()));
}

}  // namespace

SpectralField::SpectralField(LatticePtr lattice, std::vector<cd> coeffs)
    : lat_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (!lat_) throw ParamError("null lattice");
    if (coeffs_.size() != lat_->size())
        throw ParamError("coefficient count does not match lattice size");
}

SpectralField& SpectralField::operator=(const SpectralField& o) {
    if (this != &o) {
        lat_ = o.lat_;
        coeffs_ = o.coeffs_;
        std::lock_guard<std::mutex> lock(cache_mutex_);
        cache_M_ = 0;
        cache_.reset();
    }
    return *this;
}

SpectralField SpectralField::zero(LatticePtr lattice) {
    std::vector<cd> c(lattice->size(), cd(0.0, 0.0));
    return SpectralField(std::move(lattice), std::move(c));
}

SpectralField SpectralField::plane_wave(LatticePtr lattice, std::span<const int> xi, cd amplitude) {
    std::vector<cd> c(lattice->size(), cd(0.0, 0.0));
    c[lattice->index_of(xi)] = amplitude;
    return SpectralField(std::move(lattice), std::move(c));
}

double SpectralField::l2_norm() const {
    double s = 0.0;
    for (const cd& a : coeffs_) s += std::norm(a);
    return std::sqrt(s);
}

std::shared_ptr<const std::vector<cd>> SpectralField::samples(const TorusGrid& grid) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (cache_ && cache_M_ == grid.M) return cache_;
    }
    auto s = std::make_shared<const std::vector<cd>>(synthesize(*lat_, coeffs_, grid));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_M_ = grid.M;
    cache_ = s;
    return s;
}

void synthesize_into(const FrequencyLattice& lat, std::span<const cd> coeffs,
                     const TorusGrid& grid, std::vector<cd>& buf) {
    check_band(lat, grid);
    if (coeffs.size() != lat.size()) throw ParamError("coefficient count mismatch");
    buf.assign(grid.points(), cd(0.0, 0.0));
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (coeffs[i] != cd(0.0, 0.0))
            buf[wrapped_index(lat.point(i), lat.d(), grid.M)] += coeffs[i];
    }
    fft::backward(buf, grid.d, grid.M);
}

std::vector<cd> synthesize(const FrequencyLattice& lat, std::span<const cd> coeffs,
                           const TorusGrid& grid) {
    std::vector<cd> buf;
    synthesize_into(lat, coeffs, grid, buf);
    return buf;
}

std::vector<cd> analyze(const FrequencyLattice& lat, std::span<const cd> samples,
                        const TorusGrid& grid) {
    check_band(lat, grid);
    if (samples.size() != grid.points()) throw ParamError("sample count mismatch");
    std::vector<cd> buf(samples.begin(), samples.end());
    fft::forward(buf, grid.d, grid.M);
    const double scale = grid.cell_weight();
    std::vector<cd> out(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i)
        out[i] = buf[wrapped_index(lat.point(i), lat.d(), grid.M)] * scale;
    return out;
}

SpectralField analyze_field(LatticePtr lat, std::span<const cd> samples, const TorusGrid& grid) {
    auto coeffs = analyze(*lat, samples, grid);
    return SpectralField(std::move(lat), std::move(coeffs));
}

SpectralField free_propagate(const SpectralField& f, double t) {
    const auto& lat = f.lattice();
    std::vector<cd> out(f.coeffs());
    for (std::size_t i = 0; i < lat.size(); ++i)
        out[i] *= phase_unit(t * static_cast<double>(lat.nsq(i)));
    return SpectralField(f.lattice_ptr(), std::move(out));
}

SpectralField apply_multiplier(const SpectralField& f, const Multiplier& m) {
    const auto& lat = f.lattice();
    std::vector<cd> out(f.coeffs());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        LatticeSite site{lat.point(i), lat.nsq(i), lat.nsq_y(i)};
        cd v = m(site);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericError("multiplier produced a non-finite value");
        out[i] *= v;
    }
    return SpectralField(f.lattice_ptr(), std::move(out));
}

Multiplier bessel_multiplier(double s) {
    return [s](const LatticeSite& p) -> cd {
        return std::pow(1.0 + static_cast<double>(p.nsq), 0.5 * s);
    };
}

Multiplier bessel_y_multiplier(double s) {
    return [s](const LatticeSite& p) -> cd {
        return std::pow(1.0 + static_cast<double>(p.nsq_y), 0.5 * s);
    };
}

Multiplier riesz_multiplier(double s) {
    return [s](const LatticeSite& p) -> cd {
        if (p.nsq == 0) return s == 0.0 ? 1.0 : 0.0;
        return std::pow(static_cast<double>(p.nsq), 0.5 * s);
    };
}

namespace {
constexpr char kMagic[4] = {'T', 'S', 'F', '1'};
}

void save_field(const SpectralField& f, int M, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    const auto& lat = f.lattice();
    std::int32_t hdr[4] = {lat.d(), lat.k(), lat.N(), M};
    bool ok = std::fwrite(kMagic, 1, 4, fp) == 4 && std::fwrite(hdr, sizeof(std::int32_t), 4, fp) == 4;
    for (const cd& a : f.coeffs()) {
        double re_im[2] = {a.real(), a.imag()};
        ok = ok && std::fwrite(re_im, sizeof(double), 2, fp) == 2;
    }
    std::fclose(fp);
    if (!ok) throw std::runtime_error("short write: " + path);
}

std::pair<SpectralField, int> load_field(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4];
    std::int32_t hdr[4];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kMagic, 4) != 0 ||
        std::fread(hdr, sizeof(std::int32_t), 4, fp) != 4) {
        std::fclose(fp);
        throw std::runtime_error("bad field file header: " + path);
    }
    auto lat = build_lattice(hdr[0], hdr[1], hdr[2]);
    std::vector<cd> coeffs(lat->size());
    for (cd& a : coeffs) {
        double re_im[2];
        if (std::fread(re_im, sizeof(double), 2, fp) != 2) {
            std::fclose(fp);
            throw std::runtime_error("truncated field file: " + path);
        }
        a = {re_im[0], re_im[1]};
    }
    std::fclose(fp);
    return {SpectralField(std::move(lat), std::move(coeffs)), hdr[3]};
}

SpectralField random_field(LatticePtr lattice, std::uint64_t seed, std::uint64_t salt) {
    auto eng = make_engine(seed, salt);
    auto c = gaussian_coeffs(lattice->size(), eng);
    return SpectralField(std::move(lattice), std::move(c));
}

}  // namespace toruslab
