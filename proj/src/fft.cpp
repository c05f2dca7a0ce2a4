#include "toruslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "toruslab/errors.hpp"

namespace toruslab::fft {

namespace {

std::mutex plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> plan_cache;

fftw_plan plan_for(int d, int M, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_tuple(d, M, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(d), M);
    // FFTW_UNALIGNED lets the cached plan run on any caller buffer.
    fftw_plan p = fftw_plan_dft(d, dims.data(), buf, buf, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw NumericError("fftw plan creation failed");
    plan_cache.emplace(key, p);
    return p;
}

void execute(std::vector<cd>& data, int d, int M, int sign) {
    std::size_t expected = 1;
    for (int i = 0; i < d; ++i) expected *= static_cast<std::size_t>(M);
    if (data.size() != expected) throw ParamError("fft buffer size does not match M^d");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan p = plan_for(d, M, sign, buf);
    fftw_execute_dft(p, buf, buf);
}

}  // namespace

void forward(std::vector<cd>& data, int d, int M) { execute(data, d, M, FFTW_FORWARD); }
void backward(std::vector<cd>& data, int d, int M) { execute(data, d, M, FFTW_BACKWARD); }

}  // namespace toruslab::fft
