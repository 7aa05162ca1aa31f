#include "sqzpulse/fft.hpp"

#include <fftw3.h>

#include <map>
#include <stdexcept>

namespace sqz::fft {

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

namespace {

// One persistent in-place plan per (size, direction). Buffers are reused,
// so transforms of a hot size (the Monte-Carlo record length) cost no setup.
struct Plans {
    struct Entry {
        fftw_plan plan = nullptr;
        fftw_complex* buf = nullptr;
        size_t n = 0;
    };
    std::map<std::pair<size_t, int>, Entry> entries;

    Entry& get(size_t n, int sign) {
        auto [it, inserted] = entries.try_emplace({n, sign});
        Entry& e = it->second;
        if (inserted) {
            e.n = n;
            e.buf = fftw_alloc_complex(n);
            if (!e.buf)
                throw std::bad_alloc();
            e.plan = fftw_plan_dft_1d(int(n), e.buf, e.buf, sign, FFTW_ESTIMATE);
            if (!e.plan)
                throw std::runtime_error("fftw_plan_dft_1d failed");
        }
        return e;
    }

    ~Plans() {
        for (auto& [key, e] : entries) {
            if (e.plan)
                fftw_destroy_plan(e.plan);
            if (e.buf)
                fftw_free(e.buf);
        }
    }
};

Plans& plans() {
    static Plans p;
    return p;
}

} // namespace

void transform(std::vector<std::complex<double>>& x, bool inverse) {
    const size_t n = x.size();
    if (n == 0)
        return;
    auto& e = plans().get(n, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
    for (size_t i = 0; i < n; ++i) {
        e.buf[i][0] = x[i].real();
        e.buf[i][1] = x[i].imag();
    }
    fftw_execute(e.plan);
    const double scale = inverse ? 1.0 / double(n) : 1.0;
    for (size_t i = 0; i < n; ++i)
        x[i] = std::complex<double>(e.buf[i][0] * scale, e.buf[i][1] * scale);
}

} // namespace sqz::fft
