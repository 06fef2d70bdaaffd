#pragma once

// Uniformly sampled real time series: windowed FFT magnitude spectra, peak
// picking, boxcar averaging and harmonic power fractions. Frequencies are
// angular (a component exp(-i w tau) appears at w), in units of Omega.

#include "qring/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace qring::signal {

namespace detail {

/// FFTW planning is not thread-safe; execution of distinct plans is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

/// Out-of-place complex DFT of fixed length (FFTW sign convention).
class ComplexFft {
public:
    ComplexFft(int n, int sign) : n_(n) {
        if (n <= 0) throw qring::parameter_error("ComplexFft: length must be positive");
        in_ = fftw_alloc_complex(static_cast<std::size_t>(n));
        out_ = fftw_alloc_complex(static_cast<std::size_t>(n));
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        plan_ = fftw_plan_dft_1d(n, in_, out_, sign, FFTW_ESTIMATE);
    }
    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;
    ~ComplexFft() {
        {
            std::lock_guard<std::mutex> lock(detail::planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }

    int size() const { return n_; }
    std::complex<double>* input() { return reinterpret_cast<std::complex<double>*>(in_); }
    const std::complex<double>* output() const { return reinterpret_cast<const std::complex<double>*>(out_); }
    void execute() { fftw_execute(plan_); }

private:
    int n_;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

enum class Window { rectangular, hann, flattop };

inline const char* window_name(Window w) {
    switch (w) {
    case Window::hann: return "hann";
    case Window::flattop: return "flattop";
    default: return "rectangular";
    }
}

inline Window parse_window(const std::string& s) {
    if (s == "rectangular" || s == "rect") return Window::rectangular;
    if (s == "hann") return Window::hann;
    if (s == "flattop") return Window::flattop;
    throw qring::parameter_error("unknown window '" + s + "' (rectangular, hann, flattop)");
}

/// Periodic-form window coefficients of length n.
inline std::vector<double> window_coefficients(Window w, std::size_t n) {
    std::vector<double> c(n, 1.0);
    if (w == Window::rectangular) return c;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        if (w == Window::hann) {
            c[i] = 0.5 - 0.5 * std::cos(x);
        } else {
            // Flat-top (SRS / HFT-style five-term cosine sum).
            c[i] = 0.21557895 - 0.41663158 * std::cos(x) + 0.277263158 * std::cos(2 * x) -
                   0.083578947 * std::cos(3 * x) + 0.006947368 * std::cos(4 * x);
        }
    }
    return c;
}

struct SpectrumOptions {
    Window window = Window::rectangular;
    bool remove_mean = false;
    /// Highest angular frequency the caller expects in the series; 0 skips the check.
    double predicted_max_frequency = 0.0;
};

struct FrequencySpectrum {
    std::vector<double> frequencies;  // angular, bin k at 2 pi k / (n dt)
    std::vector<double> amplitudes;   // window-corrected cosine amplitude per bin
    std::vector<double> magnitudes;   // amplitudes / max (all zero for a zero series)
    Window window = Window::rectangular;
    double dt = 0.0;
    std::size_t samples = 0;
    double bin_width() const { return samples ? 2.0 * std::numbers::pi / (static_cast<double>(samples) * dt) : 0.0; }
    double nyquist() const { return std::numbers::pi / dt; }
};

/// One-sided magnitude spectrum of a real series sampled at spacing dt.
inline FrequencySpectrum fourier_spectrum(const std::vector<double>& series, double dt, const SpectrumOptions& opts = {}) {
    if (series.size() < 2) throw qring::parameter_error("fourier_spectrum: need at least two samples");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw qring::parameter_error("fourier_spectrum: dt must be positive");
    if (opts.predicted_max_frequency > 0.0 && opts.predicted_max_frequency >= std::numbers::pi / dt)
        throw qring::sampling_error("fourier_spectrum: predicted content up to " +
                                    std::to_string(opts.predicted_max_frequency) + " exceeds the Nyquist frequency " +
                                    std::to_string(std::numbers::pi / dt) + "; decrease the time step");
    const std::size_t n = series.size();
    const double mean = opts.remove_mean ? std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n) : 0.0;
    const auto w = window_coefficients(opts.window, n);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    ComplexFft fft(static_cast<int>(n), FFTW_FORWARD);
    for (std::size_t i = 0; i < n; ++i) fft.input()[i] = w[i] * (series[i] - mean);
    fft.execute();

    FrequencySpectrum s;
    s.window = opts.window;
    s.dt = dt;
    s.samples = n;
    const std::size_t half = n / 2;
    s.frequencies.resize(half + 1);
    s.amplitudes.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        s.frequencies[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * dt);
        const double scale = (k == 0 || (n % 2 == 0 && k == half)) ? 1.0 : 2.0;
        s.amplitudes[k] = scale * std::abs(fft.output()[k]) / wsum;
    }
    const double peak = *std::max_element(s.amplitudes.begin(), s.amplitudes.end());
    s.magnitudes.resize(s.amplitudes.size(), 0.0);
    if (peak > 0.0)
        for (std::size_t k = 0; k < s.amplitudes.size(); ++k) s.magnitudes[k] = s.amplitudes[k] / peak;
    return s;
}

/// Indices of strict local maxima whose normalised magnitude exceeds rel_threshold.
inline std::vector<std::size_t> find_peaks(const FrequencySpectrum& s, double rel_threshold) {
    std::vector<std::size_t> out;
    const auto& m = s.magnitudes;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k] <= rel_threshold) continue;
        const bool left = k == 0 || m[k] > m[k - 1];
        const bool right = k + 1 == m.size() || m[k] >= m[k + 1];
        if (left && right) out.push_back(k);
    }
    return out;
}

/// Centred boxcar average over 2h+1 samples, h = round((window/dt - 1)/2).
/// Edges use symmetric reflection about the end samples.
inline std::vector<double> moving_average(const std::vector<double>& series, double dt, double window) {
    if (!(dt > 0.0) || !(window > 0.0)) throw qring::parameter_error("moving_average: dt and window must be positive");
    const long h = std::lround((window / dt - 1.0) / 2.0);
    const long n = static_cast<long>(series.size());
    if (h < 1) throw qring::parameter_error("moving_average: window shorter than three samples");
    if (2 * h + 1 > n) throw qring::parameter_error("moving_average: window longer than the series");
    auto at = [&](long i) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
        return series[static_cast<std::size_t>(i)];
    };
    std::vector<double> out(series.size());
    const double inv = 1.0 / static_cast<double>(2 * h + 1);
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        for (long j = i - h; j <= i + h; ++j) s += at(j);
        out[static_cast<std::size_t>(i)] = s * inv;
    }
    return out;
}

struct HarmonicContent {
    double fundamental = 0.0;
    double ac_power = 0.0;                // variance of the series
    std::vector<double> power_fraction;   // index h-1 for harmonic h
};

/// Power of the harmonics h * fundamental (h = 1..count) as fractions of the
/// AC power. The series must span an integer number of fundamental periods.
inline HarmonicContent harmonic_content(const std::vector<double>& series, double dt, double fundamental, int count) {
    if (series.size() < 4) throw qring::parameter_error("harmonic_content: series too short");
    if (!(fundamental > 0.0) || count < 1) throw qring::parameter_error("harmonic_content: bad fundamental or count");
    const std::size_t n = series.size();
    const double span = static_cast<double>(n) * dt;
    const double cycles = span * fundamental / (2.0 * std::numbers::pi);
    if (std::abs(cycles - std::round(cycles)) > 1e-6 * std::max(1.0, cycles) || std::round(cycles) < 1.0)
        throw qring::parameter_error("harmonic_content: series must span an integer number of fundamental periods");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    HarmonicContent hc;
    hc.fundamental = fundamental;
    for (double x : series) hc.ac_power += (x - mean) * (x - mean);
    hc.ac_power /= static_cast<double>(n);
    for (int h = 1; h <= count; ++h) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = h * fundamental * static_cast<double>(i) * dt;
            a += (series[i] - mean) * std::cos(ph);
            b += (series[i] - mean) * std::sin(ph);
        }
        a *= 2.0 / static_cast<double>(n);
        b *= 2.0 / static_cast<double>(n);
        const double p = 0.5 * (a * a + b * b);
        hc.power_fraction.push_back(hc.ac_power > 0.0 ? p / hc.ac_power : 0.0);
    }
    return hc;
}

} // namespace qring::signal
