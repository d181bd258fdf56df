#ifndef HELIX_ANALYSIS_HPP
#define HELIX_ANALYSIS_HPP

// Order parameter, winding number, phase slips, ensemble statistics and the
// Kibble-Zurek closed forms.
//
// The discrete order parameter is the staggered transverse displacement
//   A_j = (-1)^j (y_j + i z_j),
// i.e. the smooth envelope of the zigzag mode. Without the staggering a
// planar zigzag would register a winding of +-N/2. Ions keep the labels they
// were given at initialization (ascending x); check_ring_order() verifies
// that they have not changed their cyclic order along the ring.

#include <helix/chain_state.hpp>
#include <helix/errors.hpp>
#include <helix/quench.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace helix
{

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Wrap an angle difference into (-pi, pi]; an exact tie at -pi goes to +pi.
inline double wrap_phase(double d)
{
    d = std::remainder(d, two_pi); // [-pi, pi]
    if(d <= -std::numbers::pi) d += two_pi;
    return d;
}

struct order_snapshot
{
    double time = 0.0;
    std::vector<std::complex<double>> amplitude;
    std::vector<double> phase; // NaN where |A_j| == 0 (undefined)
    int winding = 0;

    std::size_t size() const { return amplitude.size(); }

    double mean_abs_amplitude() const
    {
        double s = 0.0;
        for(const auto& a : amplitude) s += std::abs(a);
        return amplitude.empty() ? 0.0 : s / static_cast<double>(amplitude.size());
    }

    double max_abs_amplitude() const
    {
        double m = 0.0;
        for(const auto& a : amplitude) m = std::max(m, std::abs(a));
        return m;
    }
};

// Builds a snapshot from complex samples with no staggering applied.
inline order_snapshot snapshot_from_field(std::span<const std::complex<double>> field, double time = 0.0)
{
    order_snapshot s;
    s.time = time;
    s.amplitude.assign(field.begin(), field.end());
    s.phase.resize(field.size());
    for(std::size_t j = 0; j < field.size(); ++j)
    {
        s.phase[j] = std::abs(field[j]) > 0.0 ? std::arg(field[j]) : std::numeric_limits<double>::quiet_NaN();
        if(s.phase[j] == -std::numbers::pi) s.phase[j] = std::numbers::pi; // keep theta in (-pi, pi]
    }
    return s;
}

// Staggered amplitudes and phases; the winding field is left at 0.
inline order_snapshot order_parameter(const chain_state& state)
{
    std::vector<std::complex<double>> a(state.size());
    for(std::size_t j = 0; j < a.size(); ++j)
    {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        a[j] = {sign * state.positions[j].y, sign * state.positions[j].z};
    }
    return snapshot_from_field(a, state.time);
}

inline constexpr double integrality_tolerance = 1e-9;

// (1/2 pi) * sum of wrapped nearest-neighbour phase differences around the
// ring. Sites with undefined phase are skipped, so the difference is taken
// directly between their defined neighbours.
inline int winding_number(const order_snapshot& s)
{
    const std::size_t n = s.phase.size();
    std::vector<double> defined;
    defined.reserve(n);
    for(double p : s.phase)
    {
        if(!std::isnan(p)) defined.push_back(p);
    }
    if(defined.size() < 2) return 0;

    double sum = 0.0;
    for(std::size_t j = 0; j < defined.size(); ++j)
    {
        const double next = defined[(j + 1) % defined.size()];
        sum += wrap_phase(next - defined[j]);
    }
    const double w = sum / two_pi;
    const double rounded = std::round(w);
    const double residual = w - rounded;
    if(!(std::abs(residual) < integrality_tolerance))
    {
        throw integrality_violation(residual, "winding_number: phase sum is not an integer multiple of 2 pi (residual "
                                                  + std::to_string(residual) + ")");
    }
    return static_cast<int>(rounded);
}

inline order_snapshot measure(const chain_state& state)
{
    auto s = order_parameter(state);
    s.winding = winding_number(s);
    return s;
}

// Throws ordering_violation unless the ions, taken in label order, go around
// the ring exactly once (no two ions have swapped their order along x).
inline void check_ring_order(const chain_state& state)
{
    const std::size_t n = state.size();
    if(n < 3) return;
    const double c = state.box_length;
    double total = 0.0;
    for(std::size_t j = 0; j < n; ++j)
    {
        total += wrap_x(state.positions[(j + 1) % n].x - state.positions[j].x, c);
    }
    const double turns = total / c;
    if(std::abs(turns - 1.0) > 1e-6)
    {
        throw ordering_violation("ions changed cyclic order along the ring at t = " + std::to_string(state.time));
    }
}

struct winding_trace
{
    std::uint64_t seed = 0;
    quench_schedule schedule;
    std::vector<order_snapshot> snapshots;
    std::vector<double> ion_x; // longitudinal positions at each snapshot, row-major [snapshot][ion]
    int final_winding = 0;
};

struct phase_slip_event
{
    double time = 0.0;
    std::size_t index = 0;

    bool operator==(const phase_slip_event&) const = default;
};

// Localized zeros of the order parameter after symmetry breaking: sites with
// |A_j| < threshold while the chain-averaged |A| exceeds 3 * threshold.
// Detections of the same site in consecutive snapshots are one event.
inline std::vector<phase_slip_event> phase_slip_events(const winding_trace& trace, double amplitude_threshold)
{
    if(!(amplitude_threshold > 0.0)) throw domain_error("phase_slip_events: threshold must be > 0");
    std::vector<phase_slip_event> events;
    std::vector<bool> previous;
    for(const auto& snap : trace.snapshots)
    {
        std::vector<bool> current(snap.size(), false);
        if(snap.mean_abs_amplitude() > 3.0 * amplitude_threshold)
        {
            for(std::size_t j = 0; j < snap.size(); ++j)
            {
                if(std::abs(snap.amplitude[j]) < amplitude_threshold)
                {
                    current[j] = true;
                    if(j >= previous.size() || !previous[j]) events.push_back({snap.time, j});
                }
            }
        }
        previous = std::move(current);
    }
    return events;
}

struct ensemble_summary
{
    std::size_t n = 0;
    double mean = 0.0;
    double mean_abs = 0.0;
    double sigma = 0.0;       // population standard deviation
    double skewness = 0.0;    // 0 when sigma == 0
    double stderr_abs = 0.0;  // standard error of mean_abs
    int min_w = 0;
    std::vector<std::size_t> histogram; // counts for W = min_w, min_w + 1, ...

    std::size_t count(int w) const
    {
        const long k = static_cast<long>(w) - min_w;
        return (k < 0 || k >= static_cast<long>(histogram.size())) ? 0 : histogram[static_cast<std::size_t>(k)];
    }
};

inline ensemble_summary ensemble_stats(std::span<const int> windings)
{
    if(windings.empty()) throw domain_error("ensemble_stats: no samples");
    ensemble_summary r;
    r.n = windings.size();
    const double n = static_cast<double>(r.n);

    double sum = 0.0, sum_abs = 0.0;
    for(int w : windings)
    {
        sum += w;
        sum_abs += std::abs(w);
    }
    r.mean = sum / n;
    r.mean_abs = sum_abs / n;

    double m2 = 0.0, m3 = 0.0, m2_abs = 0.0;
    for(int w : windings)
    {
        const double d = w - r.mean;
        m2 += d * d;
        m3 += d * d * d;
        const double da = std::abs(w) - r.mean_abs;
        m2_abs += da * da;
    }
    m2 /= n;
    m3 /= n;
    r.sigma = std::sqrt(m2);
    r.skewness = m2 > 0.0 ? m3 / (m2 * r.sigma) : 0.0;
    r.stderr_abs = r.n > 1 ? std::sqrt(m2_abs / (n - 1.0)) / std::sqrt(n) : 0.0;

    const auto [lo, hi] = std::minmax_element(windings.begin(), windings.end());
    r.min_w = *lo;
    r.histogram.assign(static_cast<std::size_t>(*hi - *lo + 1), 0);
    for(int w : windings) ++r.histogram[static_cast<std::size_t>(w - *lo)];
    return r;
}

struct rate_record
{
    double tau_q = 0.0;
    std::size_t n_runs = 0;
    double mean_abs_w = 0.0;
    double sigma_w = 0.0;
    double skewness = 0.0;
    double stderr_abs = 0.0;
    int min_w = 0;
    std::vector<std::size_t> histogram;

    double ln_inv_rate() const { return -std::log(tau_q); }
};

struct rate_window
{
    double min_ln_inv_rate = -std::numeric_limits<double>::infinity();
    double max_ln_inv_rate = -4.0;

    bool contains(double x) const { return x >= min_ln_inv_rate && x <= max_ln_inv_rate; }
};

struct power_law_fit
{
    double exponent = 0.0;
    double intercept = 0.0;   // ln of the prefactor
    double prefactor = 1.0;
    double correlation = 0.0; // Pearson r of the log-log points
    double r_squared = 0.0;
    std::size_t n_points = 0;
    rate_window window;

    double evaluate(double tau_q) const { return prefactor * std::pow(1.0 / tau_q, exponent); }
};

// Least squares on (ln(1/tau_q), ln <|W|>) over records inside the window.
inline power_law_fit fit_power_law(std::span<const rate_record> records, rate_window window = {})
{
    std::vector<double> xs, ys;
    for(const auto& r : records)
    {
        const double x = r.ln_inv_rate();
        if(window.contains(x) && r.mean_abs_w > 0.0)
        {
            xs.push_back(x);
            ys.push_back(std::log(r.mean_abs_w));
        }
    }
    if(xs.size() < 3) throw domain_error("fit_power_law: fewer than 3 usable records in the window");

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for(std::size_t i = 0; i < xs.size(); ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for(std::size_t i = 0; i < xs.size(); ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if(!(sxx > 0.0)) throw domain_error("fit_power_law: all records share one rate");

    power_law_fit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    f.prefactor = std::exp(f.intercept);
    f.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    f.r_squared = f.correlation * f.correlation;
    f.n_points = xs.size();
    f.window = window;
    return f;
}

// <|W|> ~ sqrt(N / (6 pi omega0)) * (eta delta0 / tau_q)^(1/8), natural units.
inline double kzm_predicted_mean_abs_w(double n_ions, double eta, double delta0, double tau_q)
{
    return std::sqrt(n_ions / (6.0 * std::numbers::pi)) * std::pow(eta * delta0 / tau_q, 0.125);
}

struct freeze_out
{
    double t_hat = 0.0;     // time before the critical point at which relaxation freezes
    double delta_hat = 0.0; // control parameter at t_hat
    double xi_hat = 0.0;    // frozen correlation length, units of a
};

// Mean-field exponents (nu = 1/2, z = 2) in the overdamped regime: relaxation
// time eta/delta, correlation length 1/sqrt(delta). Matching eta/delta(t) = t
// with delta(t) = delta0 t / tau_q gives t_hat = sqrt(eta tau_q / delta0).
inline freeze_out kzm_freeze_out(double eta, double delta0, double tau_q)
{
    freeze_out f;
    f.t_hat = std::sqrt(eta * tau_q / delta0);
    f.delta_hat = delta0 * f.t_hat / tau_q;
    f.xi_hat = 1.0 / std::sqrt(f.delta_hat);
    return f;
}

// Root mean square winding of C / xi independent phases uniform in [-pi, pi).
inline double sigma_w_from_domains(double circumference, double xi_hat)
{
    return std::sqrt(std::numbers::pi * std::numbers::pi * circumference / (3.0 * xi_hat)) / two_pi;
}

// Half-normal identity: <|W|> = sqrt(2/pi) sigma for zero-mean Gaussian W.
inline double mean_abs_from_sigma(double sigma)
{
    return sigma * std::sqrt(2.0 / std::numbers::pi);
}

} // namespace helix

#endif // HELIX_ANALYSIS_HPP
