#ifndef HELIX_GL_FIELD_HPP
#define HELIX_GL_FIELD_HPP

// One-dimensional stochastic Ginzburg-Landau field on a periodic grid,
//   A_tt + eta A_t - h^2 A_xx + delta A + g |A|^2 A = eps(x, t),
// a coarse-grained counterpart of the ion chain. Each grid cell carries the
// mass of its length (dx in natural units), so thermal noise has per-cell
// velocity variance noise_kT / dx. The time stepper is the same half-kick /
// exact Ornstein-Uhlenbeck flight / half-kick splitting as for the ions.

#include <helix/analysis.hpp>
#include <helix/errors.hpp>
#include <helix/langevin.hpp>
#include <helix/quench.hpp>
#include <helix/random.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace helix
{

using cplx = std::complex<double>;

struct gl_params
{
    double h = 1.0;         // gradient stiffness
    double g = 1.0;         // quartic coupling
    double eta = 4.38;      // damping
    double noise_kT = 0.0;  // temperature of eps(x, t)
    int grid_points = 256;  // M
    double domain_length = 256.0; // C
    bool overdamped = false; // drop A_tt (first-order relaxational dynamics)

    double spacing() const { return domain_length / grid_points; }

    void validate() const
    {
        if(!(h > 0.0) || !(g > 0.0)) throw domain_error("gl_params: h and g must be > 0");
        if(!(eta >= 0.0) || !(noise_kT >= 0.0)) throw domain_error("gl_params: eta and noise_kT must be >= 0");
        if(grid_points < 8) throw domain_error("gl_params: need at least 8 grid points");
        if(!(domain_length > 0.0)) throw domain_error("gl_params: domain_length must be > 0");
        if(overdamped && !(eta > 0.0)) throw domain_error("gl_params: overdamped dynamics needs eta > 0");
    }

    // The fastest-growing wavelength at control parameter delta < 0 must span
    // at least four grid cells.
    bool resolves(double delta) const
    {
        if(delta >= 0.0) return true;
        const double k_max = std::sqrt(-delta) / h; // edge of the unstable band
        return k_max * spacing() <= std::numbers::pi / 2.0;
    }
};

struct gl_field
{
    double time = 0.0;
    std::vector<cplx> value;    // A on the grid
    std::vector<cplx> momentum; // dA/dt

    std::size_t size() const { return value.size(); }
};

inline gl_field gl_zero_field(const gl_params& p)
{
    gl_field f;
    f.value.assign(static_cast<std::size_t>(p.grid_points), cplx{});
    f.momentum.assign(static_cast<std::size_t>(p.grid_points), cplx{});
    return f;
}

// Deterministic force h^2 A_xx - delta A - g |A|^2 A with a central-difference
// Laplacian on the periodic grid.
inline void gl_force(const gl_field& f, const gl_params& p, double delta, std::vector<cplx>& out)
{
    const std::size_t m = f.size();
    out.resize(m);
    const double c = p.h * p.h / (p.spacing() * p.spacing());
    for(std::size_t j = 0; j < m; ++j)
    {
        const cplx a = f.value[j];
        const cplx lap = f.value[(j + 1) % m] + f.value[(j + m - 1) % m] - 2.0 * a;
        out[j] = c * lap - delta * a - p.g * std::norm(a) * a;
    }
}

// Discrete energy per unit (m/a): sum over cells of
//   dx/2 [ |A_t|^2 + delta |A|^2 + h^2 |dA/dx|^2 + g/2 |A|^4 ].
inline double gl_energy(const gl_field& f, const gl_params& p, double delta, bool include_kinetic = true)
{
    const std::size_t m = f.size();
    const double dx = p.spacing();
    double e = 0.0;
    for(std::size_t j = 0; j < m; ++j)
    {
        const cplx a = f.value[j];
        const cplx grad = (f.value[(j + 1) % m] - a) / dx;
        e += delta * std::norm(a) + p.h * p.h * std::norm(grad) + 0.5 * p.g * std::norm(a) * std::norm(a);
        if(include_kinetic) e += std::norm(f.momentum[j]);
    }
    return 0.5 * dx * e;
}

inline double gl_max_stable_dt(const gl_params& p, double delta)
{
    double bound = p.spacing() / p.h;
    if(p.eta > 0.0) bound = std::min(bound, 1.0 / p.eta);
    if(delta != 0.0) bound = std::min(bound, 1.0 / std::sqrt(std::abs(delta)));
    return 0.5 * bound;
}

class gl_integrator
{
public:
    gl_integrator(const gl_params& p, double dt, std::uint64_t seed)
        : params_(p), dt_(dt), flight_(p.eta, p.noise_kT / p.spacing(), dt), noise_(seed)
    {
        p.validate();
        if(!(dt > 0.0)) throw domain_error("gl_integrator: dt must be > 0");
    }

    const gl_params& params() const { return params_; }
    double dt() const { return dt_; }
    std::uint64_t step_index() const { return step_; }

    void step(gl_field& f, double delta)
    {
        if(!(dt_ < gl_max_stable_dt(params_, delta)))
        {
            throw domain_error("gl_step: dt violates the stability bound at delta = " + std::to_string(delta));
        }
        if(params_.overdamped) step_overdamped(f, delta);
        else step_inertial(f, delta);

        for(std::size_t j = 0; j < f.size(); ++j)
        {
            if(!std::isfinite(f.value[j].real() + f.value[j].imag()))
            {
                throw integration_blowup(step_, "non-finite Ginzburg-Landau field");
            }
        }
        f.time += dt_;
        ++step_;
    }

    // Global phase applied to all noise draws (U(1) equivariance checks).
    void set_noise_phase(double phi) { noise_rotation_ = std::polar(1.0, phi); }

private:
    void step_inertial(gl_field& f, double delta)
    {
        const std::size_t m = f.size();
        const double half = 0.5 * dt_;
        gl_force(f, params_, delta, force_);
        for(std::size_t j = 0; j < m; ++j) f.momentum[j] += half * force_[j];

        const bool noisy = flight_.sigma_v > 0.0 || flight_.sigma_x > 0.0;
        if(noisy)
        {
            gauss_.resize(4 * m);
            noise_.fill_normals(step_, gauss_);
        }
        for(std::size_t j = 0; j < m; ++j)
        {
            cplx dv{}, dx{};
            if(noisy)
            {
                const double* g = gauss_.data() + 4 * j;
                const cplx g1 = noise_rotation_ * cplx{g[0], g[2]};
                const cplx g2 = noise_rotation_ * cplx{g[1], g[3]};
                dv = flight_.sigma_v * g1;
                dx = flight_.coupling * g1 + flight_.sigma_x * g2;
            }
            f.value[j] += flight_.drift * f.momentum[j] + dx;
            f.momentum[j] = flight_.decay * f.momentum[j] + dv;
        }

        gl_force(f, params_, delta, force_);
        for(std::size_t j = 0; j < m; ++j) f.momentum[j] += half * force_[j];
    }

    // eta A_t = F + eps, Euler-Maruyama.
    void step_overdamped(gl_field& f, double delta)
    {
        const std::size_t m = f.size();
        gl_force(f, params_, delta, force_);
        const double amp = std::sqrt(2.0 * params_.noise_kT * dt_ / (params_.eta * params_.spacing()));
        if(amp > 0.0)
        {
            gauss_.resize(2 * m);
            noise_.fill_normals(step_, gauss_);
        }
        for(std::size_t j = 0; j < m; ++j)
        {
            cplx kick{};
            if(amp > 0.0) kick = amp * (noise_rotation_ * cplx{gauss_[2 * j], gauss_[2 * j + 1]});
            const cplx next = f.value[j] + dt_ / params_.eta * force_[j] + kick;
            f.momentum[j] = (next - f.value[j]) / dt_;
            f.value[j] = next;
        }
    }

    gl_params params_;
    double dt_;
    ou_flight flight_;
    noise_stream noise_;
    cplx noise_rotation_{1.0, 0.0};
    std::uint64_t step_ = 0;
    std::vector<cplx> force_;
    std::vector<double> gauss_;
};

struct dispersion_roots
{
    cplx plus;
    cplx minus;

    // Largest Im(Omega); positive means the mode grows.
    double growth_rate() const { return std::max(plus.imag(), minus.imag()); }
};

// Roots of Omega^2 + i eta Omega - (h^2 k^2 + delta) = 0, obtained by
// substituting A = alpha exp(-i Omega t + i k x) into the linearized equation:
//   Omega = -i eta / 2 +- sqrt(4 (h^2 k^2 + delta) - eta^2) / 2.
inline dispersion_roots gl_dispersion(const gl_params& p, double delta, double k)
{
    const cplx disc = std::sqrt(cplx{4.0 * (p.h * p.h * k * k + delta) - p.eta * p.eta, 0.0});
    const cplx base{0.0, -0.5 * p.eta};
    return {base + 0.5 * disc, base - 0.5 * disc};
}

inline int gl_winding(const gl_field& f)
{
    return winding_number(snapshot_from_field(f.value, f.time));
}

struct gl_run_result
{
    int final_winding = 0;
    std::vector<order_snapshot> trace;
};

// Quench of the field through delta = 0 driven by the same trap-frequency
// schedule as the ion chain: delta(t) = nu_t(t)^2 - nu_c^2. The field starts
// at A = 0 with thermal momenta.
inline gl_run_result gl_quench_run(const gl_params& p, const quench_schedule& q, double dt, std::uint64_t seed,
                                   std::size_t snapshots = 100)
{
    p.validate();
    gl_field f = gl_zero_field(p);
    gl_integrator integ(p, dt, seed);

    const double v_sigma = std::sqrt(p.noise_kT / p.spacing());
    if(v_sigma > 0.0 && !p.overdamped)
    {
        const noise_stream init(mix64(seed ^ 0x5bd1e995ULL));
        for(std::size_t j = 0; j < f.size(); ++j)
        {
            const auto [a, b] = init.normal_pair(0, j);
            f.momentum[j] = v_sigma * cplx{a, b};
        }
    }

    const auto total = static_cast<std::uint64_t>(std::llround(q.total_duration() / dt));
    const std::uint64_t stride = std::max<std::uint64_t>(1, total / std::max<std::size_t>(1, snapshots));
    gl_run_result r;
    for(std::uint64_t k = 0; k < total; ++k)
    {
        integ.step(f, delta(q, static_cast<double>(k) * dt));
        if((k + 1) % stride == 0 || k + 1 == total)
        {
            auto snap = snapshot_from_field(f.value, f.time);
            snap.winding = winding_number(snap);
            r.trace.push_back(std::move(snap));
        }
    }
    r.final_winding = r.trace.empty() ? gl_winding(f) : r.trace.back().winding;
    return r;
}

} // namespace helix

#endif // HELIX_GL_FIELD_HPP
