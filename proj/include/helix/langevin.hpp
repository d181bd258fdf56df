#ifndef HELIX_LANGEVIN_HPP
#define HELIX_LANGEVIN_HPP

// Langevin impulse integrator: a half kick with the deterministic force, an
// exact free Langevin flight (joint Ornstein-Uhlenbeck update of position and
// velocity under friction and white noise), then a second half kick. With
// eta = kT = 0 it reduces to velocity Verlet.

#include <helix/chain_state.hpp>
#include <helix/errors.hpp>
#include <helix/forces.hpp>
#include <helix/random.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace helix
{

struct thermostat_params
{
    double eta = 0.0;       // friction rate
    double kT = 0.0;        // thermal energy; mass is 1
    std::uint64_t seed = 0; // keys the per-trajectory noise stream
};

// Coefficients of the exact free flight over dt:
//   x' = x + drift * v + dX,   v' = decay * v + dV
// with (dX, dV) jointly Gaussian.
struct ou_flight
{
    double decay = 1.0;
    double drift = 0.0;
    double sigma_v = 0.0;   // sqrt(Var dV)
    double coupling = 0.0;  // Cov(dX, dV) / sigma_v
    double sigma_x = 0.0;   // sqrt(Var dX - coupling^2)

    ou_flight() = default;

    ou_flight(double eta, double kT, double dt)
    {
        const double s = eta * dt;
        decay = std::exp(-s);
        drift = s > 0.0 ? -std::expm1(-s) / eta : dt;

        // Var dX = kT/eta^2 * f(s), f(s) = 2s - 3 + 4e^-s - e^-2s. The closed
        // form cancels catastrophically for small s, so sum its Taylor series
        //   f(s) = sum_{n>=3} (-1)^(n+1) (2^n - 4) s^n / n!
        // below s = 0.1, in the form kT dt^2 * f(s) / s^2.
        double var_x;
        if(s < 0.1)
        {
            double term = s / 6.0; // s^3/3! / s^2
            double pow2 = 8.0;
            double sum = 0.0;
            for(int n = 3; n < 30; ++n)
            {
                sum += (n % 2 ? 1.0 : -1.0) * (pow2 - 4.0) * term;
                term *= s / (n + 1);
                pow2 *= 2.0;
            }
            var_x = kT * dt * dt * sum;
        }
        else
        {
            var_x = kT / (eta * eta) * (2.0 * s - 3.0 + 4.0 * decay - decay * decay);
        }
        const double var_v = -kT * std::expm1(-2.0 * s);
        const double cov = kT * drift * drift * eta; // kT/eta * (1 - e^-s)^2

        sigma_v = std::sqrt(var_v);
        coupling = sigma_v > 0.0 ? cov / sigma_v : 0.0;
        const double cond = var_x - coupling * coupling;
        sigma_x = cond > 0.0 ? std::sqrt(cond) : 0.0;
    }
};

inline double kinetic_energy(const chain_state& state)
{
    double ke = 0.0;
    for(const auto& v : state.velocities) ke += v.x * v.x + v.y * v.y + v.z * v.z;
    return 0.5 * ke;
}

class langevin_integrator
{
public:
    langevin_integrator(thermostat_params thermostat, double dt)
        : thermostat_(thermostat), dt_(dt), flight_(thermostat.eta, thermostat.kT, dt), noise_(thermostat.seed)
    {
        if(!(dt > 0.0)) throw domain_error("langevin_integrator: dt must be > 0");
        if(!(thermostat.eta >= 0.0) || !(thermostat.kT >= 0.0))
        {
            throw domain_error("langevin_integrator: eta and kT must be >= 0");
        }
    }

    double dt() const { return dt_; }
    std::uint64_t step_index() const { return step_; }
    const thermostat_params& thermostat() const { return thermostat_; }
    const ou_flight& flight() const { return flight_; }

    // Advances state by one timestep with the trap frequency of field.
    void step(chain_state& state, const force_field& field)
    {
        const std::size_t n = state.size();
        if(state.velocities.size() != n) throw domain_error("step: positions/velocities size mismatch");

        refresh_coulomb(state, field.box_length);
        const double half = 0.5 * dt_;
        const double nu2 = field.nu_t * field.nu_t;

        for(std::size_t j = 0; j < n; ++j)
        {
            auto& v = state.velocities[j];
            const auto& r = state.positions[j];
            v.x += half * coulomb_[j].x;
            v.y += half * (coulomb_[j].y - nu2 * r.y);
            v.z += half * (coulomb_[j].z - nu2 * r.z);
        }

        const bool noisy = flight_.sigma_v > 0.0 || flight_.sigma_x > 0.0;
        if(noisy)
        {
            // normals 2k and 2k + 1 drive component k = 3 j + c
            gauss_.resize(6 * n);
            noise_.fill_normals(step_, gauss_);
        }
        for(std::size_t j = 0; j < n; ++j)
        {
            auto& r = state.positions[j];
            auto& v = state.velocities[j];
            double* rc[3] = {&r.x, &r.y, &r.z};
            double* vc[3] = {&v.x, &v.y, &v.z};
            for(std::size_t c = 0; c < 3; ++c)
            {
                double dx = 0.0, dv = 0.0;
                if(noisy)
                {
                    const double g1 = gauss_[6 * j + 2 * c];
                    const double g2 = gauss_[6 * j + 2 * c + 1];
                    dv = flight_.sigma_v * g1;
                    dx = flight_.coupling * g1 + flight_.sigma_x * g2;
                }
                *rc[c] += flight_.drift * *vc[c] + dx;
                *vc[c] = flight_.decay * *vc[c] + dv;
            }
            r.x = wrap_x(r.x, state.box_length);
        }

        coulomb_valid_ = false;
        refresh_coulomb(state, field.box_length);
        bool finite = true;
        for(std::size_t j = 0; j < n; ++j)
        {
            auto& v = state.velocities[j];
            const auto& r = state.positions[j];
            v.x += half * coulomb_[j].x;
            v.y += half * (coulomb_[j].y - nu2 * r.y);
            v.z += half * (coulomb_[j].z - nu2 * r.z);
            finite = finite && std::isfinite(v.x + v.y + v.z + r.x + r.y + r.z);
        }
        if(!finite) throw integration_blowup(step_, "non-finite position or velocity");

        state.time += dt_;
        ++step_;
    }

private:
    // Coulomb forces are cached between steps; the trap term is added per
    // step so a time-dependent nu_t costs nothing extra.
    void refresh_coulomb(const chain_state& state, double box_length)
    {
        if(coulomb_valid_ && cached_positions_ == state.positions && cached_box_ == box_length) return;
        coulomb_.resize(state.size());
        kernel_.compute(state, box_length, coulomb_);
        cached_positions_ = state.positions;
        cached_box_ = box_length;
        coulomb_valid_ = true;
    }

    thermostat_params thermostat_;
    double dt_;
    ou_flight flight_;
    noise_stream noise_;
    std::uint64_t step_ = 0;

    std::vector<double> gauss_;
    coulomb_kernel kernel_;
    std::vector<vec3> coulomb_;
    std::vector<vec3> cached_positions_;
    double cached_box_ = 0.0;
    bool coulomb_valid_ = false;
};

// Runs n_steps at fixed trap frequency and returns the kinetic energy after
// every step.
inline std::vector<double> thermalize(chain_state& state, const force_field& field, langevin_integrator& integrator,
                                      std::uint64_t n_steps)
{
    std::vector<double> ke;
    ke.reserve(n_steps);
    for(std::uint64_t s = 0; s < n_steps; ++s)
    {
        integrator.step(state, field);
        ke.push_back(kinetic_energy(state));
    }
    return ke;
}

} // namespace helix

#endif // HELIX_LANGEVIN_HPP
