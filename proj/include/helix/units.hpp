#ifndef HELIX_UNITS_HPP
#define HELIX_UNITS_HPP

// Natural units of the ion ring: ion mass, Coulomb coupling e^2/(4 pi eps0)
// and mean inter-ion spacing are all 1, so the characteristic frequency is 1.

#include <helix/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace helix
{

struct natural_units
{
    double mass = 1.0;
    double charge_coupling = 1.0;
    double spacing = 1.0;

    double omega0() const;
};

// omega0 = sqrt(e^2 / (4 pi eps0 m a^3))
inline double characteristic_frequency(double mass, double charge_coupling, double spacing)
{
    if(!(mass > 0.0) || !(charge_coupling > 0.0) || !(spacing > 0.0))
    {
        throw domain_error("characteristic_frequency: mass, coupling and spacing must be positive");
    }
    return std::sqrt(charge_coupling / (mass * spacing * spacing * spacing));
}

inline double natural_units::omega0() const
{
    return characteristic_frequency(mass, charge_coupling, spacing);
}

// Apery's constant zeta(3) from the central-binomial series
//   zeta(3) = 5/2 * sum_{k>=1} (-1)^(k+1) / (k^3 * binom(2k, k)),
// which gains ~0.6 decimal digits per term.
inline double apery_constant()
{
    double sum = 0.0;
    double binom = 1.0; // binom(2k, k), updated incrementally
    for(int k = 1; k <= 40; ++k)
    {
        binom *= 2.0 * (2.0 * k - 1.0) / k;
        const double term = 1.0 / (static_cast<double>(k) * k * k * binom);
        sum += (k % 2 == 1) ? term : -term;
    }
    return 2.5 * sum;
}

// Transverse frequency below which the equally spaced linear chain is
// unstable against the zigzag mode: sqrt(7 zeta(3) / 2) omega0.
inline double critical_frequency()
{
    return std::sqrt(3.5 * apery_constant());
}

// Physical and numerical parameters of a trajectory, in natural units.
struct sim_params
{
    int n_ions = 400;
    double eta = 4.38;       // friction rate
    double kT = 3.5;         // thermal energy, m omega0^2 a^2
    double dt = 0.01;        // timestep, 1/omega0
    std::uint64_t seed = 0;

    double box_length() const { return static_cast<double>(n_ions); }

    // Throws domain_error unless the parameters are usable with a trap
    // frequency of at most max_nu.
    void validate(double max_nu) const
    {
        if(n_ions <= 0 || n_ions % 2 != 0)
        {
            throw domain_error("n_ions must be a positive even integer (staggered order parameter on a ring)");
        }
        if(!(eta >= 0.0)) throw domain_error("eta must be >= 0");
        if(!(kT >= 0.0)) throw domain_error("kT must be >= 0");
        if(!(dt > 0.0)) throw domain_error("dt must be > 0");
        if(!(dt * std::max(max_nu, eta) < 0.5))
        {
            throw domain_error("dt * max(nu_t, eta) must be < 0.5");
        }
    }
};

} // namespace helix

#endif // HELIX_UNITS_HPP
