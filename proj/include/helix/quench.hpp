#ifndef HELIX_QUENCH_HPP
#define HELIX_QUENCH_HPP

#include <helix/errors.hpp>
#include <helix/units.hpp>

#include <cmath>

namespace helix
{

// Three-phase protocol for the transverse trap frequency: hold at nu_start
// for t_thermalize, ramp linearly to nu_end over tau_q, hold at nu_end for
// t_relax. Times are measured from the start of the trajectory.
struct quench_schedule
{
    double nu_start = 2.54;
    double nu_end = 1.68;
    double tau_q = 1000.0;
    double t_thermalize = 400.0;
    double t_relax = 800.0;

    double ramp_start() const { return t_thermalize; }
    double ramp_end() const { return t_thermalize + tau_q; }
    double total_duration() const { return t_thermalize + tau_q + t_relax; }

    bool crosses_critical() const
    {
        const double nc = critical_frequency();
        return (nu_start - nc) * (nu_end - nc) <= 0.0 && nu_start != nu_end;
    }

    void validate(bool require_crossing = true) const
    {
        if(!(nu_start > 0.0) || !(nu_end > 0.0)) throw domain_error("quench: frequencies must be > 0");
        if(!(tau_q > 0.0)) throw domain_error("quench: tau_q must be > 0");
        if(!(t_thermalize >= 0.0) || !(t_relax >= 0.0)) throw domain_error("quench: durations must be >= 0");
        if(require_crossing && !(nu_start > critical_frequency() && critical_frequency() > nu_end))
        {
            throw domain_error("quench: ramp must cross the critical frequency from above");
        }
    }
};

inline double nu_t(const quench_schedule& q, double t)
{
    if(t <= q.ramp_start()) return q.nu_start;
    if(t >= q.ramp_end()) return q.nu_end;
    const double f = (t - q.ramp_start()) / q.tau_q;
    return q.nu_start + f * (q.nu_end - q.nu_start);
}

// delta = nu_t^2 - nu_c^2; positive while the linear chain is stable.
inline double delta(const quench_schedule& q, double t)
{
    const double nu = nu_t(q, t);
    const double nc = critical_frequency();
    return nu * nu - nc * nc;
}

// Effective quench amplitude |2 nu_start (nu_end - nu_start)|, i.e. the
// slope of nu_t^2 linearized at the ramp start, times tau_q.
inline double delta0(const quench_schedule& q)
{
    return std::abs(2.0 * q.nu_start * (q.nu_end - q.nu_start));
}

// Same amplitude with the linearization taken at the critical frequency.
inline double delta0_at_critical(const quench_schedule& q)
{
    return std::abs(2.0 * critical_frequency() * (q.nu_end - q.nu_start));
}

inline double critical_crossing_time(const quench_schedule& q)
{
    const double nc = critical_frequency();
    if(q.nu_start == nc) return q.ramp_start();
    if(!q.crosses_critical()) throw domain_error("critical_crossing_time: schedule does not cross nu_c");
    return q.ramp_start() + q.tau_q * (q.nu_start - nc) / (q.nu_start - q.nu_end);
}

} // namespace helix

#endif // HELIX_QUENCH_HPP
