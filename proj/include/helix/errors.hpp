#ifndef HELIX_ERRORS_HPP
#define HELIX_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace helix
{

// Invalid argument or precondition outside the mathematical domain of an operation.
struct domain_error : std::domain_error
{
    using std::domain_error::domain_error;
};

// Two ions (or a pair-distance query) at zero separation.
struct singularity_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct integration_blowup : std::runtime_error
{
    integration_blowup(std::uint64_t step, const std::string& what)
        : std::runtime_error("integration blew up at step " + std::to_string(step) + ": " + what),
          step_index(step)
    {}
    std::uint64_t step_index;
};

// Wrapped phase sum not within tolerance of an integer multiple of 2*pi.
struct integrality_violation : std::runtime_error
{
    integrality_violation(double residual, const std::string& what)
        : std::runtime_error(what), residual(residual)
    {}
    double residual;
};

// Ions changed their cyclic order along the ring.
struct ordering_violation : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

} // namespace helix

#endif // HELIX_ERRORS_HPP
