#ifndef HELIX_VERSION_HPP
#define HELIX_VERSION_HPP

namespace helix
{
inline constexpr const char* version_string = "0.1.0";
}

#endif // HELIX_VERSION_HPP
