#pragma once

// Helpers shared by the experiment drivers.

#include <cstdio>
#include <span>
#include <string>

#include "tensometa/qsim.hpp"

namespace tensometa::harness::detail {

/// <H> at the given angles: exact statevector when noiseless, otherwise the
/// configured noisy backend with a fixed seed (common random numbers).
inline double energy(const qsim::CircuitSpec& c, std::span<const double> angles, const qsim::Hamiltonian& h,
                     const qsim::NoiseSpec& noise, qsim::Backend backend, std::uint64_t seed) {
    if (noise.noiseless()) return qsim::expectation(qsim::simulate_state(c, angles), h);
    return qsim::noisy_expectation(c, angles, h, noise, backend, seed).value;
}

inline std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace tensometa::harness::detail
