#ifndef OSBORNE_OSBORNE_HPP
#define OSBORNE_OSBORNE_HPP

#include "osborne/bench.hpp"
#include "osborne/core.hpp"
#include "osborne/errors.hpp"
#include "osborne/instances.hpp"
#include "osborne/io.hpp"
#include "osborne/lowbit.hpp"
#include "osborne/parallel.hpp"
#include "osborne/selection.hpp"
#include "osborne/solver.hpp"

namespace osborne {
inline constexpr const char* version = "0.1.0";
}

#endif
