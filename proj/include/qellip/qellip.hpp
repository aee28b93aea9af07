#pragma once

#include <qellip/errors.hpp>     // IWYU pragma: export
#include <qellip/fock.hpp>       // IWYU pragma: export
#include <qellip/io.hpp>         // IWYU pragma: export
#include <qellip/mathieu.hpp>    // IWYU pragma: export
#include <qellip/noise.hpp>      // IWYU pragma: export
#include <qellip/optics.hpp>     // IWYU pragma: export
#include <qellip/phase_space.hpp>  // IWYU pragma: export
