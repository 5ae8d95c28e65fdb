#pragma once

#include "beltrami/error.hpp"
#include "beltrami/vec.hpp"
#include "beltrami/ode.hpp"
#include "beltrami/quadrature.hpp"
#include "beltrami/fft.hpp"
#include "beltrami/beltrami_core.hpp"
#include "beltrami/trig_poly.hpp"
#include "beltrami/energy_density.hpp"
#include "beltrami/streamline.hpp"
#include "beltrami/morse.hpp"
#include "beltrami/phase.hpp"
#include "beltrami/vorticity.hpp"
#include "beltrami/dns.hpp"
#include "beltrami/parallel.hpp"
