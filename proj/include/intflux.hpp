#ifndef INTFLUX_HPP
#define INTFLUX_HPP

#include "intflux/analysis.hpp"
#include "intflux/chargegraph.hpp"
#include "intflux/config.hpp"
#include "intflux/decompose.hpp"
#include "intflux/error.hpp"
#include "intflux/field_io.hpp"
#include "intflux/interpolant.hpp"
#include "intflux/lattice.hpp"
#include "intflux/mincut.hpp"
#include "intflux/projector.hpp"
#include "intflux/quadrature.hpp"
#include "intflux/run.hpp"
#include "intflux/sampling.hpp"
#include "intflux/solver.hpp"

#endif  // INTFLUX_HPP
