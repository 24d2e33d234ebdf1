#pragma once

#include "ner/constants.hpp"
#include "ner/dynamics.hpp"
#include "ner/efg.hpp"
#include "ner/gates.hpp"
#include "ner/hamiltonian.hpp"
#include "ner/hydrogenic.hpp"
#include "ner/performance.hpp"
#include "ner/quadrature.hpp"
#include "ner/spin.hpp"
#include "ner/types.hpp"
