#pragma once

#include "milne/config.hpp"
#include "milne/diagnostics.hpp"
#include "milne/discretization.hpp"
#include "milne/elliptic.hpp"
#include "milne/errors.hpp"
#include "milne/io.hpp"
#include "milne/linearized.hpp"
#include "milne/milne.hpp"
#include "milne/parallel.hpp"
#include "milne/pipeline.hpp"
#include "milne/spectral.hpp"
#include "milne/transport.hpp"
