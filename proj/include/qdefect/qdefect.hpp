#pragma once

#include "qdefect/cli.hpp"
#include "qdefect/config.hpp"
#include "qdefect/defects.hpp"
#include "qdefect/energy.hpp"
#include "qdefect/error.hpp"
#include "qdefect/field.hpp"
#include "qdefect/field_io.hpp"
#include "qdefect/minimize.hpp"
#include "qdefect/parallel.hpp"
#include "qdefect/perturb.hpp"
#include "qdefect/polynomial.hpp"
#include "qdefect/qcore.hpp"
