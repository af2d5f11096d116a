#pragma once

#include "toruslab/entropy.hpp"
#include "toruslab/errors.hpp"
#include "toruslab/flow.hpp"
#include "toruslab/foliation.hpp"
#include "toruslab/io.hpp"
#include "toruslab/metric.hpp"
#include "toruslab/minimize.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/rotation.hpp"
#include "toruslab/trig_poly.hpp"
#include "toruslab/vec2.hpp"
