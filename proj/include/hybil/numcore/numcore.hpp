#pragma once

#include "hybil/numcore/activation.hpp"
#include "hybil/numcore/conv.hpp"
#include "hybil/numcore/dense.hpp"
#include "hybil/numcore/layer.hpp"
#include "hybil/numcore/loss.hpp"
#include "hybil/numcore/normalize.hpp"
#include "hybil/numcore/pool.hpp"
