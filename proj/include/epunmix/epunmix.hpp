#pragma once

#include "epunmix/core.hpp"
#include "epunmix/em.hpp"
#include "epunmix/ep.hpp"
#include "epunmix/fcls.hpp"
#include "epunmix/gaussian.hpp"
#include "epunmix/graph.hpp"
#include "epunmix/io.hpp"
#include "epunmix/metrics.hpp"
#include "epunmix/synthetic.hpp"
#include "epunmix/types.hpp"
