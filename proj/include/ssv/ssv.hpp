#pragma once

#include "ssv/error.hpp"
#include "ssv/geometry.hpp"
#include "ssv/grammar.hpp"
#include "ssv/plan.hpp"
#include "ssv/dataset.hpp"
#include "ssv/aggregate.hpp"
#include "ssv/layout_input.hpp"
#include "ssv/ncd_index.hpp"
#include "ssv/cluster.hpp"
#include "ssv/kdtree.hpp"
#include "ssv/parallel.hpp"
#include "ssv/distributed.hpp"
#include "ssv/rtree.hpp"
#include "ssv/store.hpp"
#include "ssv/verify.hpp"
#include "ssv/pipeline.hpp"
#include "ssv/server.hpp"
#include "ssv/bench.hpp"
