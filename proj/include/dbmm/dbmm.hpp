#pragma once

#include "dbmm/analysis.hpp"
#include "dbmm/anomaly.hpp"
#include "dbmm/config.hpp"
#include "dbmm/features.hpp"
#include "dbmm/io.hpp"
#include "dbmm/nmf.hpp"
#include "dbmm/parallel.hpp"
#include "dbmm/pipeline.hpp"
#include "dbmm/prediction.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/synthetic.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/transitions.hpp"
#include "dbmm/types.hpp"
