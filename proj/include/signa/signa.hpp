#pragma once

#include "signa/diffcore/adam.hpp"
#include "signa/diffcore/error.hpp"
#include "signa/diffcore/gradcheck.hpp"
#include "signa/diffcore/ops.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tape.hpp"
#include "signa/diffcore/tensor.hpp"
#include "signa/graph/adjacency.hpp"
#include "signa/graph/graph.hpp"
#include "signa/graph/homophily.hpp"
#include "signa/graph/io.hpp"
#include "signa/graph/sbm.hpp"
#include "signa/encoder.hpp"
#include "signa/contrast.hpp"
#include "signa/trainer/checkpoint.hpp"
#include "signa/trainer/config.hpp"
#include "signa/trainer/train.hpp"
#include "signa/evaluate/histograms.hpp"
#include "signa/evaluate/kmeans.hpp"
#include "signa/evaluate/metrics.hpp"
#include "signa/evaluate/probe.hpp"
#include "signa/evaluate/report.hpp"
#include "signa/evaluate/timing.hpp"
