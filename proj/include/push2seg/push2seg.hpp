#pragma once

// Umbrella header for the push2seg library: a deterministic 2D pushing
// simulator, an imperfect initial segmenter, optical-flow multi-object
// tracking, bidirectional mask propagation, segmentation metrics, and an
// analytic top-down grasping benchmark.

#include "push2seg/config.hpp"
#include "push2seg/episode_io.hpp"
#include "push2seg/eval.hpp"
#include "push2seg/flow.hpp"
#include "push2seg/geometry.hpp"
#include "push2seg/grasp.hpp"
#include "push2seg/io.hpp"
#include "push2seg/mask.hpp"
#include "push2seg/percept.hpp"
#include "push2seg/propagate.hpp"
#include "push2seg/rng.hpp"
#include "push2seg/sim.hpp"
#include "push2seg/track.hpp"
