#pragma once

#include "poseforge/augment.hpp"
#include "poseforge/bop_io.hpp"
#include "poseforge/detection.hpp"
#include "poseforge/error.hpp"
#include "poseforge/evaluate.hpp"
#include "poseforge/geometry.hpp"
#include "poseforge/grad_check.hpp"
#include "poseforge/image.hpp"
#include "poseforge/losses.hpp"
#include "poseforge/mesh.hpp"
#include "poseforge/metrics.hpp"
#include "poseforge/nn_index.hpp"
#include "poseforge/ply.hpp"
#include "poseforge/png_io.hpp"
#include "poseforge/postprocess.hpp"
#include "poseforge/random.hpp"
#include "poseforge/raster.hpp"
#include "poseforge/report.hpp"
#include "poseforge/scenegen.hpp"
#include "poseforge/selftest.hpp"
#include "poseforge/text.hpp"
