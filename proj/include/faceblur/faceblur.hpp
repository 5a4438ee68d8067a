#pragma once

// Core face-anonymization library: geometry, raster kernels, annotation
// parsing, model backends, the two pipelines and the evaluation harness.
// Raster file I/O (raster_io.hpp) and the ONNX backends (neural.hpp) are
// separate headers because they pull in external libraries.

#include "faceblur/backends.hpp"
#include "faceblur/bench.hpp"
#include "faceblur/dataset.hpp"
#include "faceblur/geometry.hpp"
#include "faceblur/image.hpp"
#include "faceblur/imaging.hpp"
#include "faceblur/pipelines.hpp"
