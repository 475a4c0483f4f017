#pragma once

#include "sdeblur/bench.hpp"
#include "sdeblur/convolve.hpp"
#include "sdeblur/deconvolve.hpp"
#include "sdeblur/fft.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/io.hpp"
#include "sdeblur/kernel.hpp"
#include "sdeblur/kernel_estimation.hpp"
#include "sdeblur/parallel.hpp"
#include "sdeblur/pipeline.hpp"
#include "sdeblur/predict.hpp"
#include "sdeblur/saliency.hpp"
