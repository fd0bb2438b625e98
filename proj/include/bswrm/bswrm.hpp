#pragma once

#include "bswrm/core.hpp"
#include "bswrm/fft.hpp"
#include "bswrm/spectral.hpp"
#include "bswrm/clutter.hpp"
#include "bswrm/dsd.hpp"
#include "bswrm/radar.hpp"
#include "bswrm/zr_tuning.hpp"
#include "bswrm/simulator.hpp"
#include "bswrm/pipeline.hpp"
#include "bswrm/io.hpp"
