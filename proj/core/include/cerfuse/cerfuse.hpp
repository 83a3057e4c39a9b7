#pragma once

#include "cerfuse/compound.hpp"
#include "cerfuse/core.hpp"
#include "cerfuse/error.hpp"
#include "cerfuse/ingest.hpp"
#include "cerfuse/io.hpp"
#include "cerfuse/metrics.hpp"
#include "cerfuse/mhpf.hpp"
#include "cerfuse/synth.hpp"
#include "cerfuse/temporal.hpp"
#include "cerfuse/zeroshot.hpp"
