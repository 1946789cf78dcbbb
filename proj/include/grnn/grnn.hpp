#pragma once

#include "grnn/core.hpp"
#include "grnn/error.hpp"
#include "grnn/extraction.hpp"
#include "grnn/ingest.hpp"
#include "grnn/metrics.hpp"
#include "grnn/plasticity.hpp"
#include "grnn/regression.hpp"
#include "grnn/simulate.hpp"
#include "grnn/stats.hpp"
#include "grnn/subnet.hpp"
