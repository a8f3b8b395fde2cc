#pragma once

#include "supervisim/core.hpp"
#include "supervisim/rng.hpp"
#include "supervisim/genesis.hpp"
#include "supervisim/policies.hpp"
#include "supervisim/feedback.hpp"
#include "supervisim/engine.hpp"
#include "supervisim/ingest.hpp"
#include "supervisim/forecast.hpp"
#include "supervisim/io.hpp"
#include "supervisim/cli.hpp"
