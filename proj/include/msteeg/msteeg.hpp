#pragma once

#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"
#include "msteeg/codebook.hpp"
#include "msteeg/io.hpp"
#include "msteeg/prep.hpp"
#include "msteeg/gfp.hpp"
#include "msteeg/cluster.hpp"
#include "msteeg/tokenize.hpp"
#include "msteeg/spectral.hpp"
#include "msteeg/analytics.hpp"
#include "msteeg/synth.hpp"
#include "msteeg/dataset.hpp"
#include "msteeg/pipeline.hpp"
