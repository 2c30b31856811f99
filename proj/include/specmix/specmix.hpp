#pragma once

#include "specmix/aecm.hpp"
#include "specmix/classify.hpp"
#include "specmix/consensus.hpp"
#include "specmix/constraints.hpp"
#include "specmix/density.hpp"
#include "specmix/errors.hpp"
#include "specmix/image.hpp"
#include "specmix/init.hpp"
#include "specmix/io.hpp"
#include "specmix/kmeans.hpp"
#include "specmix/likelihood.hpp"
#include "specmix/linkage.hpp"
#include "specmix/metrics.hpp"
#include "specmix/model.hpp"
#include "specmix/rng.hpp"
#include "specmix/similarity.hpp"
#include "specmix/simgen.hpp"
#include "specmix/subsets.hpp"
