#pragma once

#include "semsig/channel.hpp"
#include "semsig/config.hpp"
#include "semsig/domain_adapt.hpp"
#include "semsig/entropy.hpp"
#include "semsig/error.hpp"
#include "semsig/experiment.hpp"
#include "semsig/hashing.hpp"
#include "semsig/io.hpp"
#include "semsig/kernel.hpp"
#include "semsig/retrieval.hpp"
#include "semsig/types.hpp"
