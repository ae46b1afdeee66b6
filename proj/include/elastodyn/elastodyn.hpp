/**
 * @file elastodyn.hpp
 * @brief Umbrella header pulling in the whole library.
 */
#pragma once

#include "config.hpp"
#include "core.hpp"
#include "fft.hpp"
#include "greens.hpp"
#include "integrate.hpp"
#include "io.hpp"
#include "material.hpp"
#include "oracle.hpp"
#include "scenario.hpp"
#include "spectral.hpp"
