#ifndef IQNET_IQNET_HPP
#define IQNET_IQNET_HPP

#include "iqnet/error.hpp"
#include "iqnet/lattice.hpp"
#include "iqnet/kernel.hpp"
#include "iqnet/noise.hpp"
#include "iqnet/dynamics.hpp"
#include "iqnet/cftp.hpp"
#include "iqnet/oracle.hpp"
#include "iqnet/statistics.hpp"
#include "iqnet/parallel.hpp"
#include "iqnet/verify.hpp"
#include "iqnet/suite.hpp"
#include "iqnet/config.hpp"
#include "iqnet/runner.hpp"

#endif  // IQNET_IQNET_HPP
