#ifndef FDGNN_FDGNN_HPP
#define FDGNN_FDGNN_HPP

#include "config.hpp"
#include "config_file.hpp"
#include "cv.hpp"
#include "embedding.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "readout.hpp"
#include "reservoir.hpp"
#include "serialize.hpp"
#include "spectral.hpp"
#include "tudataset.hpp"

#endif // FDGNN_FDGNN_HPP
