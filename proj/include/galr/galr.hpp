#pragma once

#include "galr/attention.hpp"
#include "galr/config.hpp"
#include "galr/encoder.hpp"
#include "galr/error.hpp"
#include "galr/framing.hpp"
#include "galr/galr_block.hpp"
#include "galr/gradcheck.hpp"
#include "galr/model_io.hpp"
#include "galr/ops_elementwise.hpp"
#include "galr/ops_linalg.hpp"
#include "galr/ops_norm.hpp"
#include "galr/ops_shape.hpp"
#include "galr/parallel.hpp"
#include "galr/parameters.hpp"
#include "galr/random.hpp"
#include "galr/recurrent.hpp"
#include "galr/tensor.hpp"
#include "galr/verification.hpp"
#include "galr/wav.hpp"
