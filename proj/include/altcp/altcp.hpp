#pragma once

#include "altcp/decomposition.hpp"
#include "altcp/dense_tensor.hpp"
#include "altcp/diagnostics.hpp"
#include "altcp/dims.hpp"
#include "altcp/error.hpp"
#include "altcp/experiment.hpp"
#include "altcp/factored_tensor.hpp"
#include "altcp/init.hpp"
#include "altcp/linalg.hpp"
#include "altcp/power.hpp"
#include "altcp/refine.hpp"
#include "altcp/rng.hpp"
#include "altcp/synthetic.hpp"
#include "altcp/tensor_io.hpp"
#include "altcp/tensor_view.hpp"
#include "altcp/version.hpp"
