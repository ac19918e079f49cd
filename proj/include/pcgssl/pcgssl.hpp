#pragma once

#include "pcgssl/core/error.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/dataio/dataset.hpp"
#include "pcgssl/dataio/patient_file.hpp"
#include "pcgssl/dataio/records.hpp"
#include "pcgssl/dataio/split.hpp"
#include "pcgssl/dataio/wav.hpp"
#include "pcgssl/dsp/resample.hpp"
#include "pcgssl/dsp/window.hpp"
#include "pcgssl/augment/butterworth.hpp"
#include "pcgssl/augment/pipeline.hpp"
#include "pcgssl/augment/transforms.hpp"
#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/nn/checkpoint.hpp"
#include "pcgssl/nn/gradcheck.hpp"
#include "pcgssl/nn/ops.hpp"
#include "pcgssl/nn/optim.hpp"
#include "pcgssl/nn/params.hpp"
#include "pcgssl/nn/schedule.hpp"
#include "pcgssl/nn/tape.hpp"
#include "pcgssl/nn/tensor.hpp"
#include "pcgssl/ssl/nt_xent.hpp"
#include "pcgssl/ssl/pretrain.hpp"
#include "pcgssl/classify/aggregate.hpp"
#include "pcgssl/classify/head.hpp"
#include "pcgssl/classify/predict.hpp"
#include "pcgssl/classify/task.hpp"
#include "pcgssl/eval/grid.hpp"
#include "pcgssl/eval/metrics.hpp"
