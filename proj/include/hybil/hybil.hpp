#pragma once

// Everything in one include.

#include "hybil/cli/commands.hpp"
#include "hybil/cli/config.hpp"
#include "hybil/core/error.hpp"
#include "hybil/core/random.hpp"
#include "hybil/core/tensor.hpp"
#include "hybil/dataio/checkpoint.hpp"
#include "hybil/dataio/dataset_io.hpp"
#include "hybil/dataio/manifest.hpp"
#include "hybil/dataio/schema.hpp"
#include "hybil/dataio/synth.hpp"
#include "hybil/dataio/tensor_io.hpp"
#include "hybil/metrics/confusion.hpp"
#include "hybil/metrics/mann_whitney.hpp"
#include "hybil/metrics/report.hpp"
#include "hybil/models/bilinear.hpp"
#include "hybil/models/model.hpp"
#include "hybil/numcore/numcore.hpp"
#include "hybil/preprocess/corpus.hpp"
#include "hybil/preprocess/stft.hpp"
#include "hybil/training/crossval.hpp"
#include "hybil/training/trainer.hpp"
