#pragma once

#include "mldpcs/embedding.hpp"
#include "mldpcs/error.hpp"
#include "mldpcs/lp_oracle.hpp"
#include "mldpcs/numeric.hpp"
#include "mldpcs/privacy.hpp"
#include "mldpcs/reconstruct.hpp"
#include "mldpcs/rng.hpp"
#include "mldpcs/sensing.hpp"
#include "mldpcs/solver.hpp"

#include "mldpcs/harness/dataset.hpp"
#include "mldpcs/harness/io.hpp"
#include "mldpcs/harness/keys.hpp"
#include "mldpcs/harness/metrics.hpp"
#include "mldpcs/harness/pipeline.hpp"
#include "mldpcs/harness/svm.hpp"
#include "mldpcs/harness/sweep.hpp"
