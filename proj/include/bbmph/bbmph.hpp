#pragma once

#include "bbmph/analysis.hpp"
#include "bbmph/bitvector.hpp"
#include "bbmph/codec.hpp"
#include "bbmph/errors.hpp"
#include "bbmph/hash.hpp"
#include "bbmph/keygen.hpp"
#include "bbmph/keys.hpp"
#include "bbmph/mphf.hpp"
#include "bbmph/parallel.hpp"
#include "bbmph/spill.hpp"
