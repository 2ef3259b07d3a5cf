#pragma once

#include "asltrans/align_model.hpp"
#include "asltrans/baselines.hpp"
#include "asltrans/bleu.hpp"
#include "asltrans/corpus.hpp"
#include "asltrans/decoder.hpp"
#include "asltrans/error.hpp"
#include "asltrans/harness.hpp"
#include "asltrans/lang_model.hpp"
