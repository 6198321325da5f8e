#pragma once

#include "emodrift/analogy.hpp"
#include "emodrift/config.hpp"
#include "emodrift/corpus.hpp"
#include "emodrift/drift.hpp"
#include "emodrift/embedding.hpp"
#include "emodrift/emoji_data.hpp"
#include "emodrift/error.hpp"
#include "emodrift/pipeline.hpp"
#include "emodrift/random.hpp"
#include "emodrift/shapiro_wilk.hpp"
#include "emodrift/skipgram.hpp"
#include "emodrift/synthetic.hpp"
#include "emodrift/timeseries.hpp"
#include "emodrift/tokenizer.hpp"
#include "emodrift/utf8.hpp"
#include "emodrift/vocabulary.hpp"
