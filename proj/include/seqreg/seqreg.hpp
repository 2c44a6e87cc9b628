#pragma once

// Umbrella header for the sequence-optimization library.

#include "seqreg/bucketizer.hpp"
#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"
#include "seqreg/evalharness.hpp"
#include "seqreg/matrix.hpp"
#include "seqreg/promptgen.hpp"
#include "seqreg/regulator.hpp"
#include "seqreg/rng.hpp"
#include "seqreg/rules.hpp"
#include "seqreg/static_reorder.hpp"
