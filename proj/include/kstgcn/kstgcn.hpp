#pragma once

// Convenience include for the whole library.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"
#include "kstgcn/embedding.hpp"
#include "kstgcn/experiment.hpp"
#include "kstgcn/graph.hpp"
#include "kstgcn/gru.hpp"
#include "kstgcn/kscell.hpp"
#include "kstgcn/metrics.hpp"
#include "kstgcn/model.hpp"
#include "kstgcn/speed.hpp"
#include "kstgcn/synth.hpp"
#include "kstgcn/trainer.hpp"
#include "kstgcn/triples.hpp"
