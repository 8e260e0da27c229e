// Umbrella header for the phonological vocoder codec.

#pragma once

#include "pvc/analyzers.hpp"
#include "pvc/audio.hpp"
#include "pvc/bitstream.hpp"
#include "pvc/common.hpp"
#include "pvc/config.hpp"
#include "pvc/corpus.hpp"
#include "pvc/errors.hpp"
#include "pvc/fft.hpp"
#include "pvc/lpc.hpp"
#include "pvc/metrics.hpp"
#include "pvc/mfcc.hpp"
#include "pvc/mlp.hpp"
#include "pvc/pipeline.hpp"
#include "pvc/pitch.hpp"
#include "pvc/prosody.hpp"
#include "pvc/segcodec.hpp"
#include "pvc/snn.hpp"
#include "pvc/synthesis.hpp"
