#pragma once

// Waveform-level simulator of coherent WDM transmission with digital
// backpropagation split between transmitter and receiver.

#include "splitnlc/analytic.hpp"
#include "splitnlc/errors.hpp"
#include "splitnlc/experiment.hpp"
#include "splitnlc/fft.hpp"
#include "splitnlc/fiber.hpp"
#include "splitnlc/frame.hpp"
#include "splitnlc/nlc.hpp"
#include "splitnlc/qam.hpp"
#include "splitnlc/receiver.hpp"
#include "splitnlc/rng.hpp"
#include "splitnlc/rrc.hpp"
#include "splitnlc/signal.hpp"
#include "splitnlc/transmitter.hpp"
