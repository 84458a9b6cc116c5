#pragma once

// Umbrella header for the iwv toolkit.

#include "iwv/compose.hpp"
#include "iwv/config.hpp"
#include "iwv/embeddings.hpp"
#include "iwv/errors.hpp"
#include "iwv/harness.hpp"
#include "iwv/io.hpp"
#include "iwv/lexicons.hpp"
#include "iwv/nn.hpp"
#include "iwv/pos.hpp"
#include "iwv/rng.hpp"
#include "iwv/strings.hpp"
